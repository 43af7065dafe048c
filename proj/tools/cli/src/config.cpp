#include "popcode_cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace popcode::cli {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) {
    return;
  }
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void positive(double v, const std::string& name) {
  if (!(v > 0.0)) {
    throw ConfigError(name + " must be > 0");
  }
}

void one_of(const std::string& v, const std::set<std::string>& options, const std::string& name) {
  if (!options.count(v)) {
    throw ConfigError(name + ": unsupported value '" + v + "'");
  }
}

}  // namespace

json ExperimentConfig::to_json() const {
  return json{
      {"experiment", experiment},
      {"model",
       {{"amplitude", model.amplitude},
        {"tuning_width", model.tuning_width},
        {"prior_width", model.prior_width},
        {"period", model.period},
        {"center_span", model.center_span}}},
      {"n_list", n_list},
      {"mc", {{"j_max", mc.j_max}, {"i_max", mc.i_max}, {"grid_size", mc.grid_size}}},
      {"seed", seed},
      {"repeats", repeats},
      {"paper_scale", paper_scale},
      {"bits", bits},
      {"out", out},
      {"fig2",
       {{"source", fig2.source},
        {"patch_file", fig2.patch_file},
        {"patch_format", fig2.patch_format},
        {"exponent", fig2.exponent},
        {"widths", fig2.widths},
        {"n_list", fig2.n_list}}},
      {"optimize",
       {{"objective", optimize.objective},
        {"theta_count", optimize.theta_count},
        {"theta_span", optimize.theta_span},
        {"population", optimize.population},
        {"tol", optimize.tol},
        {"max_iters", optimize.max_iters},
        {"constraint", optimize.constraint},
        {"limit", optimize.limit},
        {"grid_size", optimize.grid_size}}},
      {"capacity",
       {{"source", capacity.source},
        {"matrix", capacity.matrix},
        {"population", capacity.population},
        {"center", capacity.center},
        {"j0", capacity.j0},
        {"grid_size", capacity.grid_size}}},
  };
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::string& experiment) {
  check_keys(j, {"experiment", "model", "n_list", "mc", "seed", "repeats", "paper_scale", "bits", "out",
                 "fig2", "optimize", "capacity"},
             "config");
  ExperimentConfig c;
  c.experiment = experiment;
  std::string declared;
  read(j, "experiment", declared, "config");
  if (!declared.empty() && declared != experiment) {
    throw ConfigError("config declares experiment '" + declared + "' but '" + experiment + "' was requested");
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m, {"amplitude", "tuning_width", "prior_width", "period", "center_span"}, "model");
    read(m, "amplitude", c.model.amplitude, "model");
    read(m, "tuning_width", c.model.tuning_width, "model");
    read(m, "prior_width", c.model.prior_width, "model");
    read(m, "period", c.model.period, "model");
    read(m, "center_span", c.model.center_span, "model");
  }
  read(j, "n_list", c.n_list, "config");
  if (j.contains("mc")) {
    const json& m = j.at("mc");
    check_keys(m, {"j_max", "i_max", "grid_size"}, "mc");
    read(m, "j_max", c.mc.j_max, "mc");
    read(m, "i_max", c.mc.i_max, "mc");
    read(m, "grid_size", c.mc.grid_size, "mc");
  }
  read(j, "seed", c.seed, "config");
  read(j, "repeats", c.repeats, "config");
  read(j, "paper_scale", c.paper_scale, "config");
  read(j, "bits", c.bits, "config");
  read(j, "out", c.out, "config");
  if (j.contains("fig2")) {
    const json& f = j.at("fig2");
    check_keys(f, {"source", "patch_file", "patch_format", "exponent", "widths", "n_list"}, "fig2");
    read(f, "source", c.fig2.source, "fig2");
    read(f, "patch_file", c.fig2.patch_file, "fig2");
    read(f, "patch_format", c.fig2.patch_format, "fig2");
    read(f, "exponent", c.fig2.exponent, "fig2");
    read(f, "widths", c.fig2.widths, "fig2");
    read(f, "n_list", c.fig2.n_list, "fig2");
  }
  if (j.contains("optimize")) {
    const json& o = j.at("optimize");
    check_keys(o, {"objective", "theta_count", "theta_span", "population", "tol", "max_iters", "constraint",
                   "limit", "grid_size"},
               "optimize");
    read(o, "objective", c.optimize.objective, "optimize");
    read(o, "theta_count", c.optimize.theta_count, "optimize");
    read(o, "theta_span", c.optimize.theta_span, "optimize");
    read(o, "population", c.optimize.population, "optimize");
    read(o, "tol", c.optimize.tol, "optimize");
    read(o, "max_iters", c.optimize.max_iters, "optimize");
    read(o, "constraint", c.optimize.constraint, "optimize");
    read(o, "limit", c.optimize.limit, "optimize");
    read(o, "grid_size", c.optimize.grid_size, "optimize");
  }
  if (j.contains("capacity")) {
    const json& o = j.at("capacity");
    check_keys(o, {"source", "matrix", "population", "center", "j0", "grid_size"}, "capacity");
    read(o, "source", c.capacity.source, "capacity");
    read(o, "matrix", c.capacity.matrix, "capacity");
    read(o, "population", c.capacity.population, "capacity");
    read(o, "center", c.capacity.center, "capacity");
    read(o, "j0", c.capacity.j0, "capacity");
    read(o, "grid_size", c.capacity.grid_size, "capacity");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return from_json(j, experiment);
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  j.erase("out");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void ExperimentConfig::validate() const {
  one_of(experiment, {"fig1", "fig2", "optimize", "capacity"}, "experiment");
  positive(model.amplitude, "model.amplitude");
  positive(model.tuning_width, "model.tuning_width");
  positive(model.prior_width, "model.prior_width");
  positive(model.period, "model.period");
  if (!(model.center_span >= 0.0)) {
    throw ConfigError("model.center_span must be >= 0");
  }
  if (repeats < 1) {
    throw ConfigError("repeats must be >= 1");
  }
  if (experiment == "fig1") {
    if (n_list.empty()) {
      throw ConfigError("n_list must not be empty");
    }
    for (auto n : n_list) {
      if (n < 1) {
        throw ConfigError("n_list entries must be >= 1");
      }
    }
    if (mc.j_max < 1 || mc.i_max < 1 || mc.grid_size < 5) {
      throw ConfigError("mc: need j_max >= 1, i_max >= 1, grid_size >= 5");
    }
  }
  if (experiment == "fig2") {
    one_of(fig2.source, {"synthetic", "patches"}, "fig2.source");
    one_of(fig2.patch_format, {"auto", "binary", "csv"}, "fig2.patch_format");
    if (fig2.source == "patches" && fig2.patch_file.empty()) {
      throw ConfigError("fig2.patch_file is required when fig2.source is 'patches'");
    }
    if (fig2.n_list.empty() || fig2.widths.empty()) {
      throw ConfigError("fig2: widths and n_list must not be empty");
    }
    for (std::size_t i = 0; i < fig2.n_list.size(); ++i) {
      if (fig2.n_list[i] < 1 || (i > 0 && fig2.n_list[i] <= fig2.n_list[i - 1])) {
        throw ConfigError("fig2.n_list must be positive and strictly increasing");
      }
    }
    for (auto w : fig2.widths) {
      if (w < 1) {
        throw ConfigError("fig2.widths entries must be >= 1");
      }
    }
  }
  if (experiment == "optimize") {
    one_of(optimize.objective, {"I_G", "I_F"}, "optimize.objective");
    one_of(optimize.constraint, {"none", "peak", "average"}, "optimize.constraint");
    if (optimize.constraint != "none") {
      positive(optimize.limit, "optimize.limit");
    }
    if (optimize.theta_count < 1 || optimize.grid_size < 5) {
      throw ConfigError("optimize: need theta_count >= 1 and grid_size >= 5");
    }
    positive(optimize.population, "optimize.population");
    positive(optimize.tol, "optimize.tol");
    if (!(optimize.theta_span >= 0.0)) {
      throw ConfigError("optimize.theta_span must be >= 0");
    }
  }
  if (experiment == "capacity") {
    one_of(capacity.source, {"population", "delta", "constant"}, "capacity.source");
    one_of(capacity.matrix, {"J", "G"}, "capacity.matrix");
    positive(capacity.population, "capacity.population");
    positive(capacity.j0, "capacity.j0");
    if (capacity.grid_size < 5) {
      throw ConfigError("capacity.grid_size must be >= 5");
    }
  }
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (o.out) {
    cfg.out = *o.out;
  }
  if (o.repeats) {
    cfg.repeats = *o.repeats;
  }
  if (o.bits) {
    cfg.bits = true;
  }
  if (o.paper_scale) {
    cfg.paper_scale = true;
  }
  if (cfg.paper_scale) {
    cfg.mc.j_max = 500000;
    cfg.mc.grid_size = 1000;
    cfg.n_list = kPaperNList;
  }
}

}  // namespace popcode::cli
