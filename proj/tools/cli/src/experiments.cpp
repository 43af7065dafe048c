#include "popcode_cli/experiments.hpp"

#include "popcode/error.hpp"
#include "popcode/fisher.hpp"
#include "popcode/mc.hpp"
#include "popcode/mi.hpp"
#include "popcode/optimize.hpp"
#include "popcode/parallel.hpp"
#include "popcode/transform.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

namespace popcode::cli {

namespace {

using nlohmann::json;

double mean_of(const std::vector<double>& v) {
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Sample standard deviation across repeats (0 for a single repeat).
double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) {
    return 0.0;
  }
  const double m = mean_of(v);
  std::vector<double> d(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    d[i] = (v[i] - m) * (v[i] - m);
  }
  return std::sqrt(pairwise_sum(d) / static_cast<double>(v.size() - 1));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  std::mt19937_64 rng(seq);
  return rng();
}

PoissonPopulation fig1_population(const ModelParams& m, std::size_t n) {
  PoissonPopulation pop;
  for (double c : tuning_centers(n, m.center_span)) {
    pop.tuning.emplace_back(VonMisesTuning(m.amplitude, m.tuning_width, m.period, c));
  }
  return pop;
}

// Tuning-parameter grid for the optimizer: midpoints of `count` equal cells
// over [-span/2, span/2), so the grid is symmetric under reflection.
std::vector<TuningCurve> theta_grid(const ModelParams& m, std::size_t count, double span) {
  const double s = span > 0.0 ? span : m.period;
  std::vector<TuningCurve> out;
  for (std::size_t k = 0; k < count; ++k) {
    const double c = -0.5 * s + (static_cast<double>(k) + 0.5) * s / static_cast<double>(count);
    out.emplace_back(VonMisesTuning(m.amplitude, m.tuning_width, m.period, c));
  }
  return out;
}

}  // namespace

std::vector<double> tuning_centers(std::size_t n, double span) {
  std::vector<double> c(n, 0.0);
  if (n == 1) {
    return c;
  }
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = static_cast<double>(i) * span / static_cast<double>(n - 1) - 0.5 * span;
  }
  return c;
}

RunResult run_fig1(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  const GridPrior1D prior = GridPrior1D::von_mises(m.prior_width, m.period, cfg.mc.grid_size);
  const PriorDensity pd = prior;
  const Quadrature quad = grid_quadrature(prior);
  const double h = entropy(pd);

  RunResult res;
  Table& t = res.table;
  t.add_column("N");
  for (const char* c : {"I_MC", "I_std", "I_G", "I_Gplus", "I_F"}) {
    t.add_column(c, true);
  }
  for (const char* c : {"DI_G", "DI_Gplus", "DI_F", "DI_std"}) {
    t.add_column(c);
  }
  t.add_column("I_MC_sd", true);
  for (const char* c : {"DI_G_sd", "DI_Gplus_sd", "DI_F_sd", "repeats"}) {
    t.add_column(c);
  }

  for (std::size_t n : cfg.n_list) {
    const PopulationModel model = fig1_population(m, n);
    const auto info = evaluate_info(population_fisher(model), pd, quad);
    const double ig = i_g(info, quad, h).value;
    const double igp = i_g_plus(info, quad, h).value;
    const double iff = i_f(info, quad, h).value;

    std::vector<double> imc, istd, dig, digp, dif, dstd;
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
      MCConfig mc{cfg.mc.j_max, cfg.mc.i_max, cfg.mc.grid_size, derive_seed(cfg.seed, n, r)};
      const MCResult out = mc_mutual_information(model, prior, mc);
      imc.push_back(out.i_mc);
      istd.push_back(out.i_std);
      dig.push_back(relative_error(ig, out));
      digp.push_back(relative_error(igp, out));
      dif.push_back(std::isfinite(iff) ? relative_error(iff, out) : -std::numeric_limits<double>::infinity());
      dstd.push_back(out.di_std);
    }
    t.rows.push_back({static_cast<std::int64_t>(n), mean_of(imc), mean_of(istd), ig, igp, iff, mean_of(dig),
                      mean_of(digp), mean_of(dif), mean_of(dstd), sd_of(imc), sd_of(dig), sd_of(digp),
                      sd_of(dif), static_cast<std::int64_t>(cfg.repeats)});
  }
  res.report["entropy"] = h;
  return res;
}

RunResult run_fig2(const ExperimentConfig& cfg) {
  const auto& f = cfg.fig2;
  struct Job {
    std::size_t w;
    Vector spectrum;
  };
  std::vector<Job> jobs;
  if (f.source == "patches") {
    const bool csv = f.patch_format == "csv" ||
                     (f.patch_format == "auto" && f.patch_file.size() >= 4 &&
                      f.patch_file.compare(f.patch_file.size() - 4, 4, ".csv") == 0);
    const Matrix patches = csv ? read_patches_csv(f.patch_file) : read_patches_binary(f.patch_file);
    const auto k = static_cast<std::size_t>(patches.cols());
    const auto w = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(k))));
    jobs.push_back({w * w == k ? w : 0, patch_spectrum(patches)});
  } else {
    for (std::size_t w : f.widths) {
      jobs.push_back({w, power_law_spectrum(w * w, f.exponent)});
    }
  }

  std::vector<std::vector<Fig2Gap>> gaps(jobs.size());
  // Rows are independent; each one draws from its own random stream.
  parallel_for(jobs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      gaps[i] = fig2_random_mixing(jobs[i].spectrum, f.n_list, cfg.seed, jobs[i].w);
    }
  });

  RunResult res;
  Table& t = res.table;
  t.add_column("w");
  t.add_column("K");
  t.add_column("N");
  t.add_column("I_G", true);
  t.add_column("I_F", true);
  t.add_column("dI_F", true);
  t.add_column("DI_F");
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    for (std::size_t j = 0; j < f.n_list.size(); ++j) {
      const Fig2Gap& g = gaps[i][j];
      t.rows.push_back({static_cast<std::int64_t>(jobs[i].w), static_cast<std::int64_t>(jobs[i].spectrum.size()),
                        static_cast<std::int64_t>(f.n_list[j]), g.i_g, g.i_f, g.d_i_f, g.rel_i_f});
    }
  }
  res.report["source"] = f.source;
  return res;
}

RunResult run_optimize(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  const auto& o = cfg.optimize;
  const GridPrior1D prior = GridPrior1D::von_mises(m.prior_width, m.period, o.grid_size);
  OptimizationProblem prob;
  prob.kind = o.objective == "I_F" ? ObjectiveKind::I_F : ObjectiveKind::I_G;
  prob.thetas = theta_grid(m, o.theta_count, o.theta_span);
  prob.prior = prior;
  prob.x_nodes = grid_quadrature(prior);
  prob.population = o.population;
  prob.kernel = poisson_kernel();
  if (o.constraint == "peak") {
    prob.peak_power = o.limit;
  } else if (o.constraint == "average") {
    prob.average_power = o.limit;
  }

  MaximizeOptions opts;
  opts.tol = o.tol;
  opts.max_iters = o.max_iters;
  const MaximizeResult r = maximize(prob, opts);
  const PreparedProblem prep(prob);
  const Vector uniform = Vector::Constant(static_cast<Eigen::Index>(prob.thetas.size()),
                                          1.0 / static_cast<double>(prob.thetas.size()));

  RunResult res;
  Table& t = res.table;
  t.add_column("k");
  t.add_column("theta");
  t.add_column("alpha");
  t.add_column("gradient");
  t.add_column("mean_rate");
  for (std::size_t k = 0; k < prob.thetas.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    t.rows.push_back({static_cast<std::int64_t>(k), std::get<VonMisesTuning>(prob.thetas[k]).center(), r.alpha(i),
                      r.kkt.gradient(i), prep.mean_rates()(i)});
  }
  const double scale = cfg.bits ? 1.0 / std::numbers::ln2 : 1.0;
  json trace = json::array();
  for (double v : r.trace) {
    trace.push_back(v * scale);
  }
  res.report = {
      {"objective", r.value * scale},
      {"objective_uniform", prep.value(uniform) * scale},
      {"iterations", r.iterations},
      {"converged", r.converged},
      {"fw_gap", r.gap},
      {"trace", trace},
      {"kkt",
       {{"lambda1", r.kkt.lambda1},
        {"mu", r.kkt.mu},
        {"active_count", r.kkt.active_count},
        {"equality_violation", r.kkt.equality_violation},
        {"inequality_violation", r.kkt.inequality_violation}}},
  };
  if (prob.average_power) {
    res.report["average_power_slack"] = *prob.average_power - prep.mean_rates().dot(r.alpha);
  }
  if (prob.peak_power) {
    res.report["peak_power"] = *prob.peak_power;
  }
  return res;
}

RunResult run_capacity(const ExperimentConfig& cfg) {
  const auto& m = cfg.model;
  const auto& c = cfg.capacity;
  const GridPrior1D prior = GridPrior1D::von_mises(m.prior_width, m.period, c.grid_size);
  const PriorDensity pd = prior;
  const Quadrature quad = grid_quadrature(prior);

  MatrixField fisher;
  PopulationModel model = PoissonPopulation{};
  if (c.source == "constant") {
    const double j0 = c.j0;
    fisher = [j0](const Vector&) { return Matrix::Constant(1, 1, j0); };
  } else {
    const auto n = static_cast<std::size_t>(std::llround(c.population));
    if (c.source == "population") {
      model = fig1_population(m, n);
    } else {
      PoissonPopulation pop;
      pop.tuning.assign(n, VonMisesTuning(m.amplitude, m.tuning_width, m.period, c.center));
      model = pop;
    }
    fisher = population_fisher(model);
  }
  const auto info = evaluate_info(fisher, pd, quad);
  std::vector<Matrix> mats;
  for (const auto& i : info) {
    mats.push_back(c.matrix == "G" ? i.G : i.J);
  }
  const std::vector<double> vol(prior.size(), prior.spacing());
  const CapacityPrior cap = capacity_prior(mats, vol);
  const MIApproximation ig = i_g(info, quad, entropy(pd));

  RunResult res;
  Table& t = res.table;
  t.add_column("x");
  t.add_column("p_star");
  t.add_column("prior_density");
  double dev = 0.0;
  const double uniform = 1.0 / m.period;
  for (std::size_t k = 0; k < prior.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    t.rows.push_back({prior.nodes()[k], cap.density(i), prior.density(k)});
    dev = std::max(dev, std::abs(cap.density(i) - uniform));
  }
  const double scale = cfg.bits ? 1.0 / std::numbers::ln2 : 1.0;
  res.report = {
      {"capacity", cap.capacity * scale},
      {"i_g", ig.value * scale},
      {"max_abs_deviation_from_uniform", dev},
  };
  if (cap.capacity > 0.0 && !ig.degenerate) {
    res.report["redundancy"] = redundancy(ig.value, cap.capacity);
  }
  return res;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.experiment == "fig1") {
    return run_fig1(cfg);
  }
  if (cfg.experiment == "fig2") {
    return run_fig2(cfg);
  }
  if (cfg.experiment == "optimize") {
    return run_optimize(cfg);
  }
  return run_capacity(cfg);
}

RunResult run_and_write(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  RunResult res = run_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string path = cfg.out.empty() ? cfg.experiment + ".csv" : cfg.out;
  write_text(path, render_csv(res.table, cfg.hash(), cfg.seed, cfg.bits));
  json side = {
      {"experiment", cfg.experiment},
      {"config", cfg.to_json()},
      {"config_hash", cfg.hash()},
      {"seed", cfg.seed},
      {"units", cfg.bits ? "bits" : "nats"},
      {"version", POPCODE_VERSION},
      {"wall_time_s", wall},
      {"report", res.report},
  };
  write_text(path + ".json", side.dump(2) + "\n");
  return res;
}

}  // namespace popcode::cli
