#include "popcode/error.hpp"
#include "popcode_cli/config.hpp"
#include "popcode_cli/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fisher-information approximations to population-code mutual information"};
  app.set_version_flag("--version", POPCODE_VERSION);

  std::string experiment;
  std::string config_path;
  popcode::cli::Overrides o;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t repeats = 0;

  app.add_option("experiment", experiment, "fig1 | fig2 | optimize | capacity")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig2", "optimize", "capacity"}));
  app.add_option("--config", config_path, "JSON experiment configuration")->required();
  app.add_flag("--paper-scale", o.paper_scale, "j_max=5e5, M=1000 and the full N list");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed");
  auto* out_opt = app.add_option("--out", out, "output CSV path (sidecar: <out>.json)");
  auto* rep_opt = app.add_option("--repeats", repeats, "independent MC repeats per row")->check(CLI::PositiveNumber);
  app.add_flag("--bits", o.bits, "report information in bits instead of nats");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) {
    o.seed = seed;
  }
  if (*out_opt) {
    o.out = out;
  }
  if (*rep_opt) {
    o.repeats = repeats;
  }

  try {
    auto cfg = popcode::cli::ExperimentConfig::load(config_path, experiment);
    popcode::cli::apply_overrides(cfg, o);
    cfg.validate();
    popcode::cli::run_and_write(cfg);
  } catch (const popcode::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const popcode::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    const auto c = e.code();
    return c == popcode::Errc::invalid_parameter || c == popcode::Errc::io_error ? kExitConfig : kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
