#pragma once

#include "popcode_cli/config.hpp"
#include "popcode_cli/output.hpp"

#include <json.hpp>

#include <vector>

namespace popcode::cli {

struct RunResult {
  Table table;
  nlohmann::json report = nlohmann::json::object();
};

/// Fig-1 centers theta_n = (n-1) T_theta / (N-1) - T_theta / 2 (0 for N = 1).
std::vector<double> tuning_centers(std::size_t n, double span);

RunResult run_fig1(const ExperimentConfig& cfg);
RunResult run_fig2(const ExperimentConfig& cfg);
RunResult run_optimize(const ExperimentConfig& cfg);
RunResult run_capacity(const ExperimentConfig& cfg);
RunResult run_experiment(const ExperimentConfig& cfg);

/// Runs the experiment and writes `cfg.out` (CSV) plus `cfg.out + ".json"`.
/// Returns the result for callers that also want it in memory.
RunResult run_and_write(const ExperimentConfig& cfg);

}  // namespace popcode::cli
