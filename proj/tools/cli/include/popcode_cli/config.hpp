#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace popcode::cli {

/// Raised for anything wrong with the configuration (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelParams {
  double amplitude = 20.0;
  double tuning_width = 0.5;
  double prior_width = 0.7853981633974483;  // pi/4
  double period = 3.141592653589793;
  double center_span = 1.0;  // T_theta
};

struct MCParams {
  std::size_t j_max = 50000;
  std::size_t i_max = 100;
  std::size_t grid_size = 500;
};

struct Fig2Params {
  std::string source = "synthetic";  // synthetic | patches
  std::string patch_file;
  std::string patch_format = "auto";  // auto | binary | csv
  double exponent = 2.0;
  std::vector<std::size_t> widths = {2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
  std::vector<std::size_t> n_list = {10000, 20000, 50000, 100000};
};

struct OptimizeParams {
  std::string objective = "I_G";  // I_G | I_F
  std::size_t theta_count = 21;
  double theta_span = 0.0;  // 0 means the full period
  double population = 30.0;
  double tol = 1e-8;
  std::size_t max_iters = 20000;
  std::string constraint = "none";  // none | peak | average
  double limit = 0.0;
  std::size_t grid_size = 500;
};

struct CapacityParams {
  std::string source = "population";  // population | delta | constant
  std::string matrix = "J";            // J | G
  double population = 30.0;
  double center = 0.1;
  double j0 = 1.0;
  std::size_t grid_size = 500;
};

struct ExperimentConfig {
  std::string experiment;
  ModelParams model;
  std::vector<std::size_t> n_list = {2, 3, 4, 6, 10, 14, 20, 30, 50, 100};
  MCParams mc;
  std::uint64_t seed = 1;
  std::size_t repeats = 10;
  bool paper_scale = false;
  bool bits = false;
  std::string out;
  Fig2Params fig2;
  OptimizeParams optimize;
  CapacityParams capacity;

  nlohmann::json to_json() const;
  /// Throws ConfigError on unknown keys, wrong types or invalid values.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::string& experiment);
  static ExperimentConfig load(const std::string& path, const std::string& experiment);

  /// FNV-1a of the canonical JSON dump, excluding the output path.
  std::string hash() const;
  void validate() const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> repeats;
  bool paper_scale = false;
  bool bits = false;
};

/// Flags win over config fields; --paper-scale replaces the MC sizes and N list.
void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

inline const std::vector<std::size_t> kPaperNList = {2, 3, 4, 6, 10, 14, 20, 30, 50, 100, 200, 400, 700, 1000};

}  // namespace popcode::cli
