#pragma once

#include "popcode/models.hpp"
#include "popcode/prior.hpp"

#include <cstddef>
#include <cstdint>

namespace popcode {

struct MCConfig {
  std::size_t j_max = 50000;
  std::size_t i_max = 100;
  std::size_t grid_size = 500;  // M; must match the prior grid
  std::uint64_t seed = 1;

  void validate() const;
};

struct MCResult {
  double i_mc_star = 0.0;  // plain sample average over all j_max draws
  double i_mc = 0.0;       // mean of the bootstrap replicates
  double i_std = 0.0;      // population std of the replicates
  double di_std = 0.0;     // i_std / i_mc
  std::size_t samples = 0;
  std::size_t replicates = 0;
};

/// Monte Carlo MI with the stimulus restricted to the prior grid:
/// x_j ~ p(x_m), r_j ~ p(r | x_j), and
///   ln p(r_j) = logsumexp_m(ln p(r_j | x_m) + ln p(x_m)).
/// Bootstrap replicates resample the per-sample log ratios with replacement
/// from a separate random stream. The result depends only on (model, prior,
/// cfg), not on the number of worker threads.
MCResult mc_mutual_information(const PopulationModel& model, const GridPrior1D& prior,
                               const MCConfig& cfg);

/// (approx - I_MC) / I_MC. Throws Errc::undefined_ratio when I_MC == 0.
double relative_error(double approx, const MCResult& mc);

}  // namespace popcode
