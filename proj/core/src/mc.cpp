#include "popcode/mc.hpp"

#include "popcode/error.hpp"
#include "popcode/linalg.hpp"
#include "popcode/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace popcode {

namespace {

constexpr std::size_t kBlock = 512;

enum Stream : std::uint64_t { responses = 0, bootstrap = 1 };

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

void MCConfig::validate() const {
  if (j_max < 1 || i_max < 1 || grid_size < 2) {
    throw Error(Errc::invalid_parameter, "MC config: need j_max >= 1, i_max >= 1, M >= 2");
  }
}

MCResult mc_mutual_information(const PopulationModel& model, const GridPrior1D& prior,
                               const MCConfig& cfg) {
  cfg.validate();
  if (prior.size() != cfg.grid_size) {
    throw Error(Errc::invalid_parameter, "MC: prior grid has " + std::to_string(prior.size()) +
                                             " nodes, config expects " + std::to_string(cfg.grid_size));
  }
  if (input_dim(model) != 1) {
    throw Error(Errc::invalid_parameter, "MC: grid prior requires a one-dimensional stimulus");
  }

  const std::size_t m = prior.size();
  std::vector<Vector> nodes;
  nodes.reserve(m);
  for (double x : prior.nodes()) {
    nodes.push_back(Vector::Constant(1, x));
  }
  const LikelihoodGrid grid(model, nodes);
  Eigen::RowVectorXd log_mass(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    log_mass(static_cast<Eigen::Index>(k)) = std::log(prior.masses()[k]);
  }
  const std::discrete_distribution<std::size_t> pick(prior.masses().begin(), prior.masses().end());
  const auto n = static_cast<Eigen::Index>(grid.population_size());

  std::vector<double> terms(cfg.j_max);
  const std::size_t blocks = (cfg.j_max + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    Matrix r;
    std::vector<std::size_t> idx;
    std::vector<double> row(m);
    for (std::size_t b = b0; b < b1; ++b) {
      const std::size_t first = b * kBlock;
      const std::size_t count = std::min(kBlock, cfg.j_max - first);
      auto rng = make_rng(cfg.seed, Stream::responses, b);
      auto dist = pick;
      r.resize(static_cast<Eigen::Index>(count), n);
      idx.resize(count);
      for (std::size_t j = 0; j < count; ++j) {
        idx[j] = dist(rng);
        r.row(static_cast<Eigen::Index>(j)) = sample_responses(model, nodes[idx[j]], rng).transpose();
      }
      Matrix ll = grid.evaluate(r);
      for (std::size_t j = 0; j < count; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        const double own = ll(jj, static_cast<Eigen::Index>(idx[j]));
        for (std::size_t k = 0; k < m; ++k) {
          row[k] = ll(jj, static_cast<Eigen::Index>(k)) + log_mass(static_cast<Eigen::Index>(k));
        }
        const double t = own - log_sum_exp(row);
        if (!std::isfinite(t)) {
          throw Error(Errc::non_finite_likelihood,
                      "MC: non-finite log-likelihood ratio at sample index " + std::to_string(first + j));
        }
        terms[first + j] = t;
      }
    }
  });

  MCResult out;
  out.samples = cfg.j_max;
  out.replicates = cfg.i_max;
  const double inv_j = 1.0 / static_cast<double>(cfg.j_max);
  out.i_mc_star = pairwise_sum(terms) * inv_j;

  std::vector<double> reps(cfg.i_max);
  parallel_for(cfg.i_max, [&](std::size_t i0, std::size_t i1) {
    std::vector<double> gathered(cfg.j_max);
    std::uniform_int_distribution<std::size_t> u(0, cfg.j_max - 1);
    for (std::size_t i = i0; i < i1; ++i) {
      auto rng = make_rng(cfg.seed, Stream::bootstrap, i);
      for (auto& g : gathered) {
        g = terms[u(rng)];
      }
      reps[i] = pairwise_sum(gathered) * inv_j;
    }
  });
  out.i_mc = pairwise_sum(reps) / static_cast<double>(cfg.i_max);
  std::vector<double> dev(cfg.i_max);
  for (std::size_t i = 0; i < cfg.i_max; ++i) {
    dev[i] = (reps[i] - out.i_mc) * (reps[i] - out.i_mc);
  }
  out.i_std = std::sqrt(pairwise_sum(dev) / static_cast<double>(cfg.i_max));
  out.di_std = out.i_mc != 0.0 ? out.i_std / out.i_mc : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double relative_error(double approx, const MCResult& mc) {
  if (mc.i_mc == 0.0) {
    throw Error(Errc::undefined_ratio, "relative_error: I_MC is zero");
  }
  return (approx - mc.i_mc) / mc.i_mc;
}

}  // namespace popcode
