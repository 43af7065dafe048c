#include "popcode/fisher.hpp"
#include "popcode/linalg.hpp"
#include "popcode/mi.hpp"
#include "popcode/models.hpp"
#include "popcode/optimize.hpp"
#include "popcode/transform.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace {

using popcode::Matrix;
using popcode::Vector;

constexpr double kPi = std::numbers::pi;

popcode::PoissonPopulation fig1_population(std::size_t n) {
  popcode::PoissonPopulation p;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) - 0.5 : 0.0;
    p.tuning.emplace_back(popcode::VonMisesTuning(20.0, 0.5, kPi, c));
  }
  return p;
}

Matrix random_spd(std::mt19937_64& g, Eigen::Index k) {
  std::normal_distribution<double> n;
  Matrix b(k, k);
  for (Eigen::Index i = 0; i < b.size(); ++i) {
    b.data()[i] = n(g);
  }
  Matrix s = b * b.transpose() / static_cast<double>(k);
  s.diagonal().array() += 0.1;
  return s;
}

void BM_LogdetPd(benchmark::State& state) {
  std::mt19937_64 g(1);
  const Matrix a = random_spd(g, state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(popcode::logdet_pd(a));
  }
}
BENCHMARK(BM_LogdetPd)->Arg(4)->Arg(32)->Arg(256);

void BM_LikelihoodGrid(benchmark::State& state) {
  const popcode::PopulationModel model = fig1_population(static_cast<std::size_t>(state.range(0)));
  std::vector<Vector> nodes;
  for (int m = 0; m < 500; ++m) {
    nodes.push_back(Vector::Constant(1, -kPi / 2 + kPi * m / 500.0));
  }
  const popcode::LikelihoodGrid grid(model, nodes);
  std::mt19937_64 g(2);
  Matrix r(512, state.range(0));
  for (Eigen::Index b = 0; b < r.rows(); ++b) {
    r.row(b) = popcode::sample_responses(model, nodes[static_cast<std::size_t>(b % 500)], g).transpose();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid.evaluate(r));
  }
  state.SetItemsProcessed(state.iterations() * r.rows());
}
BENCHMARK(BM_LikelihoodGrid)->Arg(10)->Arg(100);

void BM_Fig2RandomMixing(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const Vector spectrum = popcode::power_law_spectrum(k, 2.0);
  const std::vector<std::size_t> n_list{10000};
  for (auto _ : state) {
    benchmark::DoNotOptimize(popcode::fig2_random_mixing(spectrum, n_list, 1, 0));
  }
}
BENCHMARK(BM_Fig2RandomMixing)->Arg(16)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FrankWolfe(benchmark::State& state) {
  const auto k1 = static_cast<std::size_t>(state.range(0));
  const auto grid = popcode::GridPrior1D::von_mises(kPi / 4, kPi, 200);
  popcode::OptimizationProblem p;
  for (std::size_t k = 0; k < k1; ++k) {
    p.thetas.emplace_back(popcode::VonMisesTuning(20.0, 0.5, kPi, -kPi / 2 + kPi * (k + 0.5) / static_cast<double>(k1)));
  }
  p.prior = grid;
  p.x_nodes = popcode::grid_quadrature(grid);
  p.population = 30.0;
  popcode::MaximizeOptions opt;
  opt.tol = 1e-8;
  for (auto _ : state) {
    benchmark::DoNotOptimize(popcode::maximize(p, opt));
  }
}
BENCHMARK(BM_FrankWolfe)->Arg(5)->Arg(21)->Unit(benchmark::kMillisecond);

void BM_IG_Fig1(benchmark::State& state) {
  const popcode::PopulationModel model = fig1_population(static_cast<std::size_t>(state.range(0)));
  const auto grid = popcode::GridPrior1D::von_mises(kPi / 4, kPi, 1000);
  const popcode::PriorDensity prior = grid;
  const auto quad = popcode::grid_quadrature(grid);
  for (auto _ : state) {
    benchmark::DoNotOptimize(popcode::i_g(popcode::population_fisher(model), prior, quad));
  }
}
BENCHMARK(BM_IG_Fig1)->Arg(10)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
