#include "popcode/error.hpp"
#include "popcode/fisher.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace popcode;
using namespace popcode::testing;

namespace {

PopulationDensity fig1_density(std::size_t n) {
  std::vector<TuningCurve> sub;
  for (double c : fig1_centers(n)) {
    sub.emplace_back(VonMisesTuning(kAmp, kTuningWidth, kPeriod, c));
  }
  return PopulationDensity::uniform(std::move(sub));
}

// Per-neuron Poisson kernel written out by hand.
double vm_poisson_kernel(double x, double center) {
  const double f = vm_rate(x, kAmp, kTuningWidth, kPeriod, center);
  const double kappa = std::pow(kPeriod / (2.0 * kPi * kTuningWidth), 2);
  const double d = -f * kappa * (2.0 * kPi / kPeriod) * std::sin(2.0 * kPi * (x - center) / kPeriod);
  return d * d / f;
}

}  // namespace

TEST(FisherMatrix, SingleSubclassAndLinearityInN) {
  PopulationDensity pop{{TuningCurve(VonMisesTuning(kAmp, kTuningWidth, kPeriod, 0.1))}, Vector::Ones(1)};
  const Vector x = Vector::Constant(1, 0.4);
  const Matrix s = poisson_fisher_kernel(pop.subclasses[0], x);
  const Matrix j = fisher_matrix(pop, poisson_kernel(), x, 7.0);
  EXPECT_NEAR(j(0, 0), 7.0 * s(0, 0), 1e-12 * j(0, 0));
  const Matrix j2 = fisher_matrix(pop, poisson_kernel(), x, 14.0);
  EXPECT_NEAR(j2(0, 0), 2.0 * j(0, 0), 1e-12 * j2(0, 0));
}

TEST(FisherMatrix, UniformFig1GridMatchesPerNeuronSum) {
  const auto pop = fig1_density(30);
  for (double x : {0.0, 0.3, -1.1}) {
    double oracle = 0.0;
    for (double c : fig1_centers(30)) {
      oracle += vm_poisson_kernel(x, c);
    }
    const Matrix j = fisher_matrix(pop, poisson_kernel(), Vector::Constant(1, x), 30.0);
    EXPECT_NEAR(j(0, 0), oracle, 1e-10 * oracle) << x;
    const Matrix jm = fisher_information(fig1_population(30), Vector::Constant(1, x));
    EXPECT_NEAR(jm(0, 0), oracle, 1e-10 * oracle) << x;
  }
}

TEST(FisherMatrix, LinearInAlpha) {
  auto g = rng(21);
  std::vector<TuningCurve> sub;
  for (int k = 0; k < 6; ++k) {
    sub.emplace_back(AffineTuning{random_matrix(g, 3, 1), 10.0});
  }
  for (int trial = 0; trial < 50; ++trial) {
    const Vector a = random_simplex(g, 6);
    const Vector b = random_simplex(g, 6);
    const double lam = uniform(g, 0.0, 1.0);
    const Vector x = random_matrix(g, 3, 1) * 0.5;
    const auto kernel = gaussian_kernel(0.8);
    const Matrix ja = fisher_matrix({sub, a}, kernel, x, 5.0);
    const Matrix jb = fisher_matrix({sub, b}, kernel, x, 5.0);
    const Matrix jl = fisher_matrix({sub, lam * a + (1.0 - lam) * b}, kernel, x, 5.0);
    EXPECT_LT((jl - (lam * ja + (1.0 - lam) * jb)).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, ja.norm()));
    EXPECT_GE(min_eigenvalue(jl), -1e-10);
  }
}

TEST(FisherMatrix, OffSimplexWeightsRejected) {
  auto pop = fig1_density(3);
  pop.weights(0) += 1e-6;
  EXPECT_THROW(fisher_matrix(pop, poisson_kernel(), Vector::Zero(1), 3.0), Error);
  pop.weights << 1.5, -0.5, 0.0;
  EXPECT_THROW(pop.validate(), Error);
}

TEST(PriorCurvature, GaussianIsInverseCovariance) {
  auto g = rng(2);
  const Matrix cov = random_spd(g, 4);
  const PriorDensity prior = GaussianPrior{Vector::Zero(4), cov};
  for (int i = 0; i < 5; ++i) {
    const Matrix p = prior_curvature(prior, random_matrix(g, 4, 1));
    EXPECT_LT((p - cov.inverse()).norm(), 1e-10);
  }
  EXPECT_LT((p_plus(prior) - prior_curvature(prior, Vector::Zero(4))).norm(), 1e-14);
  EXPECT_LT((mean_prior_curvature(prior) - cov.inverse()).norm(), 1e-10);
}

TEST(PriorCurvature, UniformIsZero) {
  const PriorDensity prior = GridPrior1D::uniform(kPeriod, 200);
  EXPECT_EQ(prior_curvature(prior, Vector::Constant(1, 0.7))(0, 0), 0.0);
  EXPECT_NEAR(p_plus(prior)(0, 0), 0.0, 1e-14);
}

TEST(PriorCurvature, VonMisesPriorAtOrigin) {
  const PriorDensity prior = GridPrior1D::von_mises(kPriorWidth, kPeriod, 1000);
  EXPECT_NEAR(prior_curvature(prior, Vector::Zero(1))(0, 0), 16.0 / (kPi * kPi), 1e-12);
  EXPECT_NEAR(16.0 / (kPi * kPi), 1.62114, 1e-5);
  // -q''(x) = cos(2 pi x / T) / sigma_p^2
  for (double x : {0.3, -0.9, 1.4}) {
    EXPECT_NEAR(prior_curvature(prior, Vector::Constant(1, x))(0, 0), std::cos(2.0 * x) * 16.0 / (kPi * kPi), 1e-12);
  }
}

TEST(PriorCurvature, OutsideSupportIsDomainError) {
  const PriorDensity prior = GridPrior1D::von_mises(kPriorWidth, kPeriod, 100);
  try {
    prior_curvature(prior, Vector::Constant(1, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::domain_error);
  }
  EXPECT_THROW(prior_curvature(prior, Vector::Constant(1, kPi / 2)), Error);
}

TEST(GridPrior, NormalizedAndDerivativesConsistent) {
  const auto prior = GridPrior1D::von_mises(kPriorWidth, kPeriod, 1000);
  double mass = 0.0;
  for (std::size_t m = 0; m < prior.size(); ++m) {
    mass += prior.density(m) * prior.spacing();
  }
  EXPECT_NEAR(mass, 1.0, 1e-8);
  const auto ld = prior.log_density();
  const auto d1 = prior.dlog_density();
  const auto d2 = prior.d2log_density();
  const double h = prior.spacing();
  const std::size_t m = prior.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double fd1 = (ld[(i + 1) % m] - ld[(i + m - 1) % m]) / (2.0 * h);
    const double fd2 = (ld[(i + 1) % m] - 2.0 * ld[i] + ld[(i + m - 1) % m]) / (h * h);
    EXPECT_NEAR(fd1, d1[i], 1e-4);
    EXPECT_NEAR(fd2, d2[i], 1e-4);
  }
}

TEST(GridPrior, TabulatedDerivativesMatchAnalytic) {
  const auto vm = GridPrior1D::von_mises(kPriorWidth, kPeriod, 400);
  std::vector<double> table;
  for (double x : vm.nodes()) {
    table.push_back(4.0 / (kPi * kPi) * std::cos(2.0 * x) + 3.0);
  }
  const auto tab = GridPrior1D::from_log_density(kPeriod, table);
  for (std::size_t i = 0; i < vm.size(); ++i) {
    EXPECT_NEAR(tab.dlog_density()[i], vm.dlog_density()[i], 1e-4);
    EXPECT_NEAR(tab.d2log_density()[i], vm.d2log_density()[i], 1e-4);
  }
}

TEST(PPlus, EqualsMeanCurvatureOnPeriodicGrid) {
  for (std::size_t m : {200u, 1000u}) {
    const PriorDensity prior = GridPrior1D::von_mises(kPriorWidth, kPeriod, m);
    EXPECT_NEAR(p_plus(prior)(0, 0), mean_prior_curvature(prior)(0, 0), 1e-8) << m;
  }
  // A lopsided tabulated prior: derivatives come from fourth-order differences,
  // so the identity holds up to O(h^4) and the residual drops ~16x per halving.
  auto residual = [](std::size_t m) {
    std::vector<double> table;
    const auto grid = GridPrior1D::uniform(kPeriod, m);
    for (double x : grid.nodes()) {
      table.push_back(1.5 * std::cos(2.0 * x) + 0.7 * std::sin(4.0 * x));
    }
    const PriorDensity tab = GridPrior1D::from_log_density(kPeriod, table);
    return std::abs(p_plus(tab)(0, 0) - mean_prior_curvature(tab)(0, 0));
  };
  const double r600 = residual(600);
  const double r1200 = residual(1200);
  EXPECT_LT(r600, 1e-6);
  EXPECT_GT(r600 / r1200, 12.0);
}

TEST(Assemble, ExactSumsAndFlags) {
  auto g = rng(6);
  const Matrix j = random_spd(g, 3);
  const InfoMatrices a = assemble(j, Matrix::Zero(3, 3), Matrix::Zero(3, 3));
  EXPECT_EQ(a.G, j);
  EXPECT_TRUE(a.g_positive_definite);
  Matrix p = Matrix::Identity(3, 3);
  p(1, 1) = -1.0;
  const InfoMatrices b = assemble(Matrix::Zero(3, 3), p, Matrix::Identity(3, 3));
  EXPECT_FALSE(b.g_positive_definite);
  EXPECT_TRUE(b.gplus_positive_definite);
  const Matrix q = random_psd(g, 3, 3);
  const Matrix pp = random_spd(g, 3);
  const InfoMatrices c = assemble(j, q, pp);
  EXPECT_EQ(c.G, j + q);
  EXPECT_EQ(c.Gplus, j + pp);
}

TEST(Assemble, Fig1AtOrigin) {
  const PopulationModel model = fig1_population(10);
  const PriorDensity prior = GridPrior1D::von_mises(kPriorWidth, kPeriod, 1000);
  const Vector x = Vector::Zero(1);
  const InfoMatrices info = assemble(fisher_information(model, x), prior, x);
  double j = 0.0;
  for (double c : fig1_centers(10)) {
    j += vm_poisson_kernel(0.0, c);
  }
  EXPECT_NEAR(info.G(0, 0), j + 16.0 / (kPi * kPi), 1e-10 * info.G(0, 0));
  EXPECT_TRUE(info.g_positive_definite);
}

TEST(Assemble, GPlusPdForGaussianPriorAndPsdJ) {
  auto g = rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index k = static_cast<Eigen::Index>(uniform_int(g, 1, 6));
    const PriorDensity prior = GaussianPrior{Vector::Zero(k), random_spd(g, k)};
    const Matrix j = random_psd(g, k, static_cast<Eigen::Index>(uniform_int(g, 0, static_cast<std::size_t>(k))));
    EXPECT_TRUE(assemble(j, prior, Vector::Zero(k)).gplus_positive_definite);
  }
}

TEST(EvaluateInfo, MatchesSerialAssembly) {
  const PopulationModel model = fig1_population(12);
  const GridPrior1D grid = GridPrior1D::von_mises(kPriorWidth, kPeriod, 64);
  const PriorDensity prior = grid;
  const Quadrature quad = grid_quadrature(grid);
  const auto info = evaluate_info(population_fisher(model), prior, quad);
  ASSERT_EQ(info.size(), 64u);
  const Matrix pp = p_plus(prior);
  for (std::size_t m = 0; m < info.size(); ++m) {
    const Matrix j = fisher_information(model, quad.nodes[m]);
    EXPECT_EQ(info[m].J, j);
    EXPECT_EQ(info[m].G, j + prior_curvature(prior, quad.nodes[m]));
    EXPECT_EQ(info[m].Gplus, j + pp);
  }
}
