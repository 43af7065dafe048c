#include "popcode/error.hpp"
#include "popcode/models.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace popcode;
using namespace popcode::testing;

namespace {

VonMisesTuning fig1_curve(double center = 0.0) { return VonMisesTuning(kAmp, kTuningWidth, kPeriod, center); }

TuningCurve constant_rate(double r) { return AffineTuning{Vector::Zero(1), r}; }

}  // namespace

TEST(VonMises, PeakAndHandValue) {
  const auto f = fig1_curve();
  EXPECT_DOUBLE_EQ(eval_tuning(f, 0.0), 20.0);
  EXPECT_NEAR(eval_tuning(f, kPi / 2), 20.0 * std::exp(-2.0), 1e-12);
  EXPECT_NEAR(eval_tuning(f, kPi / 2), 2.70671, 1e-5);
}

TEST(VonMises, EvenAboutCenter) {
  const auto f = fig1_curve(0.3);
  for (double d : {0.01, 0.2, 0.7, 1.3, 2.9}) {
    EXPECT_NEAR(f.rate(0.3 + d), f.rate(0.3 - d), 1e-13) << d;
  }
}

TEST(VonMises, BoundsAndPeriodicityOnGrid) {
  auto g = rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = uniform(g, 0.5, 50.0);
    const double w = uniform(g, 0.1, 2.0);
    const double t = uniform(g, 0.5, 7.0);
    const double c = uniform(g, -1.0, 1.0);
    const VonMisesTuning f(a, w, t, c);
    EXPECT_LT(std::abs(f.rate(c) - a), 1e-12);
    for (int i = 0; i < 1000; ++i) {
      const double x = -t + 2.0 * t * i / 1000.0;
      const double v = f.rate(x);
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, a);
      EXPECT_NEAR(v, f.rate(x + t), 1e-12 * a);
      EXPECT_NEAR(v, vm_rate(x, a, w, t, c), 1e-12 * a);
    }
  }
}

TEST(VonMises, DerivativeMatchesFiniteDifference) {
  const auto f = fig1_curve(0.2);
  for (int i = 0; i < 1000; ++i) {
    const double x = -kPi / 2 + kPi * (i + 0.5) / 1000.0;
    const double analytic = f.derivative(x);
    const double fd = central_difference([&](double y) { return f.rate(y); }, x);
    if (std::abs(analytic) < 1e-3) {
      continue;  // near the peak and trough
    }
    EXPECT_LT(std::abs(fd - analytic) / std::abs(analytic), 1e-6) << x;
  }
}

TEST(VonMises, RejectsInvalidParameters) {
  EXPECT_THROW(VonMisesTuning(0.0, 0.5, kPi, 0.0), Error);
  EXPECT_THROW(VonMisesTuning(1.0, -0.5, kPi, 0.0), Error);
  EXPECT_THROW(VonMisesTuning(1.0, 0.5, 0.0, 0.0), Error);
}

TEST(PoissonKernel, ZeroAtPeak) {
  const Matrix s = poisson_fisher_kernel(fig1_curve(0.4), Vector::Constant(1, 0.4));
  EXPECT_EQ(s(0, 0), 0.0);
}

TEST(PoissonKernel, MatchesFiniteDifferenceOracle) {
  const auto f = fig1_curve();
  const double x = kPi / 4;
  const double fd = central_difference([&](double y) { return vm_rate(y, kAmp, kTuningWidth, kPeriod, 0.0); }, x);
  const double oracle = fd * fd / vm_rate(x, kAmp, kTuningWidth, kPeriod, 0.0);
  const Matrix s = poisson_fisher_kernel(f, Vector::Constant(1, x));
  EXPECT_NEAR(s(0, 0), oracle, 1e-6 * oracle);
  // Same value through g = 2 sqrt(f).
  const double dg = central_difference([&](double y) { return 2.0 * std::sqrt(f.rate(y)); }, x);
  EXPECT_NEAR(s(0, 0), dg * dg, 1e-6 * oracle);
}

TEST(PoissonKernel, SymmetricPsdOnGrid) {
  auto g = rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    AffineTuning a{random_matrix(g, 3, 1), 50.0};
    for (int i = 0; i < 200; ++i) {
      const Vector x = random_matrix(g, 3, 1);
      const Matrix s = poisson_fisher_kernel(a, x);
      EXPECT_TRUE(s.isApprox(s.transpose()));
      EXPECT_GE(s.trace(), 0.0);
      EXPECT_GE(min_eigenvalue(s), -1e-12);
    }
  }
  const auto f = fig1_curve(-0.3);
  for (int i = 0; i < 1000; ++i) {
    const double x = -kPi / 2 + kPi * i / 1000.0;
    EXPECT_GE(poisson_fisher_kernel(f, Vector::Constant(1, x))(0, 0), -1e-12);
  }
}

TEST(PoissonKernel, ZeroRateIsUnderflowAndTinyRateIsFloored) {
  try {
    poisson_fisher_kernel(constant_rate(0.0), Vector::Zero(1));
    FAIL() << "expected rate underflow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::rate_underflow);
  }
  AffineTuning tiny{Vector::Constant(1, 1e-20), 1e-30};
  const Matrix s = poisson_fisher_kernel(tiny, Vector::Zero(1), 1e-12);
  EXPECT_NEAR(s(0, 0), 1e-40 / 1e-12, 1e-50);
}

TEST(GaussianKernel, PeakSigmaScalingAndOracle) {
  const auto f = fig1_curve();
  EXPECT_EQ(gaussian_fisher_kernel(f, 1.0, Vector::Zero(1))(0, 0), 0.0);
  const Vector x = Vector::Constant(1, kPi / 4);
  const Matrix s1 = gaussian_fisher_kernel(f, 1.0, x);
  const Matrix s2 = gaussian_fisher_kernel(f, 2.0, x);
  EXPECT_NEAR(s2(0, 0), s1(0, 0) / 4.0, 1e-14 * s1(0, 0));
  const double fd = central_difference([&](double y) { return vm_rate(y, kAmp, kTuningWidth, kPeriod, 0.0); }, kPi / 4);
  EXPECT_NEAR(s1(0, 0), fd * fd, 1e-6 * fd * fd);
  auto g = rng(5);
  for (int i = 0; i < 200; ++i) {
    AffineTuning a{random_matrix(g, 4, 1), 0.0};
    const Matrix s = gaussian_fisher_kernel(a, 0.7, random_matrix(g, 4, 1));
    EXPECT_GE(min_eigenvalue(s), -1e-12);
  }
}

TEST(GaussianKernel, NonPositiveSigmaIsInvalid) {
  try {
    gaussian_fisher_kernel(fig1_curve(), 0.0, Vector::Zero(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_parameter);
  }
  EXPECT_THROW(gaussian_fisher_kernel(fig1_curve(), -1.0, Vector::Zero(1)), Error);
}

TEST(Decorrelation, UncorrelatedIsIdentity) {
  CorrelatedGaussianPopulation p{std::vector<TuningCurve>(5, fig1_curve()), 1.0, 0.0};
  EXPECT_TRUE(decorrelation_transform(p, 5).isApprox(Matrix::Identity(5, 5), 1e-15));
}

TEST(Decorrelation, TwoNeuronHandValues) {
  const auto d = decorrelation_coefficients(1.0, 0.5, 2);
  EXPECT_NEAR(d.b0, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(d.b1, (1.0 - 1.0 / std::sqrt(3.0)) / 2.0, 1e-15);
  CorrelatedGaussianPopulation p{std::vector<TuningCurve>(2, fig1_curve()), 1.0, 0.5};
  const Matrix m = decorrelation_transform(p, 2);
  Matrix sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 1.0;
  EXPECT_LT((m * sigma * m.transpose() - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Decorrelation, TenNeurons) {
  CorrelatedGaussianPopulation p{std::vector<TuningCurve>(10, fig1_curve()), 2.5, 0.3};
  const Matrix m = decorrelation_transform(p, 10);
  const Matrix s = correlated_covariance(2.5, 0.3, 10);
  EXPECT_LT((m * s * m.transpose() - Matrix::Identity(10, 10)).norm(), 1e-10);
}

TEST(Decorrelation, RandomTriplesWhiten) {
  auto g = rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = uniform_int(g, 2, 200);
    const double lower = -1.0 / static_cast<double>(n - 1);
    const double c = uniform(g, lower + 0.05 * (1.0 - lower), 0.95);
    const double a = uniform(g, 0.1, 10.0);
    CorrelatedGaussianPopulation p{std::vector<TuningCurve>(n, fig1_curve()), a, c};
    const Matrix m = decorrelation_transform(p, n);
    const Matrix s = correlated_covariance(a, c, n);
    EXPECT_LT((m * s * m.transpose() - Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n))).norm(),
              1e-10)
        << n << " " << c << " " << a;
  }
}

TEST(Decorrelation, SingularCorrelationRejected) {
  for (double c : {-1.0 / 9.0, -0.5, 1.0}) {
    try {
      decorrelation_coefficients(1.0, c, 10);
      FAIL() << c;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::singular_covariance);
    }
  }
}

TEST(Sampling, PoissonMean) {
  const PopulationModel m = PoissonPopulation{{constant_rate(5.0)}};
  std::mt19937_64 g(123);
  const int n = 1000000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    sum += sample_responses(m, Vector::Zero(1), g)(0);
  }
  EXPECT_LT(std::abs(sum / n - 5.0), 4.0 * std::sqrt(5.0) / std::sqrt(static_cast<double>(n)));
}

TEST(Sampling, GaussianUnitVariance) {
  const PopulationModel m = GaussianNoisePopulation{{constant_rate(0.0)}, 1.0};
  std::mt19937_64 g(7);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = sample_responses(m, Vector::Zero(1), g)(0);
    s += r;
    s2 += r * r;
  }
  const double var = s2 / n - (s / n) * (s / n);
  EXPECT_NEAR(var, 1.0, 0.01);
}

TEST(Sampling, CorrelatedCovarianceMatches) {
  const std::size_t n = 4;
  const PopulationModel m = CorrelatedGaussianPopulation{std::vector<TuningCurve>(n, constant_rate(0.0)), 2.0, 0.4};
  std::mt19937_64 g(9);
  const int draws = 200000;
  Matrix acc = Matrix::Zero(4, 4);
  for (int i = 0; i < draws; ++i) {
    const Vector r = sample_responses(m, Vector::Zero(1), g);
    acc += r * r.transpose();
  }
  acc /= draws;
  EXPECT_LT((acc - correlated_covariance(2.0, 0.4, n)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Sampling, FixedSeedIsDeterministic) {
  const PopulationModel m = fig1_population(20);
  std::mt19937_64 a(42), b(42);
  EXPECT_EQ(sample_responses(m, Vector::Constant(1, 0.1), a), sample_responses(m, Vector::Constant(1, 0.1), b));
}

TEST(LogLikelihood, PoissonZeroCounts) {
  const PopulationModel m = fig1_population(7);
  const Vector x = Vector::Constant(1, 0.3);
  double total = 0.0;
  for (double c : fig1_centers(7)) {
    total += vm_rate(0.3, kAmp, kTuningWidth, kPeriod, c);
  }
  EXPECT_NEAR(log_likelihood(m, Vector::Zero(7), x), -total, 1e-12 * total);
}

TEST(LogLikelihood, SingleNeuronUnitRate) {
  const PopulationModel m = PoissonPopulation{{constant_rate(1.0)}};
  EXPECT_NEAR(log_likelihood(m, Vector::Ones(1), Vector::Zero(1)), -1.0, 1e-15);
}

TEST(LogLikelihood, MatchesElementwiseOracle) {
  const PopulationModel m = fig1_population(15);
  auto g = rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = uniform(g, -kPi / 2, kPi / 2);
    Vector r(15);
    double oracle = 0.0;
    const auto centers = fig1_centers(15);
    for (int n = 0; n < 15; ++n) {
      r(n) = static_cast<double>(uniform_int(g, 0, 40));
      const double f = vm_rate(x, kAmp, kTuningWidth, kPeriod, centers[static_cast<std::size_t>(n)]);
      double log_fact = 0.0;
      for (int k = 2; k <= static_cast<int>(r(n)); ++k) {
        log_fact += std::log(static_cast<double>(k));
      }
      oracle += r(n) * std::log(f) - f - log_fact;
    }
    EXPECT_NEAR(log_likelihood(m, r, Vector::Constant(1, x)), oracle, 1e-12 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(LogLikelihood, NegativeOrFractionalCountsAreDomainErrors) {
  const PopulationModel m = fig1_population(2);
  Vector r(2);
  r << -1.0, 0.0;
  try {
    log_likelihood(m, r, Vector::Zero(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::domain_error);
  }
  r << 0.5, 0.0;
  EXPECT_THROW(log_likelihood(m, r, Vector::Zero(1)), Error);
}

TEST(LogLikelihood, GaussianDensityOracles) {
  auto g = rng(4);
  // Correlated population against the explicit multivariate normal density.
  const std::size_t n = 6;
  CorrelatedGaussianPopulation cp;
  for (std::size_t i = 0; i < n; ++i) {
    cp.tuning.emplace_back(VonMisesTuning(5.0, 0.5, kPeriod, -0.5 + 0.2 * static_cast<double>(i)));
  }
  cp.scale = 1.7;
  cp.correlation = 0.25;
  const PopulationModel m = cp;
  const Matrix s = correlated_covariance(1.7, 0.25, n);
  for (int trial = 0; trial < 10; ++trial) {
    const Vector x = Vector::Constant(1, uniform(g, -1.0, 1.0));
    const Vector r = random_matrix(g, static_cast<Eigen::Index>(n), 1) * 2.0;
    const Vector e = r - mean_response(m, x);
    const double oracle = -0.5 * e.dot(s.inverse() * e) - 0.5 * lu_logdet(s) -
                          0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
    EXPECT_NEAR(log_likelihood(m, r, x), oracle, 1e-10);
  }
}

TEST(LikelihoodGrid, MatchesPointwiseLogLikelihood) {
  auto g = rng(8);
  std::vector<Vector> nodes;
  for (int i = 0; i < 37; ++i) {
    nodes.push_back(Vector::Constant(1, -kPi / 2 + kPi * i / 37.0));
  }
  std::vector<PopulationModel> models;
  models.push_back(fig1_population(12));
  {
    GaussianNoisePopulation gp;
    gp.tuning = fig1_population(9).tuning;
    gp.sigma = 1.3;
    models.push_back(gp);
  }
  {
    CorrelatedGaussianPopulation cp;
    cp.tuning = fig1_population(8).tuning;
    cp.scale = 0.8;
    cp.correlation = 0.35;
    models.push_back(cp);
  }
  models.push_back(LinearGaussianModel{random_matrix(g, 1, 5), Vector::Zero(1), Matrix::Identity(1, 1)});
  for (const auto& m : models) {
    const LikelihoodGrid grid(m, nodes);
    Matrix r(6, static_cast<Eigen::Index>(population_size(m)));
    for (Eigen::Index b = 0; b < r.rows(); ++b) {
      r.row(b) = sample_responses(m, nodes[static_cast<std::size_t>(b * 5)], g).transpose();
    }
    const Matrix ll = grid.evaluate(r);
    for (Eigen::Index b = 0; b < r.rows(); ++b) {
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const double direct = log_likelihood(m, r.row(b).transpose(), nodes[k]);
        EXPECT_NEAR(ll(b, static_cast<Eigen::Index>(k)), direct, 1e-9 * std::max(1.0, std::abs(direct)));
      }
    }
  }
}

TEST(FisherInformation, CorrelatedMatchesDecorrelatedSum) {
  CorrelatedGaussianPopulation cp;
  cp.tuning = fig1_population(5).tuning;
  cp.scale = 1.5;
  cp.correlation = 0.2;
  const PopulationModel m = cp;
  const Vector x = Vector::Constant(1, 0.37);
  Vector d(5);
  for (int i = 0; i < 5; ++i) {
    d(i) = rate_gradient(cp.tuning[static_cast<std::size_t>(i)], x)(0);
  }
  const Matrix s = correlated_covariance(1.5, 0.2, 5);
  EXPECT_NEAR(fisher_information(m, x)(0, 0), d.dot(s.inverse() * d), 1e-10);
}
