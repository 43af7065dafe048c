#pragma once

#include "popcode/linalg.hpp"

#include <cstddef>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace popcode {

/// Circular-normal (von Mises) tuning curve on a periodic 1-D stimulus:
///
///   f(x) = A * exp(-(T / (2*pi*width))^2 * (1 - cos(2*pi*(x - center) / T)))
///
/// f is T-periodic, even about `center`, and peaks at exactly A there.
class VonMisesTuning {
 public:
  VonMisesTuning(double amplitude, double width, double period, double center);

  double amplitude() const { return amplitude_; }
  double width() const { return width_; }
  double period() const { return period_; }
  double center() const { return center_; }

  double rate(double x) const;
  double derivative(double x) const;

  VonMisesTuning with_amplitude(double amplitude) const;

 private:
  double amplitude_;
  double width_;
  double period_;
  double center_;
  double concentration_;  // (T / (2 pi width))^2
  double angular_;        // 2 pi / T
};

/// f(x) = w^T x + b. Used for Gaussian-noise channels with a K-dim input.
struct AffineTuning {
  Vector weights;
  double offset = 0.0;
};

using TuningCurve = std::variant<VonMisesTuning, AffineTuning>;

double eval_tuning(const VonMisesTuning& curve, double x);

std::size_t input_dim(const TuningCurve& curve);
double rate(const TuningCurve& curve, const Vector& x);
Vector rate_gradient(const TuningCurve& curve, const Vector& x);

inline constexpr double kDefaultRateFloor = 1e-12;

/// Per-neuron Fisher kernel of a Poisson neuron, S = f' f'^T / f, i.e. the
/// outer product of the gradient of g = 2 sqrt(f). Rates in (0, floor) are
/// floored before the division; a rate that is not strictly positive raises
/// Errc::rate_underflow.
Matrix poisson_fisher_kernel(const TuningCurve& curve, const Vector& x,
                             double rate_floor = kDefaultRateFloor);

/// Per-neuron Fisher kernel with additive Gaussian noise of std sigma.
Matrix gaussian_fisher_kernel(const TuningCurve& curve, double sigma, const Vector& x);

struct PoissonPopulation {
  std::vector<TuningCurve> tuning;
};

struct GaussianNoisePopulation {
  std::vector<TuningCurve> tuning;
  double sigma = 1.0;
};

/// r | x ~ N(A^T x, I_N) with prior x ~ N(mean, cov).
struct LinearGaussianModel {
  Matrix mixing;  // K x N
  Vector prior_mean;
  Matrix prior_cov;

  void validate() const;
};

/// r | x ~ N(g(x), a((1-c) I + c u u^T)); mean responses come from `tuning`.
struct CorrelatedGaussianPopulation {
  std::vector<TuningCurve> tuning;
  double scale = 1.0;        // a
  double correlation = 0.0;  // c
};

using PopulationModel = std::variant<PoissonPopulation, GaussianNoisePopulation,
                                     LinearGaussianModel, CorrelatedGaussianPopulation>;

std::size_t population_size(const PopulationModel& model);
std::size_t input_dim(const PopulationModel& model);

/// Mean response vector E[r | x].
Vector mean_response(const PopulationModel& model, const Vector& x);

/// Fisher information matrix J(x) of the whole population.
Matrix fisher_information(const PopulationModel& model, const Vector& x);

struct DecorrelationCoefficients {
  double b0;
  double b1;
};

/// Coefficients of Sigma^{-1/2} = b0 (I - b1 u u^T) for the uniformly
/// correlated covariance. b1 takes the branch that vanishes at c = 0.
DecorrelationCoefficients decorrelation_coefficients(double scale, double correlation,
                                                     std::size_t n);

Matrix decorrelation_transform(const CorrelatedGaussianPopulation& pop, std::size_t n);

/// Explicit covariance a((1-c) I + c u u^T).
Matrix correlated_covariance(double scale, double correlation, std::size_t n);

/// Draws one response vector. Only `rng` is mutated.
Vector sample_responses(const PopulationModel& model, const Vector& x, std::mt19937_64& rng);

/// log p(r | x) in nats, including all normalizing constants.
double log_likelihood(const PopulationModel& model, const Vector& r, const Vector& x);

/// Precomputed per-node statistics for evaluating log p(r_b | x_m) for a
/// batch of responses against every stimulus node with one matrix product.
class LikelihoodGrid {
 public:
  LikelihoodGrid(const PopulationModel& model, std::span<const Vector> nodes);

  std::size_t node_count() const { return static_cast<std::size_t>(node_terms_.size()); }
  std::size_t population_size() const { return static_cast<std::size_t>(projection_.rows()); }

  /// responses: B x N. Returns B x M with entry (b, m) = log p(r_b | x_m).
  Matrix evaluate(const Matrix& responses) const;

 private:
  enum class Kind { poisson, gaussian };
  Kind kind_;
  Matrix projection_;   // N x M: log f (Poisson) or mean / variance (Gaussian)
  Vector node_terms_;   // M: -sum f (Poisson) or -|mean|^2 / (2 var) (Gaussian)
  double inv_variance_ = 1.0;
  double log_norm_ = 0.0;  // x-independent Gaussian normalizer
  Matrix whitening_;       // applied to responses first (correlated case)
};

}  // namespace popcode
