#pragma once

#include "popcode/linalg.hpp"
#include "popcode/models.hpp"
#include "popcode/prior.hpp"

#include <cstddef>
#include <functional>
#include <vector>

namespace popcode {

/// Simplex weights alpha over a finite set of tuning-curve subclasses.
struct PopulationDensity {
  std::vector<TuningCurve> subclasses;
  Vector weights;

  static PopulationDensity uniform(std::vector<TuningCurve> subclasses);

  std::size_t size() const { return subclasses.size(); }
  /// Throws Errc::invalid_parameter unless weights are on the simplex to 1e-12.
  void validate() const;
};

/// Per-neuron Fisher kernel S(x; theta).
using FisherKernel = std::function<Matrix(const TuningCurve&, const Vector&)>;

FisherKernel poisson_kernel(double rate_floor = kDefaultRateFloor);
FisherKernel gaussian_kernel(double sigma);

/// J(x) = N sum_k alpha_k S(x; theta_k).
Matrix fisher_matrix(const PopulationDensity& pop, const FisherKernel& kernel, const Vector& x,
                     double n);

/// P(x) = -d^2 ln p / dx dx^T. Throws Errc::domain_error outside the support.
Matrix prior_curvature(const PriorDensity& prior, const Vector& x);

/// P+ = <q' q'^T>_x. Closed form for Gaussian priors, grid quadrature otherwise.
Matrix p_plus(const PriorDensity& prior);

/// <P(x)>_x on the prior's own grid (Sigma^-1 for a Gaussian prior).
Matrix mean_prior_curvature(const PriorDensity& prior);

struct InfoMatrices {
  Matrix J;
  Matrix P;
  Matrix Pplus;
  Matrix G;      // J + P
  Matrix Gplus;  // J + Pplus
  bool g_positive_definite = false;
  bool gplus_positive_definite = false;
};

InfoMatrices assemble(const Matrix& j, const Matrix& p, const Matrix& pplus);

/// Convenience overload; P+ is recomputed from the prior on every call, so
/// prefer the matrix overload inside loops.
InfoMatrices assemble(const Matrix& j, const PriorDensity& prior, const Vector& x);

using MatrixField = std::function<Matrix(const Vector&)>;

// The returned field refers to `model`, which must outlive it.
MatrixField population_fisher(const PopulationModel& model);

/// InfoMatrices on every quadrature node, evaluated in parallel.
std::vector<InfoMatrices> evaluate_info(const MatrixField& fisher, const PriorDensity& prior,
                                        const Quadrature& quad);

}  // namespace popcode
