#pragma once

#include "popcode/linalg.hpp"

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace popcode {

struct GaussianPrior {
  Vector mean;
  Matrix cov;

  void validate() const;
};

/// A 1-D density on the periodic support [-T/2, T/2), tabulated on the
/// M-point grid x_m = (m-1) T / M - T/2 together with the first and second
/// derivatives of its log-density.
class GridPrior1D {
 public:
  /// p(x) ∝ exp(-(T / (2 pi width))^2 (1 - cos(2 pi x / T))). Derivatives are
  /// analytic; the normalizer is the periodic trapezoid sum on the grid.
  static GridPrior1D von_mises(double width, double period, std::size_t nodes);

  static GridPrior1D uniform(double period, std::size_t nodes);

  /// Arbitrary tabulated log-density (unnormalized). Derivatives use periodic
  /// 4th-order central differences.
  static GridPrior1D from_log_density(double period, std::vector<double> log_density);

  std::size_t size() const { return nodes_.size(); }
  double period() const { return period_; }
  double spacing() const { return period_ / static_cast<double>(nodes_.size()); }
  double lower() const { return -0.5 * period_; }

  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> log_density() const { return log_density_; }
  std::span<const double> dlog_density() const { return dlog_; }
  std::span<const double> d2log_density() const { return d2log_; }

  /// p(x_m) * spacing, normalized to sum to one.
  std::span<const double> masses() const { return masses_; }

  /// Density value p(x_m) (so that sum_m p(x_m) * spacing == 1).
  double density(std::size_t m) const;

  /// Log-density derivatives at an arbitrary point of the support. Analytic
  /// for the constructed families; periodic linear interpolation of the
  /// tabulated values otherwise. Throws Errc::domain_error outside [-T/2, T/2).
  double dlog_at(double x) const;
  double d2log_at(double x) const;

  bool analytic() const { return family_ != Family::tabulated; }

 private:
  enum class Family { von_mises, uniform, tabulated };

  GridPrior1D(Family family, double period, std::size_t nodes);
  void finish_normalization(std::vector<double> unnormalized_log);
  double interpolate(std::span<const double> table, double x) const;
  void check_support(double x) const;

  Family family_;
  double period_;
  double concentration_ = 0.0;  // von Mises only
  std::vector<double> nodes_;
  std::vector<double> log_density_;
  std::vector<double> dlog_;
  std::vector<double> d2log_;
  std::vector<double> masses_;
};

using PriorDensity = std::variant<GaussianPrior, GridPrior1D>;

std::size_t input_dim(const PriorDensity& prior);

/// Nodes and weights for prior expectations <h(x)>_x ≈ sum_m w_m h(x_m).
/// Weights sum to one.
struct Quadrature {
  std::vector<Vector> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  void validate() const;
};

Quadrature grid_quadrature(const GridPrior1D& prior);
Quadrature point_quadrature(const Vector& x);
/// Equal-weight sample average over i.i.d. draws from the prior.
Quadrature sample_quadrature(std::vector<Vector> samples);

}  // namespace popcode
