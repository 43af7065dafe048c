#include "popcode/prior.hpp"

#include "popcode/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace popcode {

void GaussianPrior::validate() const {
  if (mean.size() == 0 || cov.rows() != mean.size() || cov.cols() != mean.size()) {
    throw Error(Errc::invalid_parameter, "Gaussian prior: mean/covariance shape mismatch");
  }
  if (!cov.isApprox(cov.transpose(), 1e-12) || !is_positive_definite(cov)) {
    throw Error(Errc::invalid_parameter, "Gaussian prior: covariance is not SPD");
  }
}

GridPrior1D::GridPrior1D(Family family, double period, std::size_t nodes)
    : family_(family), period_(period) {
  if (!(period > 0.0)) {
    throw Error(Errc::invalid_parameter, "grid prior: period must be > 0");
  }
  if (nodes < 2) {
    throw Error(Errc::invalid_parameter, "grid prior: need at least 2 nodes");
  }
  nodes_.resize(nodes);
  const double dx = period / static_cast<double>(nodes);
  for (std::size_t m = 0; m < nodes; ++m) {
    nodes_[m] = static_cast<double>(m) * dx - 0.5 * period;
  }
}

void GridPrior1D::finish_normalization(std::vector<double> unnormalized_log) {
  const double log_z = log_sum_exp(unnormalized_log) + std::log(spacing());
  log_density_.resize(unnormalized_log.size());
  masses_.resize(unnormalized_log.size());
  std::vector<double> raw(unnormalized_log.size());
  for (std::size_t m = 0; m < raw.size(); ++m) {
    log_density_[m] = unnormalized_log[m] - log_z;
    raw[m] = std::exp(log_density_[m]) * spacing();
  }
  const double total = pairwise_sum(raw);
  for (std::size_t m = 0; m < raw.size(); ++m) {
    masses_[m] = raw[m] / total;
  }
}

GridPrior1D GridPrior1D::von_mises(double width, double period, std::size_t nodes) {
  if (!(width > 0.0)) {
    throw Error(Errc::invalid_parameter, "von Mises prior: width must be > 0");
  }
  GridPrior1D p(Family::von_mises, period, nodes);
  const double ratio = period / (2.0 * std::numbers::pi * width);
  p.concentration_ = ratio * ratio;
  std::vector<double> q(nodes);
  p.dlog_.resize(nodes);
  p.d2log_.resize(nodes);
  for (std::size_t m = 0; m < nodes; ++m) {
    q[m] = -p.concentration_ * (1.0 - std::cos(2.0 * std::numbers::pi * p.nodes_[m] / period));
    p.dlog_[m] = p.dlog_at(p.nodes_[m]);
    p.d2log_[m] = p.d2log_at(p.nodes_[m]);
  }
  p.finish_normalization(std::move(q));
  return p;
}

GridPrior1D GridPrior1D::uniform(double period, std::size_t nodes) {
  GridPrior1D p(Family::uniform, period, nodes);
  p.dlog_.assign(nodes, 0.0);
  p.d2log_.assign(nodes, 0.0);
  p.finish_normalization(std::vector<double>(nodes, 0.0));
  return p;
}

GridPrior1D GridPrior1D::from_log_density(double period, std::vector<double> log_density) {
  GridPrior1D p(Family::tabulated, period, log_density.size());
  const std::size_t m = log_density.size();
  if (m < 5) {
    throw Error(Errc::invalid_parameter, "grid prior: tabulated density needs at least 5 nodes");
  }
  for (double v : log_density) {
    if (!std::isfinite(v)) {
      throw Error(Errc::invalid_parameter, "grid prior: tabulated log-density must be finite");
    }
  }
  const double h = p.spacing();
  p.dlog_.resize(m);
  p.d2log_.resize(m);
  auto at = [&](std::ptrdiff_t i) {
    const auto mm = static_cast<std::ptrdiff_t>(m);
    return log_density[static_cast<std::size_t>(((i % mm) + mm) % mm)];
  };
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    p.dlog_[i] = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
    p.d2log_[i] =
        (-at(k + 2) + 16.0 * at(k + 1) - 30.0 * at(k) + 16.0 * at(k - 1) - at(k - 2)) / (12.0 * h * h);
  }
  p.finish_normalization(std::move(log_density));
  return p;
}

double GridPrior1D::density(std::size_t m) const { return std::exp(log_density_.at(m)); }

void GridPrior1D::check_support(double x) const {
  if (!(x >= -0.5 * period_) || !(x < 0.5 * period_)) {
    throw Error(Errc::domain_error, "grid prior: x=" + std::to_string(x) + " outside support [-T/2, T/2)");
  }
}

double GridPrior1D::interpolate(std::span<const double> table, double x) const {
  const double pos = (x - lower()) / spacing();
  const auto i0 = static_cast<std::size_t>(std::floor(pos));
  const double t = pos - static_cast<double>(i0);
  const std::size_t a = i0 % table.size();
  const std::size_t b = (i0 + 1) % table.size();
  return (1.0 - t) * table[a] + t * table[b];
}

double GridPrior1D::dlog_at(double x) const {
  check_support(x);
  const double w = 2.0 * std::numbers::pi / period_;
  switch (family_) {
    case Family::von_mises:
      return -concentration_ * w * std::sin(w * x);
    case Family::uniform:
      return 0.0;
    case Family::tabulated:
      break;
  }
  return interpolate(dlog_, x);
}

double GridPrior1D::d2log_at(double x) const {
  check_support(x);
  const double w = 2.0 * std::numbers::pi / period_;
  switch (family_) {
    case Family::von_mises:
      return -concentration_ * w * w * std::cos(w * x);
    case Family::uniform:
      return 0.0;
    case Family::tabulated:
      break;
  }
  return interpolate(d2log_, x);
}

std::size_t input_dim(const PriorDensity& prior) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    return static_cast<std::size_t>(g->mean.size());
  }
  return 1;
}

void Quadrature::validate() const {
  if (nodes.empty() || nodes.size() != weights.size()) {
    throw Error(Errc::invalid_parameter, "quadrature: empty or mismatched nodes/weights");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) {
      throw Error(Errc::invalid_parameter, "quadrature: negative weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw Error(Errc::invalid_parameter, "quadrature: weights must sum to one");
  }
}

Quadrature grid_quadrature(const GridPrior1D& prior) {
  Quadrature q;
  q.nodes.reserve(prior.size());
  for (double x : prior.nodes()) {
    q.nodes.push_back(Vector::Constant(1, x));
  }
  q.weights.assign(prior.masses().begin(), prior.masses().end());
  return q;
}

Quadrature point_quadrature(const Vector& x) { return Quadrature{{x}, {1.0}}; }

Quadrature sample_quadrature(std::vector<Vector> samples) {
  if (samples.empty()) {
    throw Error(Errc::invalid_parameter, "sample quadrature: no samples");
  }
  const double w = 1.0 / static_cast<double>(samples.size());
  Quadrature q;
  q.weights.assign(samples.size(), w);
  q.nodes = std::move(samples);
  return q;
}

}  // namespace popcode
