#include "popcode/linalg.hpp"

#include "popcode/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace popcode {

namespace {

// Plain right-looking Cholesky so that the pivot test can be applied to every
// diagonal entry as it is produced. Returns false on a non-positive pivot.
bool cholesky_diag(const Matrix& a, Vector& pivots) {
  const Eigen::Index k = a.rows();
  if (a.cols() != k) {
    throw Error(Errc::invalid_parameter, "cholesky: matrix is not square");
  }
  if (k == 0) {
    pivots.resize(0);
    return true;
  }
  double scale = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    scale = std::max(scale, std::abs(a(i, i)));
  }
  if (!std::isfinite(scale) || scale == 0.0) {
    return false;
  }
  const double tiny = 8.0 * static_cast<double>(k) * std::numeric_limits<double>::epsilon() * scale;

  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    return false;
  }
  const Matrix& l = llt.matrixLLT();
  pivots.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double p = l(i, i) * l(i, i);
    if (!(p > tiny) || !std::isfinite(p)) {
      return false;
    }
    pivots(i) = p;
  }
  return true;
}

}  // namespace

std::optional<double> logdet_pd(const Matrix& a) {
  Vector pivots;
  if (!cholesky_diag(a, pivots)) {
    return std::nullopt;
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pivots.size(); ++i) {
    sum += std::log(pivots(i));
  }
  return sum;
}

bool is_positive_definite(const Matrix& a) {
  Vector pivots;
  return cholesky_diag(a, pivots);
}

Matrix sym_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(Errc::precondition_failed, "sym_sqrt: eigendecomposition failed");
  }
  Vector ev = es.eigenvalues();
  const double tol = -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < tol) {
    throw Error(Errc::precondition_failed, "sym_sqrt: matrix is not positive semidefinite");
  }
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Matrix sym_inv_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  if (es.info() != Eigen::Success) {
    throw Error(Errc::precondition_failed, "sym_inv_sqrt: eigendecomposition failed");
  }
  const Vector& ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0.0)) {
    throw Error(Errc::precondition_failed, "sym_inv_sqrt: matrix is not positive definite");
  }
  const Vector inv = ev.cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigenvalue(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 32;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) {
      s += v;
    }
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double pairwise_dot(std::span<const double> weights, std::span<const double> values) {
  if (weights.size() != values.size()) {
    throw Error(Errc::invalid_parameter, "pairwise_dot: size mismatch");
  }
  std::vector<double> prod(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    prod[i] = weights[i] == 0.0 ? 0.0 : weights[i] * values[i];
  }
  return pairwise_sum(prod);
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) {
    return -std::numeric_limits<double>::infinity();
  }
  const double mx = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(mx)) {
    return mx;
  }
  std::vector<double> shifted(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    shifted[i] = std::exp(values[i] - mx);
  }
  return mx + std::log(pairwise_sum(shifted));
}

Matrix weighted_mean(std::span<const Matrix> mats, std::span<const double> weights) {
  if (mats.size() != weights.size() || mats.empty()) {
    throw Error(Errc::invalid_parameter, "weighted_mean: size mismatch or empty input");
  }
  // Pairwise over the node list, elementwise over the matrix.
  if (mats.size() == 1) {
    return weights[0] * mats[0];
  }
  const std::size_t half = mats.size() / 2;
  return weighted_mean(mats.first(half), weights.first(half)) +
         weighted_mean(mats.subspan(half), weights.subspan(half));
}

}  // namespace popcode
