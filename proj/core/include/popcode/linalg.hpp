#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace popcode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kTwoPiE = 17.079468445347132;  // 2*pi*e

/// Log-determinant of a symmetric matrix through its Cholesky factor.
///
/// Returns std::nullopt when the factorization fails or a pivot is
/// numerically zero, i.e. L(i,i)^2 <= 8 K eps max|A(i,i)|. No eigenvalue
/// clipping or jitter is ever applied.
std::optional<double> logdet_pd(const Matrix& a);

/// Cholesky-based positive-definiteness test with the same pivot rule.
bool is_positive_definite(const Matrix& a);

/// Symmetric square root and inverse square root via eigendecomposition.
/// Throws Errc::precondition_failed if the matrix is not PD (resp. PSD for sqrt).
Matrix sym_sqrt(const Matrix& a);
Matrix sym_inv_sqrt(const Matrix& a);

double min_eigenvalue(const Matrix& a);

// Pairwise (cascade) summation; fixed order, so results do not depend on
// how the caller's loop was scheduled.
double pairwise_sum(std::span<const double> values);

// sum_i w_i * x_i reduced pairwise.
double pairwise_dot(std::span<const double> weights, std::span<const double> values);

double log_sum_exp(std::span<const double> values);

// Weighted mean of a list of equally-shaped matrices, reduced pairwise.
Matrix weighted_mean(std::span<const Matrix> mats, std::span<const double> weights);

}  // namespace popcode
