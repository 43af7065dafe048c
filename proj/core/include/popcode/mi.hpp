#pragma once

#include "popcode/fisher.hpp"
#include "popcode/linalg.hpp"
#include "popcode/models.hpp"
#include "popcode/prior.hpp"

#include <limits>
#include <span>
#include <string_view>

namespace popcode {

enum class MIKind { I_F, I_G, I_Gplus, I_VT, exact_gaussian };

std::string_view to_string(MIKind kind);

/// An information value in nats. `degenerate` is set (and `value` is -inf)
/// when a log-determinant diverged.
struct MIApproximation {
  double value = 0.0;
  MIKind kind = MIKind::I_G;
  bool degenerate = false;
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// H(X) in nats: closed form for Gaussian priors, -sum_m w_m ln p(x_m) on a grid.
double entropy(const PriorDensity& prior);

/// 1/2 <ln det(J / 2 pi e)> + H. Uses only InfoMatrices::J.
MIApproximation i_f(std::span<const InfoMatrices> info, const Quadrature& quad, double entropy);
/// 1/2 <ln det(G / 2 pi e)> + H.
MIApproximation i_g(std::span<const InfoMatrices> info, const Quadrature& quad, double entropy);
/// 1/2 <ln det(G+ / 2 pi e)> + H.
MIApproximation i_g_plus(std::span<const InfoMatrices> info, const Quadrature& quad, double entropy);
/// 1/2 ln det(<G+> / 2 pi e) + H. Never smaller than i_g_plus.
MIApproximation van_trees_bound(std::span<const InfoMatrices> info, const Quadrature& quad,
                                double entropy);

/// Field-based overloads: evaluate J on the quadrature nodes and add the prior terms.
MIApproximation i_f(const MatrixField& fisher, const PriorDensity& prior, const Quadrature& quad);
MIApproximation i_g(const MatrixField& fisher, const PriorDensity& prior, const Quadrature& quad);
MIApproximation i_g_plus(const MatrixField& fisher, const PriorDensity& prior, const Quadrature& quad);

/// 1/2 ln det(Sigma^1/2 A A^T Sigma^1/2 + I), via a symmetric eigendecomposition.
double exact_gaussian_mi(const LinearGaussianModel& model);

struct GapBounds {
  double varsigma = 0.0;       // <Tr(J^-1/2 P J^-1/2)>
  double varsigma_1 = 0.0;     // <||J^-1/2 P J^-1/2||_F>
  double varsigma_plus = 0.0;  // <Tr(P+ J^-1)>
  double ig_minus_if = 0.0;
  double igplus_minus_if = 0.0;
  bool p_psd = false;          // P(x) PSD on every node
  /// Only meaningful when p_psd: 0 <= I_G - I_F <= varsigma / 2 and
  /// 0 <= I_G+ - I_F <= varsigma_plus / 2, each with slack `slack`.
  bool ordering_holds = false;
};

/// Throws Errc::degenerate_input when J is singular on some node.
GapBounds gap_bounds(std::span<const InfoMatrices> info, const Quadrature& quad,
                     double slack = 1e-10);

}  // namespace popcode
