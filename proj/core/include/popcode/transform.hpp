#pragma once

#include "popcode/fisher.hpp"
#include "popcode/linalg.hpp"
#include "popcode/models.hpp"
#include "popcode/prior.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace popcode {

/// x~ = Sigma^{-1/2} U^T (x - mean) for the eigendecomposition Cov = U Sigma U^T,
/// eigenvalues sorted in descending order.
struct WhiteningTransform {
  Matrix U;
  Vector variances;
  Vector mean;

  std::size_t dim() const { return static_cast<std::size_t>(variances.size()); }
  Matrix forward_matrix() const;  // Sigma^{-1/2} U^T
  Matrix inverse_matrix() const;  // U Sigma^{1/2}
  Vector forward(const Vector& x) const;
  Vector inverse(const Vector& y) const;
  /// Rows are samples.
  Matrix forward_samples(const Matrix& x) const;
  /// H(X~) - H(X) = -1/2 ln det Sigma.
  double entropy_shift() const;
};

/// Throws Errc::degenerate_input, naming the (descending-order) index of the
/// first null direction, when the covariance is rank deficient.
WhiteningTransform whiten(const Matrix& cov);

/// Rows are samples; the sample covariance (1/M normalization) is whitened
/// about the sample mean.
WhiteningTransform whiten_samples(const Matrix& samples);

/// Subtracts each row's mean, then each column's mean (patch, then global).
Matrix center_patches(const Matrix& patches);

struct Pushforward {
  Matrix J;
  double entropy;
};

/// Information in the coordinates x~ = T x: J~ = T^{-T} J T^{-1} and
/// H(X~) = H(X) + ln|det T|.
Pushforward pushforward_info(const Matrix& j, double entropy, const Matrix& t);
/// J~ = Sigma^{1/2} U^T J U Sigma^{1/2}, H(X~) = H(X) - 1/2 ln det Sigma.
Pushforward pushforward_info(const Matrix& j, double entropy, const WhiteningTransform& w);

/// The same channel expressed in x~ = T x: A~ = T^{-T} A, mean T mu, cov T Sigma T^T.
LinearGaussianModel transform_model(const LinearGaussianModel& model, const Matrix& t);

/// Approximation gap for y with prior N(0, diag(spectrum)) observed through
/// r = A^T y + unit Gaussian noise.
struct Fig2Gap {
  double i_g = 0.0;
  double i_f = 0.0;
  double d_i_f = 0.0;   // I_F - I_G = -1/2 ln det(I + (A A^T)^{-1} Sigma^{-1})
  double rel_i_f = 0.0; // d_i_f / i_g
  bool degenerate = false;  // A A^T singular; i_f, d_i_f, rel_i_f are -inf
};

Fig2Gap fig2_gap(const Matrix& mixing, const Vector& spectrum);
/// Same, given the Gram matrix A A^T directly.
Fig2Gap fig2_gap_from_gram(const Matrix& gram, const Vector& spectrum);

/// sigma_k^2 = k^{-exponent}, k = 1..K (unit leading eigenvalue).
Vector power_law_spectrum(std::size_t k, double exponent);

/// Random K x N_max mixing with i.i.d. standard-normal columns scaled to unit
/// norm; for each requested N the gap uses the first N columns, so the
/// populations are nested. `n_list` must be increasing. Columns are drawn in
/// fixed-size chunks, each from its own (seed, stream, chunk) random stream.
std::vector<Fig2Gap> fig2_random_mixing(const Vector& spectrum, std::span<const std::size_t> n_list,
                                        std::uint64_t seed, std::uint64_t stream);

/// Patch files: little-endian header (uint32 M, uint32 K) followed by M*K
/// float32 values, row-major; or CSV with one patch per line.
Matrix read_patches_binary(const std::string& path);
Matrix read_patches_csv(const std::string& path);
void write_patches_binary(const std::string& path, const Matrix& patches);

/// Descending eigenvalues of the sample covariance of the centered patches.
/// Eigenvalues below 1e-12 of the largest are dropped: per-patch mean removal
/// always leaves the constant direction null, so K is usually w*w - 1.
Vector patch_spectrum(const Matrix& patches);

struct BlockedInfo {
  std::size_t k1 = 0;
  std::size_t k2 = 0;
  Matrix G11, G12, G21, G22;
  Matrix J11, J12, J21, J22;
  Matrix P22;

  static BlockedInfo split(const InfoMatrices& info, std::size_t k1);
};

/// G21 G11^{-1} G12.
Matrix coupling_term(const BlockedInfo& b);
/// G22^{-1/2} G21 G11^{-1} G12 G22^{-1/2}.
Matrix reduction_matrix_a(const BlockedInfo& b);
/// P22^{-1/2} (J22 - G21 G11^{-1} G12) P22^{-1/2}.
Matrix reduction_matrix_b(const BlockedInfo& b);

struct ReductionCheck {
  double trace = 0.0;      // Tr <A_x> (resp. Tr <B_x>)
  double reference = 0.0;  // |<ln det G11 det G22>| (resp. with P22)
  double relative = 0.0;   // |trace| / reference
  double i_g_reduced = 0.0;
  double i_g = 0.0;

  bool negligible(double eps) const { return std::abs(trace) <= eps; }
  bool negligible_relative(double eps) const { return relative <= eps; }
};

inline constexpr double kDefaultReductionEps = 0.01;

/// Factored approximation from the G11 and G22 blocks. I_G is evaluated
/// through the Schur complement of G11, so block-diagonal input gives
/// identical values. Throws Errc::precondition_failed on a non-PD block.
ReductionCheck reduce_check_a(std::span<const BlockedInfo> blocks, const Quadrature& quad,
                              double entropy);

/// Factored approximation from G11 and P22, with I_G evaluated as
/// ln det G11 + ln det(P22 + C_x).
ReductionCheck reduce_check_b(std::span<const BlockedInfo> blocks, const Quadrature& quad,
                              double entropy);

/// Smallest K1 < K with <Tr J22> <= eps <ln det(J11 + I)>; K if none.
std::size_t select_k1(std::span<const Matrix> j, const Quadrature& quad, double eps);

}  // namespace popcode
