#include "popcode/transform.hpp"

#include "popcode/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace popcode {

namespace {

constexpr std::size_t kColumnChunk = 2048;
constexpr double kSpectrumCut = 1e-12;

std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
  }
  return v;
}

double logdet_or_throw(const Matrix& a, const char* what, std::size_t node) {
  const auto v = logdet_pd(a);
  if (!v) {
    throw Error(Errc::precondition_failed,
                std::string(what) + " is not positive-definite at node " + std::to_string(node));
  }
  return *v;
}

void check_blocks(std::span<const BlockedInfo> blocks, const Quadrature& quad) {
  quad.validate();
  if (blocks.size() != quad.size()) {
    throw Error(Errc::invalid_parameter, "blocked info does not match the quadrature nodes");
  }
}

}  // namespace

Matrix WhiteningTransform::forward_matrix() const {
  return variances.cwiseSqrt().cwiseInverse().asDiagonal() * U.transpose();
}

Matrix WhiteningTransform::inverse_matrix() const { return U * variances.cwiseSqrt().asDiagonal(); }

Vector WhiteningTransform::forward(const Vector& x) const { return forward_matrix() * (x - mean); }

Vector WhiteningTransform::inverse(const Vector& y) const { return inverse_matrix() * y + mean; }

Matrix WhiteningTransform::forward_samples(const Matrix& x) const {
  return (x.rowwise() - mean.transpose()) * forward_matrix().transpose();
}

double WhiteningTransform::entropy_shift() const { return -0.5 * variances.array().log().sum(); }

WhiteningTransform whiten(const Matrix& cov) {
  if (cov.rows() == 0 || cov.rows() != cov.cols()) {
    throw Error(Errc::invalid_parameter, "whiten: covariance must be square and non-empty");
  }
  const Matrix sym = 0.5 * (cov + cov.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw Error(Errc::degenerate_input, "whiten: eigendecomposition failed");
  }
  const auto k = sym.rows();
  WhiteningTransform w;
  w.U.resize(k, k);
  w.variances.resize(k);
  w.mean = Vector::Zero(k);
  // Stable descending order keeps tied eigenvectors in their original order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return es.eigenvalues()(a) > es.eigenvalues()(b);
  });
  for (Eigen::Index i = 0; i < k; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    w.variances(i) = es.eigenvalues()(src);
    w.U.col(i) = es.eigenvectors().col(src);
  }
  const double tol = static_cast<double>(k) * std::numeric_limits<double>::epsilon() *
                     std::max(std::abs(w.variances(0)), 1e-300);
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(w.variances(i) > tol)) {
      throw Error(Errc::degenerate_input, "whiten: covariance is rank deficient; null dimension " +
                                              std::to_string(i) + " of " + std::to_string(k));
    }
  }
  return w;
}

WhiteningTransform whiten_samples(const Matrix& samples) {
  if (samples.rows() < 2) {
    throw Error(Errc::degenerate_input, "whiten_samples: need at least two samples");
  }
  const Vector mean = samples.colwise().mean().transpose();
  const Matrix c = samples.rowwise() - mean.transpose();
  WhiteningTransform w = whiten(c.transpose() * c / static_cast<double>(samples.rows()));
  w.mean = mean;
  return w;
}

Matrix center_patches(const Matrix& patches) {
  Matrix c = patches.colwise() - patches.rowwise().mean();
  c.rowwise() -= c.colwise().mean();
  return c;
}

Pushforward pushforward_info(const Matrix& j, double entropy, const Matrix& t) {
  if (t.rows() != t.cols() || t.rows() != j.rows()) {
    throw Error(Errc::invalid_parameter, "pushforward_info: transform shape mismatch");
  }
  const Eigen::PartialPivLU<Matrix> lu(t);
  const double det = lu.determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
    throw Error(Errc::degenerate_input, "pushforward_info: transform is not invertible");
  }
  const Matrix tinv = lu.inverse();
  Matrix jt = tinv.transpose() * j * tinv;
  jt = 0.5 * (jt + jt.transpose());
  return {jt, entropy + std::log(std::abs(det))};
}

Pushforward pushforward_info(const Matrix& j, double entropy, const WhiteningTransform& w) {
  const Matrix s = w.inverse_matrix();
  Matrix jt = s.transpose() * j * s;
  jt = 0.5 * (jt + jt.transpose());
  return {jt, entropy + w.entropy_shift()};
}

LinearGaussianModel transform_model(const LinearGaussianModel& model, const Matrix& t) {
  model.validate();
  const Eigen::PartialPivLU<Matrix> lu(t);
  LinearGaussianModel out;
  out.mixing = lu.transpose().solve(model.mixing);
  out.prior_mean = t * model.prior_mean;
  out.prior_cov = t * model.prior_cov * t.transpose();
  out.prior_cov = 0.5 * (out.prior_cov + out.prior_cov.transpose());
  return out;
}

Fig2Gap fig2_gap(const Matrix& mixing, const Vector& spectrum) {
  Matrix gram = Matrix::Zero(mixing.rows(), mixing.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(mixing);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return fig2_gap_from_gram(gram, spectrum);
}

Fig2Gap fig2_gap_from_gram(const Matrix& gram, const Vector& spectrum) {
  const auto k = spectrum.size();
  if (k == 0 || gram.rows() != k || gram.cols() != k) {
    throw Error(Errc::invalid_parameter, "fig2_gap: Gram/spectrum shape mismatch");
  }
  if (!(spectrum.minCoeff() > 0.0)) {
    throw Error(Errc::invalid_parameter, "fig2_gap: spectrum must be strictly positive");
  }
  const Vector d = spectrum.cwiseSqrt();
  Matrix m = d.asDiagonal() * gram * d.asDiagonal();
  m.diagonal().array() += 1.0;
  const auto ldg = logdet_pd(m);
  if (!ldg) {
    throw Error(Errc::precondition_failed, "fig2_gap: Gram matrix is not PSD");
  }
  Fig2Gap out;
  out.i_g = 0.5 * *ldg;
  const Eigen::LLT<Matrix> llt(gram);
  const auto lda = logdet_pd(gram);
  if (llt.info() != Eigen::Success || !lda) {
    out.degenerate = true;
    out.i_f = out.d_i_f = out.rel_i_f = -std::numeric_limits<double>::infinity();
    return out;
  }
  out.i_f = 0.5 * (*lda + spectrum.array().log().sum());
  // (A A^T)^{-1} Sigma^{-1} is similar to X X^T with X = L^{-1} Sigma^{-1/2}.
  Matrix x = d.cwiseInverse().asDiagonal();
  llt.matrixL().solveInPlace(x);
  Matrix q = Matrix::Identity(k, k);
  q.selfadjointView<Eigen::Lower>().rankUpdate(x);
  q.triangularView<Eigen::StrictlyUpper>() = q.transpose();
  const auto ldq = logdet_pd(q);
  if (!ldq) {
    throw Error(Errc::precondition_failed, "fig2_gap: I + (AA^T)^-1 Sigma^-1 is not PD");
  }
  out.d_i_f = -0.5 * *ldq;
  out.rel_i_f = out.i_g != 0.0 ? out.d_i_f / out.i_g : -std::numeric_limits<double>::infinity();
  return out;
}

Vector power_law_spectrum(std::size_t k, double exponent) {
  if (k == 0) {
    throw Error(Errc::invalid_parameter, "power_law_spectrum: K must be >= 1");
  }
  Vector s(static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) {
    s(static_cast<Eigen::Index>(i)) = std::pow(static_cast<double>(i + 1), -exponent);
  }
  return s;
}

std::vector<Fig2Gap> fig2_random_mixing(const Vector& spectrum, std::span<const std::size_t> n_list,
                                        std::uint64_t seed, std::uint64_t stream) {
  if (n_list.empty() || !std::is_sorted(n_list.begin(), n_list.end()) || n_list.front() == 0) {
    throw Error(Errc::invalid_parameter, "fig2: N list must be positive and increasing");
  }
  const auto k = spectrum.size();
  Matrix gram = Matrix::Zero(k, k);
  std::vector<Fig2Gap> out;
  out.reserve(n_list.size());
  std::size_t done = 0;
  std::size_t chunk_index = 0;
  Matrix cols;
  for (std::size_t target : n_list) {
    while (done < target) {
      const std::size_t chunk_end = (chunk_index + 1) * kColumnChunk;
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                        static_cast<std::uint32_t>(chunk_index)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      cols.resize(k, static_cast<Eigen::Index>(kColumnChunk));
      for (Eigen::Index c = 0; c < cols.cols(); ++c) {
        for (Eigen::Index r = 0; r < k; ++r) {
          cols(r, c) = normal(rng);
        }
        cols.col(c).normalize();
      }
      // A chunk may straddle a requested N; only the columns up to it are used now.
      const std::size_t first = done - chunk_index * kColumnChunk;
      const std::size_t last = std::min(target, chunk_end) - chunk_index * kColumnChunk;
      gram.selfadjointView<Eigen::Lower>().rankUpdate(
          cols.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(last - first)));
      done = chunk_index * kColumnChunk + last;
      if (done == chunk_end) {
        ++chunk_index;
      }
    }
    Matrix full = gram;
    full.triangularView<Eigen::StrictlyUpper>() = full.transpose();
    out.push_back(fig2_gap_from_gram(full, spectrum));
  }
  return out;
}

Matrix read_patches_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::io_error, "cannot open patch file '" + path + "'");
  }
  std::uint32_t header[2];
  if (!in.read(reinterpret_cast<char*>(header), sizeof(header))) {
    throw Error(Errc::io_error, "patch file '" + path + "': truncated header");
  }
  const std::uint32_t m = to_little(header[0]);
  const std::uint32_t k = to_little(header[1]);
  if (m == 0 || k == 0) {
    throw Error(Errc::io_error, "patch file '" + path + "': empty shape");
  }
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(m) * k);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4))) {
    throw Error(Errc::io_error, "patch file '" + path + "': expected " + std::to_string(raw.size()) +
                                    " float32 values");
  }
  Matrix out(m, k);
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = 0; j < k; ++j) {
      out(i, j) = std::bit_cast<float>(to_little(raw[static_cast<std::size_t>(i) * k + j]));
    }
  }
  return out;
}

void write_patches_binary(const std::string& path, const Matrix& patches) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(Errc::io_error, "cannot write patch file '" + path + "'");
  }
  const std::uint32_t header[2] = {to_little(static_cast<std::uint32_t>(patches.rows())),
                                   to_little(static_cast<std::uint32_t>(patches.cols()))};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (Eigen::Index i = 0; i < patches.rows(); ++i) {
    for (Eigen::Index j = 0; j < patches.cols(); ++j) {
      const std::uint32_t v = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(patches(i, j))));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
}

Matrix read_patches_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::io_error, "cannot open patch file '" + path + "'");
  }
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t\r", used) != std::string::npos) {
        throw Error(Errc::io_error, "patch file '" + path + "': bad value on line " + std::to_string(lineno));
      }
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(Errc::io_error, "patch file '" + path + "': ragged row on line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(Errc::io_error, "patch file '" + path + "' has no rows");
  }
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

Vector patch_spectrum(const Matrix& patches) {
  if (patches.rows() < 2 || patches.cols() == 0) {
    throw Error(Errc::degenerate_input, "patch_spectrum: need at least two non-empty patches");
  }
  const Matrix c = center_patches(patches);
  const Matrix cov = c.transpose() * c / static_cast<double>(c.rows());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(cov, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(Errc::degenerate_input, "patch_spectrum: eigendecomposition failed");
  }
  const Vector ev = es.eigenvalues().reverse();
  // Removing each patch's mean leaves the constant direction (and any other
  // exact null space) at roundoff level; those directions carry no signal.
  const double cut = kSpectrumCut * std::max(ev(0), 0.0);
  Eigen::Index keep = 0;
  while (keep < ev.size() && ev(keep) > cut) {
    ++keep;
  }
  if (keep == 0) {
    throw Error(Errc::degenerate_input, "patch_spectrum: patches have zero variance after centering");
  }
  return ev.head(keep);
}

BlockedInfo BlockedInfo::split(const InfoMatrices& info, std::size_t k1) {
  const auto k = static_cast<std::size_t>(info.G.rows());
  if (k1 == 0 || k1 >= k) {
    throw Error(Errc::invalid_parameter, "BlockedInfo: need 1 <= K1 < K");
  }
  const auto a = static_cast<Eigen::Index>(k1);
  const auto b = static_cast<Eigen::Index>(k - k1);
  BlockedInfo out;
  out.k1 = k1;
  out.k2 = k - k1;
  out.G11 = info.G.topLeftCorner(a, a);
  out.G12 = info.G.topRightCorner(a, b);
  out.G21 = info.G.bottomLeftCorner(b, a);
  out.G22 = info.G.bottomRightCorner(b, b);
  out.J11 = info.J.topLeftCorner(a, a);
  out.J12 = info.J.topRightCorner(a, b);
  out.J21 = info.J.bottomLeftCorner(b, a);
  out.J22 = info.J.bottomRightCorner(b, b);
  out.P22 = info.P.bottomRightCorner(b, b);
  return out;
}

Matrix coupling_term(const BlockedInfo& b) {
  const Eigen::LLT<Matrix> llt(b.G11);
  if (llt.info() != Eigen::Success) {
    throw Error(Errc::precondition_failed, "coupling_term: G11 is not positive-definite");
  }
  return b.G21 * llt.solve(b.G12);
}

Matrix reduction_matrix_a(const BlockedInfo& b) {
  const Matrix w = sym_inv_sqrt(b.G22);
  Matrix a = w * coupling_term(b) * w;
  return 0.5 * (a + a.transpose());
}

Matrix reduction_matrix_b(const BlockedInfo& b) {
  const Matrix w = sym_inv_sqrt(b.P22);
  Matrix c = w * (b.J22 - coupling_term(b)) * w;
  return 0.5 * (c + c.transpose());
}

ReductionCheck reduce_check_a(std::span<const BlockedInfo> blocks, const Quadrature& quad,
                              double entropy) {
  check_blocks(blocks, quad);
  const std::size_t n = blocks.size();
  std::vector<double> tr(n), factored(n), full(n);
  const double k = static_cast<double>(blocks.front().k1 + blocks.front().k2);
  for (std::size_t m = 0; m < n; ++m) {
    const BlockedInfo& b = blocks[m];
    const double l11 = logdet_or_throw(b.G11, "G11", m);
    const double l22 = logdet_or_throw(b.G22, "G22", m);
    const Matrix coupling = coupling_term(b);
    const double ls = logdet_or_throw(b.G22 - coupling, "G", m);
    tr[m] = reduction_matrix_a(b).trace();
    factored[m] = l11 + l22;
    full[m] = l11 + ls;
  }
  ReductionCheck out;
  out.trace = pairwise_dot(quad.weights, tr);
  const double f = pairwise_dot(quad.weights, factored);
  out.reference = std::abs(f);
  out.relative = out.reference > 0.0 ? std::abs(out.trace) / out.reference
                                     : std::numeric_limits<double>::infinity();
  out.i_g_reduced = 0.5 * (f - k * std::log(kTwoPiE)) + entropy;
  out.i_g = 0.5 * (pairwise_dot(quad.weights, full) - k * std::log(kTwoPiE)) + entropy;
  return out;
}

ReductionCheck reduce_check_b(std::span<const BlockedInfo> blocks, const Quadrature& quad,
                              double entropy) {
  check_blocks(blocks, quad);
  const std::size_t n = blocks.size();
  std::vector<double> tr(n), factored(n), full(n);
  const double k = static_cast<double>(blocks.front().k1 + blocks.front().k2);
  for (std::size_t m = 0; m < n; ++m) {
    const BlockedInfo& b = blocks[m];
    const double l11 = logdet_or_throw(b.G11, "G11", m);
    const double lp = logdet_or_throw(b.P22, "P22", m);
    const Matrix c = b.J22 - coupling_term(b);
    const double ls = logdet_or_throw(b.P22 + c, "G", m);
    tr[m] = reduction_matrix_b(b).trace();
    factored[m] = l11 + lp;
    full[m] = l11 + ls;
  }
  ReductionCheck out;
  out.trace = pairwise_dot(quad.weights, tr);
  const double f = pairwise_dot(quad.weights, factored);
  out.reference = std::abs(f);
  out.relative = out.reference > 0.0 ? std::abs(out.trace) / out.reference
                                     : std::numeric_limits<double>::infinity();
  out.i_g_reduced = 0.5 * (f - k * std::log(kTwoPiE)) + entropy;
  out.i_g = 0.5 * (pairwise_dot(quad.weights, full) - k * std::log(kTwoPiE)) + entropy;
  return out;
}

std::size_t select_k1(std::span<const Matrix> j, const Quadrature& quad, double eps) {
  quad.validate();
  if (j.size() != quad.size()) {
    throw Error(Errc::invalid_parameter, "select_k1: J does not match the quadrature nodes");
  }
  if (!(eps > 0.0) || !(eps < 1.0)) {
    throw Error(Errc::invalid_parameter, "select_k1: eps must lie in (0, 1)");
  }
  const auto k = static_cast<std::size_t>(j.front().rows());
  std::vector<double> tail(j.size()), gamma(j.size());
  for (std::size_t k1 = 1; k1 < k; ++k1) {
    const auto a = static_cast<Eigen::Index>(k1);
    const auto b = static_cast<Eigen::Index>(k - k1);
    for (std::size_t m = 0; m < j.size(); ++m) {
      tail[m] = j[m].bottomRightCorner(b, b).trace();
      Matrix j11 = j[m].topLeftCorner(a, a);
      j11.diagonal().array() += 1.0;
      const auto ld = logdet_pd(j11);
      if (!ld) {
        throw Error(Errc::precondition_failed, "select_k1: J11 + I is not positive-definite");
      }
      gamma[m] = *ld;
    }
    if (pairwise_dot(quad.weights, tail) <= eps * pairwise_dot(quad.weights, gamma)) {
      return k1;
    }
  }
  return k;
}

}  // namespace popcode
