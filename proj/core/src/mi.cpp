#include "popcode/mi.hpp"

#include "popcode/error.hpp"

#include <cmath>
#include <vector>

namespace popcode {

namespace {

void check_nodes(std::span<const InfoMatrices> info, const Quadrature& quad) {
  quad.validate();
  if (info.size() != quad.size()) {
    throw Error(Errc::invalid_parameter, "information matrices do not match the quadrature nodes");
  }
}

// 1/2 <ln det(M(x) / 2 pi e)> + H, with M picked out of each InfoMatrices.
template <class Pick>
MIApproximation averaged_logdet(std::span<const InfoMatrices> info, const Quadrature& quad,
                                double h, MIKind kind, Pick pick) {
  check_nodes(info, quad);
  std::vector<double> ld(info.size(), 0.0);
  for (std::size_t m = 0; m < info.size(); ++m) {
    if (quad.weights[m] == 0.0) {
      continue;
    }
    const Matrix& a = pick(info[m]);
    const auto v = logdet_pd(a);
    if (!v) {
      return {kNegInf, kind, true};
    }
    ld[m] = *v - static_cast<double>(a.rows()) * std::log(kTwoPiE);
  }
  return {0.5 * pairwise_dot(quad.weights, ld) + h, kind, false};
}

}  // namespace

std::string_view to_string(MIKind kind) {
  switch (kind) {
    case MIKind::I_F:
      return "I_F";
    case MIKind::I_G:
      return "I_G";
    case MIKind::I_Gplus:
      return "I_Gplus";
    case MIKind::I_VT:
      return "I_VT";
    case MIKind::exact_gaussian:
      return "exact_gaussian";
  }
  return "unknown";
}

double entropy(const PriorDensity& prior) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    g->validate();
    const auto ld = logdet_pd(g->cov);
    if (!ld) {
      throw Error(Errc::invalid_parameter, "entropy: prior covariance is not SPD");
    }
    return 0.5 * (*ld + static_cast<double>(g->mean.size()) * std::log(kTwoPiE));
  }
  const auto& grid = std::get<GridPrior1D>(prior);
  std::vector<double> neg(grid.size());
  for (std::size_t m = 0; m < neg.size(); ++m) {
    neg[m] = -grid.log_density()[m];
  }
  return pairwise_dot(grid.masses(), neg);
}

MIApproximation i_f(std::span<const InfoMatrices> info, const Quadrature& quad, double h) {
  return averaged_logdet(info, quad, h, MIKind::I_F, [](const InfoMatrices& i) -> const Matrix& { return i.J; });
}

MIApproximation i_g(std::span<const InfoMatrices> info, const Quadrature& quad, double h) {
  return averaged_logdet(info, quad, h, MIKind::I_G, [](const InfoMatrices& i) -> const Matrix& { return i.G; });
}

MIApproximation i_g_plus(std::span<const InfoMatrices> info, const Quadrature& quad, double h) {
  return averaged_logdet(info, quad, h, MIKind::I_Gplus,
                         [](const InfoMatrices& i) -> const Matrix& { return i.Gplus; });
}

MIApproximation van_trees_bound(std::span<const InfoMatrices> info, const Quadrature& quad,
                                double h) {
  check_nodes(info, quad);
  std::vector<Matrix> gp;
  gp.reserve(info.size());
  for (const auto& i : info) {
    gp.push_back(i.Gplus);
  }
  const Matrix mean = weighted_mean(gp, quad.weights);
  const auto ld = logdet_pd(mean);
  if (!ld) {
    return {kNegInf, MIKind::I_VT, true};
  }
  return {0.5 * (*ld - static_cast<double>(mean.rows()) * std::log(kTwoPiE)) + h, MIKind::I_VT, false};
}

MIApproximation i_f(const MatrixField& fisher, const PriorDensity& prior, const Quadrature& quad) {
  return i_f(evaluate_info(fisher, prior, quad), quad, entropy(prior));
}

MIApproximation i_g(const MatrixField& fisher, const PriorDensity& prior, const Quadrature& quad) {
  return i_g(evaluate_info(fisher, prior, quad), quad, entropy(prior));
}

MIApproximation i_g_plus(const MatrixField& fisher, const PriorDensity& prior,
                         const Quadrature& quad) {
  return i_g_plus(evaluate_info(fisher, prior, quad), quad, entropy(prior));
}

double exact_gaussian_mi(const LinearGaussianModel& model) {
  model.validate();
  if (!is_positive_definite(model.prior_cov)) {
    throw Error(Errc::invalid_parameter, "exact_gaussian_mi: prior covariance is not SPD");
  }
  const Matrix s = sym_sqrt(model.prior_cov);
  const Matrix sa = s * model.mixing;
  Matrix m = sa * sa.transpose();
  m = 0.5 * (m + m.transpose());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  double total = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    total += std::log1p(std::max(es.eigenvalues()(i), 0.0));
  }
  return 0.5 * total;
}

GapBounds gap_bounds(std::span<const InfoMatrices> info, const Quadrature& quad, double slack) {
  check_nodes(info, quad);
  const std::size_t n = info.size();
  std::vector<double> tr(n, 0.0), fro(n, 0.0), trp(n, 0.0), dg(n, 0.0), dgp(n, 0.0);
  bool psd = true;
  for (std::size_t m = 0; m < n; ++m) {
    const InfoMatrices& i = info[m];
    const auto ldj = logdet_pd(i.J);
    if (!ldj) {
      throw Error(Errc::degenerate_input,
                  "gap_bounds: J is singular at quadrature node " + std::to_string(m));
    }
    const Matrix w = sym_inv_sqrt(i.J);
    const Matrix c = w * i.P * w;
    tr[m] = c.trace();
    fro[m] = c.norm();
    trp[m] = i.J.llt().solve(i.Pplus).trace();
    if (min_eigenvalue(i.P) < -1e-12 * std::max(1.0, i.P.norm())) {
      psd = false;
    }
    const auto ldg = logdet_pd(i.G);
    const auto ldgp = logdet_pd(i.Gplus);
    dg[m] = ldg ? 0.5 * (*ldg - *ldj) : kNegInf;
    dgp[m] = ldgp ? 0.5 * (*ldgp - *ldj) : kNegInf;
  }
  GapBounds b;
  b.varsigma = pairwise_dot(quad.weights, tr);
  b.varsigma_1 = pairwise_dot(quad.weights, fro);
  b.varsigma_plus = pairwise_dot(quad.weights, trp);
  b.ig_minus_if = pairwise_dot(quad.weights, dg);
  b.igplus_minus_if = pairwise_dot(quad.weights, dgp);
  b.p_psd = psd;
  b.ordering_holds = psd && b.ig_minus_if >= -slack && b.ig_minus_if <= 0.5 * b.varsigma + slack &&
                     b.igplus_minus_if >= -slack &&
                     b.igplus_minus_if <= 0.5 * b.varsigma_plus + slack;
  return b;
}

}  // namespace popcode
