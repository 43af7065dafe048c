#include "popcode/fisher.hpp"

#include "popcode/error.hpp"
#include "popcode/parallel.hpp"

#include <cmath>
#include <string>

namespace popcode {

PopulationDensity PopulationDensity::uniform(std::vector<TuningCurve> subclasses) {
  PopulationDensity pop;
  const auto k = static_cast<Eigen::Index>(subclasses.size());
  pop.weights = Vector::Constant(k, k > 0 ? 1.0 / static_cast<double>(k) : 0.0);
  pop.subclasses = std::move(subclasses);
  return pop;
}

void PopulationDensity::validate() const {
  if (subclasses.empty() || static_cast<std::size_t>(weights.size()) != subclasses.size()) {
    throw Error(Errc::invalid_parameter, "population density: empty or mismatched weights");
  }
  if (weights.minCoeff() < 0.0 || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw Error(Errc::invalid_parameter, "population density: weights are not on the simplex");
  }
}

FisherKernel poisson_kernel(double rate_floor) {
  return [rate_floor](const TuningCurve& c, const Vector& x) {
    return poisson_fisher_kernel(c, x, rate_floor);
  };
}

FisherKernel gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(Errc::invalid_parameter, "gaussian kernel: sigma must be > 0");
  }
  return [sigma](const TuningCurve& c, const Vector& x) { return gaussian_fisher_kernel(c, sigma, x); };
}

Matrix fisher_matrix(const PopulationDensity& pop, const FisherKernel& kernel, const Vector& x,
                     double n) {
  pop.validate();
  const auto k = x.size();
  Matrix j = Matrix::Zero(k, k);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const double a = pop.weights(static_cast<Eigen::Index>(i));
    if (a != 0.0) {
      j.noalias() += a * kernel(pop.subclasses[i], x);
    }
  }
  return n * j;
}

Matrix prior_curvature(const PriorDensity& prior, const Vector& x) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    if (x.size() != g->mean.size()) {
      throw Error(Errc::invalid_parameter, "prior_curvature: dimension mismatch");
    }
    return g->cov.inverse();
  }
  const auto& grid = std::get<GridPrior1D>(prior);
  if (x.size() != 1) {
    throw Error(Errc::invalid_parameter, "prior_curvature: grid prior is one-dimensional");
  }
  return Matrix::Constant(1, 1, -grid.d2log_at(x(0)));
}

Matrix p_plus(const PriorDensity& prior) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    return g->cov.inverse();
  }
  const auto& grid = std::get<GridPrior1D>(prior);
  std::vector<double> sq(grid.size());
  for (std::size_t m = 0; m < sq.size(); ++m) {
    const double d = grid.dlog_density()[m];
    sq[m] = d * d;
  }
  const double v = pairwise_dot(grid.masses(), sq);
  if (!std::isfinite(v)) {
    throw Error(Errc::quadrature_failure, "p_plus: <q'^2> diverges on the grid");
  }
  return Matrix::Constant(1, 1, v);
}

Matrix mean_prior_curvature(const PriorDensity& prior) {
  if (const auto* g = std::get_if<GaussianPrior>(&prior)) {
    return g->cov.inverse();
  }
  const auto& grid = std::get<GridPrior1D>(prior);
  std::vector<double> neg(grid.size());
  for (std::size_t m = 0; m < neg.size(); ++m) {
    neg[m] = -grid.d2log_density()[m];
  }
  return Matrix::Constant(1, 1, pairwise_dot(grid.masses(), neg));
}

InfoMatrices assemble(const Matrix& j, const Matrix& p, const Matrix& pplus) {
  if (j.rows() != j.cols() || p.rows() != j.rows() || p.cols() != j.cols() ||
      pplus.rows() != j.rows() || pplus.cols() != j.cols()) {
    throw Error(Errc::invalid_parameter, "assemble: shape mismatch");
  }
  InfoMatrices info{j, p, pplus, j + p, j + pplus, false, false};
  info.g_positive_definite = is_positive_definite(info.G);
  info.gplus_positive_definite = is_positive_definite(info.Gplus);
  return info;
}

InfoMatrices assemble(const Matrix& j, const PriorDensity& prior, const Vector& x) {
  return assemble(j, prior_curvature(prior, x), p_plus(prior));
}

MatrixField population_fisher(const PopulationModel& model) {
  return [&model](const Vector& x) { return fisher_information(model, x); };
}

std::vector<InfoMatrices> evaluate_info(const MatrixField& fisher, const PriorDensity& prior,
                                        const Quadrature& quad) {
  quad.validate();
  const Matrix pplus = p_plus(prior);
  std::vector<InfoMatrices> out(quad.size());
  parallel_for(quad.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t m = begin; m < end; ++m) {
      const Vector& x = quad.nodes[m];
      out[m] = assemble(fisher(x), prior_curvature(prior, x), pplus);
    }
  });
  return out;
}

}  // namespace popcode
