#include "popcode/optimize.hpp"

#include "popcode/error.hpp"
#include "popcode/mi.hpp"
#include "popcode/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace popcode {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A vertex of the feasible polytope: t e_lo + (1 - t) e_hi (lo == hi for a
// simplex vertex, with t = 1).
struct Atom {
  std::size_t lo;
  std::size_t hi;
  double t;
};

std::vector<Atom> enumerate_vertices(const Vector& c, const std::optional<double>& limit) {
  const auto k1 = static_cast<std::size_t>(c.size());
  std::vector<Atom> out;
  for (std::size_t k = 0; k < k1; ++k) {
    if (!limit || c(static_cast<Eigen::Index>(k)) <= *limit) {
      out.push_back({k, k, 1.0});
    }
  }
  if (!limit) {
    return out;
  }
  const double e = *limit;
  for (std::size_t i = 0; i < k1; ++i) {
    for (std::size_t j = i + 1; j < k1; ++j) {
      const double ci = c(static_cast<Eigen::Index>(i));
      const double cj = c(static_cast<Eigen::Index>(j));
      if ((ci < e && cj > e) || (cj < e && ci > e)) {
        const std::size_t lo = ci < cj ? i : j;
        const std::size_t hi = ci < cj ? j : i;
        const double clo = std::min(ci, cj);
        const double chi = std::max(ci, cj);
        out.push_back({lo, hi, (chi - e) / (chi - clo)});
      }
    }
  }
  return out;
}

double atom_dot(const Atom& a, const Vector& g) {
  const auto lo = static_cast<Eigen::Index>(a.lo);
  const auto hi = static_cast<Eigen::Index>(a.hi);
  return a.lo == a.hi ? g(lo) : a.t * g(lo) + (1.0 - a.t) * g(hi);
}

void add_atom(Vector& alpha, const Atom& a, double w) {
  alpha(static_cast<Eigen::Index>(a.lo)) += w * a.t;
  if (a.lo != a.hi) {
    alpha(static_cast<Eigen::Index>(a.hi)) += w * (1.0 - a.t);
  }
}

Vector combine(const std::vector<Atom>& atoms, const std::vector<double>& lambda, std::size_t k1) {
  Vector alpha = Vector::Zero(static_cast<Eigen::Index>(k1));
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    if (lambda[a] > 0.0) {
      add_atom(alpha, atoms[a], lambda[a]);
    }
  }
  return alpha;
}

// Writes a feasible alpha as a convex combination of polytope vertices:
// high-rate mass is paired off against low-rate mass, the rest stays on
// simplex vertices.
std::vector<double> decompose(const Vector& alpha, const Vector& c, const std::optional<double>& limit,
                              const std::vector<Atom>& atoms) {
  const auto k1 = static_cast<std::size_t>(alpha.size());
  std::vector<double> lambda(atoms.size(), 0.0);
  auto vertex_slot = [&](std::size_t k) -> std::size_t {
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      if (atoms[a].lo == k && atoms[a].hi == k) {
        return a;
      }
    }
    throw Error(Errc::invalid_parameter, "initial density puts mass on an infeasible subclass");
  };
  if (!limit) {
    for (std::size_t k = 0; k < k1; ++k) {
      lambda[vertex_slot(k)] = alpha(static_cast<Eigen::Index>(k));
    }
    return lambda;
  }
  const double e = *limit;
  std::vector<double> rest(alpha.data(), alpha.data() + k1);
  std::size_t l = 0;
  for (std::size_t h = 0; h < k1; ++h) {
    if (!(c(static_cast<Eigen::Index>(h)) > e)) {
      continue;
    }
    while (rest[h] > 0.0) {
      while (l < k1 && (!(c(static_cast<Eigen::Index>(l)) < e) || rest[l] <= 0.0)) {
        ++l;
      }
      if (l == k1) {
        if (rest[h] <= 1e-14) {
          rest[h] = 0.0;
          break;
        }
        throw Error(Errc::invalid_parameter, "initial density violates the average-power limit");
      }
      std::size_t slot = atoms.size();
      for (std::size_t a = 0; a < atoms.size(); ++a) {
        if (atoms[a].lo == l && atoms[a].hi == h) {
          slot = a;
          break;
        }
      }
      const Atom& at = atoms[slot];
      const double w = std::min(rest[h] / (1.0 - at.t), rest[l] / at.t);
      lambda[slot] += w;
      rest[h] -= w * (1.0 - at.t);
      rest[l] -= w * at.t;
      if (rest[h] < 1e-300) {
        rest[h] = 0.0;
      }
      if (rest[l] < 1e-300) {
        rest[l] = 0.0;
      }
    }
  }
  for (std::size_t k = 0; k < k1; ++k) {
    if (rest[k] > 0.0) {
      lambda[vertex_slot(k)] += rest[k];
    }
  }
  double total = 0.0;
  for (double w : lambda) {
    total += w;
  }
  for (double& w : lambda) {
    w /= total;
  }
  return lambda;
}

Vector atom_vector(const Atom& a, std::size_t k1) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(k1));
  add_atom(v, a, 1.0);
  return v;
}

// Re-optimizes the atom weights over the support {lambda > 0} plus the
// entering atom by projected Newton steps. A blocking weight is set to zero
// and leaves the support. `accept` commits a step when it does not lower the
// objective. Returns false when no step at all could be taken.
template <class Accept>
bool corrective_newton(const PreparedProblem& prep, const std::vector<Atom>& atoms, std::size_t entering,
                       double tol, std::vector<double>& lambda, const Vector& alpha, Vector g,
                       Accept&& accept) {
  const std::size_t k1 = prep.size();
  std::vector<std::size_t> supp;
  for (std::size_t a = 0; a < atoms.size(); ++a) {
    if (lambda[a] > 0.0 || a == entering) {
      supp.push_back(a);
    }
  }
  bool progressed = false;
  const std::size_t max_inner = 4 * atoms.size() + 50;
  for (std::size_t inner = 0; inner < max_inner; ++inner) {
    if (inner > 0) {
      const auto gg = prep.gradient(alpha);
      if (!gg) {
        break;
      }
      g = *gg;
    }
    const auto h = prep.hessian(alpha);
    if (!h) {
      break;
    }
    const auto n = static_cast<Eigen::Index>(supp.size());
    Matrix a(static_cast<Eigen::Index>(k1), n);
    for (Eigen::Index j = 0; j < n; ++j) {
      a.col(j) = atom_vector(atoms[supp[static_cast<std::size_t>(j)]], k1);
    }
    const Vector gs = a.transpose() * g;
    if (gs.maxCoeff() - gs.minCoeff() < 0.25 * tol) {
      break;  // stationary on this face
    }
    Matrix q = -(a.transpose() * *h * a);
    q.diagonal().array() += 1e-12 * std::max(q.diagonal().maxCoeff(), 1e-300);
    const Eigen::LDLT<Matrix> ldlt(q);
    const Vector y1 = ldlt.solve(gs);
    const Vector y2 = ldlt.solve(Vector::Ones(n));
    Vector d = y1 - (y1.sum() / y2.sum()) * y2;

    // Zero-weight members that the step would push negative leave the support.
    bool dropped = false;
    for (Eigen::Index j = n - 1; j >= 0; --j) {
      if (lambda[supp[static_cast<std::size_t>(j)]] <= 0.0 && d(j) < 0.0) {
        supp.erase(supp.begin() + j);
        dropped = true;
      }
    }
    if (dropped) {
      if (supp.size() <= 1) {
        break;
      }
      continue;
    }

    double t = 1.0;
    Eigen::Index blocking = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (d(j) < 0.0) {
        const double r = -lambda[supp[static_cast<std::size_t>(j)]] / d(j);
        if (r < t) {
          t = r;
          blocking = j;
        }
      }
    }
    bool accepted = false;
    for (int shrink = 0; shrink < 40 && !accepted && t > 0.0; ++shrink) {
      std::vector<double> next = lambda;
      for (Eigen::Index j = 0; j < n; ++j) {
        double& w = next[supp[static_cast<std::size_t>(j)]];
        w = std::max(0.0, w + t * d(j));
      }
      if (shrink == 0 && blocking >= 0) {
        next[supp[static_cast<std::size_t>(blocking)]] = 0.0;
      }
      double total = 0.0;
      for (double w : next) {
        total += w;
      }
      for (double& w : next) {
        w /= total;
      }
      accepted = accept(std::move(next));
      if (!accepted) {
        t *= 0.5;
        blocking = -1;
      }
    }
    if (!accepted) {
      break;
    }
    progressed = true;
    std::vector<std::size_t> kept;
    for (std::size_t j : supp) {
      if (lambda[j] > 0.0) {
        kept.push_back(j);
      }
    }
    supp = std::move(kept);
    if (supp.size() <= 1) {
      break;
    }
  }
  return progressed;
}

double mean_rate(const TuningCurve& curve, const Quadrature& q) {
  std::vector<double> f(q.size());
  for (std::size_t m = 0; m < q.size(); ++m) {
    f[m] = rate(curve, q.nodes[m]);
  }
  return pairwise_dot(q.weights, f);
}

}  // namespace

void OptimizationProblem::validate() const {
  if (thetas.empty()) {
    throw Error(Errc::invalid_parameter, "optimization problem: empty theta grid");
  }
  x_nodes.validate();
  if (!(population > 0.0)) {
    throw Error(Errc::invalid_parameter, "optimization problem: N must be > 0");
  }
  if (!kernel) {
    throw Error(Errc::invalid_parameter, "optimization problem: no Fisher kernel");
  }
  if (peak_power && !(*peak_power > 0.0)) {
    throw Error(Errc::invalid_parameter, "optimization problem: peak power must be > 0");
  }
  if (average_power && !(*average_power > 0.0)) {
    throw Error(Errc::invalid_parameter, "optimization problem: average power must be > 0");
  }
}

PreparedProblem::PreparedProblem(const OptimizationProblem& problem) {
  problem.validate();
  std::vector<TuningCurve> thetas = problem.thetas;
  if (problem.peak_power) {
    for (auto& t : thetas) {
      if (auto* vm = std::get_if<VonMisesTuning>(&t)) {
        t = vm->with_amplitude(*problem.peak_power);
      } else {
        throw Error(Errc::invalid_parameter, "peak-power constraint needs von Mises tuning curves");
      }
    }
  }
  k1_ = thetas.size();
  k_ = static_cast<std::size_t>(problem.x_nodes.nodes.front().size());
  use_prior_ = problem.kind == ObjectiveKind::I_G;
  population_ = problem.population;
  weights_ = problem.x_nodes.weights;
  constant_ = entropy(problem.prior) - 0.5 * static_cast<double>(k_) * std::log(kTwoPiE);

  const std::size_t m = problem.x_nodes.size();
  kernels_.assign(m, {});
  curvature_.assign(m, Matrix());
  parallel_for(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Vector& x = problem.x_nodes.nodes[i];
      kernels_[i].reserve(k1_);
      for (const auto& t : thetas) {
        kernels_[i].push_back(problem.kernel(t, x));
      }
      curvature_[i] = use_prior_ ? prior_curvature(problem.prior, x)
                                 : Matrix::Zero(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(k_));
    }
  });
  mean_rates_.resize(static_cast<Eigen::Index>(k1_));
  for (std::size_t k = 0; k < k1_; ++k) {
    mean_rates_(static_cast<Eigen::Index>(k)) = mean_rate(thetas[k], problem.x_nodes);
  }
  average_power_ = problem.average_power;
  if (average_power_ && mean_rates_.minCoeff() > *average_power_) {
    throw Error(Errc::invalid_parameter, "average-power limit is infeasible: every subclass exceeds it");
  }
}

Matrix PreparedProblem::info_at(std::size_t m, const Vector& alpha) const {
  Matrix g = curvature_[m];
  for (std::size_t k = 0; k < k1_; ++k) {
    const double a = alpha(static_cast<Eigen::Index>(k));
    if (a != 0.0) {
      g.noalias() += (population_ * a) * kernels_[m][k];
    }
  }
  return g;
}

double PreparedProblem::value(const Vector& alpha) const {
  if (static_cast<std::size_t>(alpha.size()) != k1_) {
    throw Error(Errc::invalid_parameter, "objective: alpha has the wrong length");
  }
  std::vector<double> ld(weights_.size(), 0.0);
  std::atomic<bool> ok{true};
  parallel_for(weights_.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t m = b; m < e; ++m) {
      if (weights_[m] == 0.0) {
        continue;
      }
      const auto v = logdet_pd(info_at(m, alpha));
      if (!v) {
        ok = false;
        return;
      }
      ld[m] = *v;
    }
  });
  if (!ok) {
    return -kInf;
  }
  return 0.5 * pairwise_dot(weights_, ld) + constant_;
}

std::optional<Vector> PreparedProblem::gradient(const Vector& alpha) const {
  if (static_cast<std::size_t>(alpha.size()) != k1_) {
    throw Error(Errc::invalid_parameter, "gradient: alpha has the wrong length");
  }
  const std::size_t m = weights_.size();
  Matrix tr = Matrix::Zero(static_cast<Eigen::Index>(k1_), static_cast<Eigen::Index>(m));
  std::atomic<bool> ok{true};
  parallel_for(m, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      if (weights_[i] == 0.0) {
        continue;
      }
      const Matrix g = info_at(i, alpha);
      if (!is_positive_definite(g)) {
        ok = false;
        return;
      }
      const Eigen::LLT<Matrix> llt(g);
      const Matrix ginv = llt.solve(Matrix::Identity(g.rows(), g.cols()));
      for (std::size_t k = 0; k < k1_; ++k) {
        tr(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = ginv.cwiseProduct(kernels_[i][k]).sum();
      }
    }
  });
  if (!ok) {
    return std::nullopt;
  }
  Vector out(static_cast<Eigen::Index>(k1_));
  std::vector<double> row(m);
  for (std::size_t k = 0; k < k1_; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      row[i] = tr(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i));
    }
    out(static_cast<Eigen::Index>(k)) = 0.5 * population_ * pairwise_dot(weights_, row);
  }
  return out;
}

std::optional<Matrix> PreparedProblem::hessian(const Vector& alpha) const {
  if (static_cast<std::size_t>(alpha.size()) != k1_) {
    throw Error(Errc::invalid_parameter, "hessian: alpha has the wrong length");
  }
  // Fixed node blocks keep the summation order independent of the thread count.
  constexpr std::size_t kNodeBlock = 64;
  const std::size_t m = weights_.size();
  const std::size_t blocks = (m + kNodeBlock - 1) / kNodeBlock;
  const auto n = static_cast<Eigen::Index>(k1_);
  std::vector<Matrix> partial(blocks, Matrix::Zero(n, n));
  std::atomic<bool> ok{true};
  parallel_for(blocks, [&](std::size_t b0, std::size_t b1) {
    std::vector<Matrix> bk(k1_);
    for (std::size_t blk = b0; blk < b1; ++blk) {
      for (std::size_t i = blk * kNodeBlock; i < std::min(m, (blk + 1) * kNodeBlock); ++i) {
        if (weights_[i] == 0.0) {
          continue;
        }
        const Matrix g = info_at(i, alpha);
        if (!is_positive_definite(g)) {
          ok = false;
          return;
        }
        const Eigen::LLT<Matrix> llt(g);
        for (std::size_t k = 0; k < k1_; ++k) {
          bk[k] = llt.solve(kernels_[i][k]);
        }
        for (std::size_t k = 0; k < k1_; ++k) {
          for (std::size_t l = 0; l <= k; ++l) {
            // Tr(B_k B_l) = sum_ij B_k(i,j) B_l(j,i)
            partial[blk](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) +=
                weights_[i] * bk[k].cwiseProduct(bk[l].transpose()).sum();
          }
        }
      }
    }
  });
  if (!ok) {
    return std::nullopt;
  }
  Matrix h = Matrix::Zero(n, n);
  for (const auto& p : partial) {
    h += p;
  }
  h = h.selfadjointView<Eigen::Lower>();
  return (-0.5 * population_ * population_) * h;
}
double objective(const Vector& alpha, const OptimizationProblem& problem) {
  return PreparedProblem(problem).value(alpha);
}

Vector gradient(const Vector& alpha, const OptimizationProblem& problem) {
  auto g = PreparedProblem(problem).gradient(alpha);
  if (!g) {
    throw Error(Errc::precondition_failed, "gradient: G is not positive-definite on some node");
  }
  return *g;
}

KKTReport kkt_check(const Vector& alpha, const PreparedProblem& problem, double active_tol) {
  auto g = problem.gradient(alpha);
  if (!g) {
    throw Error(Errc::precondition_failed, "kkt_check: G is not positive-definite on some node");
  }
  KKTReport r;
  r.gradient = *g;
  const Vector& c = problem.mean_rates();
  std::vector<std::size_t> active;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    if (alpha(k) > active_tol) {
      active.push_back(static_cast<std::size_t>(k));
    }
  }
  if (active.empty()) {
    throw Error(Errc::degenerate_input, "kkt_check: empty active set");
  }
  r.active_count = active.size();
  double wsum = 0.0, gbar = 0.0;
  for (std::size_t k : active) {
    wsum += alpha(static_cast<Eigen::Index>(k));
    gbar += alpha(static_cast<Eigen::Index>(k)) * r.gradient(static_cast<Eigen::Index>(k));
  }
  r.lambda1 = gbar / wsum;

  const auto& limit = problem.average_power();
  const double used = c.dot(alpha);
  if (limit && *limit - used <= 1e-9 * std::max(1.0, *limit)) {
    // Weighted least squares for (lambda1, mu) on the active set, mu >= 0.
    double cbar = 0.0;
    for (std::size_t k : active) {
      cbar += alpha(static_cast<Eigen::Index>(k)) * c(static_cast<Eigen::Index>(k));
    }
    cbar /= wsum;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k : active) {
      const auto i = static_cast<Eigen::Index>(k);
      sxx += alpha(i) * (c(i) - cbar) * (c(i) - cbar);
      sxy += alpha(i) * (c(i) - cbar) * (r.gradient(i) - r.lambda1);
    }
    if (sxx > 1e-14 * std::max(1.0, cbar * cbar)) {
      r.mu = std::max(0.0, sxy / sxx);
      r.lambda1 = (gbar / wsum) - r.mu * cbar;
    }
  }

  std::vector<bool> is_active(static_cast<std::size_t>(alpha.size()), false);
  for (std::size_t k : active) {
    is_active[k] = true;
  }
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double resid = r.gradient(k) - r.lambda1 - r.mu * c(k);
    if (is_active[static_cast<std::size_t>(k)]) {
      r.equality_violation = std::max(r.equality_violation, std::abs(resid));
    } else {
      r.inequality_violation = std::max(r.inequality_violation, std::max(0.0, resid));
    }
  }
  return r;
}

KKTReport kkt_check(const Vector& alpha, const OptimizationProblem& problem, double active_tol) {
  return kkt_check(alpha, PreparedProblem(problem), active_tol);
}

MaximizeResult maximize(const OptimizationProblem& problem, const MaximizeOptions& options,
                        std::optional<Vector> alpha0) {
  const PreparedProblem prep(problem);
  const std::size_t k1 = prep.size();
  const Vector& c = prep.mean_rates();
  const auto& limit = prep.average_power();
  const std::vector<Atom> atoms = enumerate_vertices(c, limit);

  Vector start;
  if (alpha0) {
    start = *alpha0;
    if (static_cast<std::size_t>(start.size()) != k1 || start.minCoeff() < 0.0 ||
        std::abs(start.sum() - 1.0) > 1e-12) {
      throw Error(Errc::invalid_parameter, "maximize: initial density is not on the simplex");
    }
    if (limit && c.dot(start) > *limit + 1e-12) {
      throw Error(Errc::invalid_parameter, "maximize: initial density violates the average-power limit");
    }
  } else {
    start = Vector::Constant(static_cast<Eigen::Index>(k1), 1.0 / static_cast<double>(k1));
    if (limit && c.dot(start) > *limit) {
      start.setZero();
      double count = 0.0;
      for (Eigen::Index k = 0; k < start.size(); ++k) {
        if (c(k) <= *limit) {
          start(k) = 1.0;
          count += 1.0;
        }
      }
      start /= count;
    }
  }
  std::vector<double> lambda = decompose(start, c, limit, atoms);
  Vector alpha = combine(atoms, lambda, k1);
  double value = prep.value(alpha);
  if (!std::isfinite(value)) {
    throw Error(Errc::precondition_failed, "maximize: objective is -inf at the initial density");
  }

  MaximizeResult res;
  res.trace.push_back(value);
  // Commits a candidate weight vector if the objective does not decrease.
  auto try_accept = [&](std::vector<double> next) {
    Vector cand = combine(atoms, next, k1);
    const double v = prep.value(cand);
    if (!std::isfinite(v) || v < value) {
      return false;
    }
    lambda = std::move(next);
    alpha = std::move(cand);
    value = v;
    res.trace.push_back(value);
    return true;
  };

  double fw_gap = kInf;
  std::size_t it = 0;
  for (; it < options.max_iters; ++it) {
    const auto gopt = prep.gradient(alpha);
    if (!gopt) {
      throw Error(Errc::precondition_failed, "maximize: left the PD region");
    }
    const Vector& g = *gopt;
    const double ga = g.dot(alpha);
    std::size_t s = 0;
    double best = -kInf, worst = kInf;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
      const double v = atom_dot(atoms[a], g);
      if (v > best) {
        best = v;
        s = a;
      }
      if (lambda[a] > 0.0) {
        worst = std::min(worst, v);
      }
    }
    fw_gap = best - ga;
    const double away_gap = ga - worst;

    if (options.step == StepRule::open_loop) {
      if (fw_gap < options.tol) {
        res.converged = true;
        break;
      }
      double gamma = 2.0 / (static_cast<double>(it) + 2.0);
      bool accepted = false;
      for (int shrink = 0; shrink < 40 && !accepted; ++shrink, gamma *= 0.5) {
        std::vector<double> next = lambda;
        for (double& w : next) {
          w *= 1.0 - gamma;
        }
        next[s] += gamma;
        accepted = try_accept(std::move(next));
      }
      if (!accepted) {
        break;  // no ascent possible at working precision
      }
      continue;
    }

    if (fw_gap < options.tol && away_gap < options.tol) {
      res.converged = true;
      break;
    }
    if (!corrective_newton(prep, atoms, s, options.tol, lambda, alpha, g, try_accept)) {
      break;
    }
  }
  res.iterations = it;
  res.alpha = alpha;
  res.value = value;
  res.gap = fw_gap;
  res.kkt = kkt_check(alpha, prep, options.active_tol);
  return res;
}

CapacityPrior capacity_prior(std::span<const Matrix> mats, std::span<const double> volume) {
  if (mats.empty() || mats.size() != volume.size()) {
    throw Error(Errc::invalid_parameter, "capacity_prior: empty or mismatched grid");
  }
  const std::size_t n = mats.size();
  std::vector<double> log_s(n, -kInf);
  std::vector<double> log_terms(n, -kInf);
  for (std::size_t m = 0; m < n; ++m) {
    if (!(volume[m] > 0.0)) {
      throw Error(Errc::invalid_parameter, "capacity_prior: volume elements must be > 0");
    }
    const auto ld = logdet_pd(mats[m]);
    if (ld) {
      log_s[m] = 0.5 * (*ld - static_cast<double>(mats[m].rows()) * std::log(kTwoPiE));
    } else if (min_eigenvalue(mats[m]) < -1e-10 * std::max(1.0, mats[m].norm())) {
      throw Error(Errc::degenerate_input, "capacity_prior: matrix is indefinite at node " + std::to_string(m));
    }
    log_terms[m] = log_s[m] + std::log(volume[m]);
  }
  const double cap = log_sum_exp(log_terms);
  if (!std::isfinite(cap)) {
    throw Error(Errc::degenerate_input, "capacity_prior: zero normalizer");
  }
  CapacityPrior out;
  out.capacity = cap;
  out.density.resize(static_cast<Eigen::Index>(n));
  out.masses.resize(static_cast<Eigen::Index>(n));
  for (std::size_t m = 0; m < n; ++m) {
    const auto i = static_cast<Eigen::Index>(m);
    out.density(i) = std::exp(log_s[m] - cap);
    out.masses(i) = std::exp(log_terms[m] - cap);
  }
  return out;
}

CapacityPrior capacity_prior(const MatrixField& field, const GridPrior1D& grid) {
  std::vector<Matrix> mats;
  mats.reserve(grid.size());
  for (double x : grid.nodes()) {
    mats.push_back(field(Vector::Constant(1, x)));
  }
  const std::vector<double> vol(grid.size(), grid.spacing());
  return capacity_prior(mats, vol);
}

double gaussian_capacity(const Matrix& sigma0, const Matrix& j0) {
  if (!is_positive_definite(sigma0)) {
    throw Error(Errc::invalid_parameter, "gaussian_capacity: covariance is not SPD");
  }
  const Matrix s = sym_sqrt(sigma0);
  Matrix m = s * j0 * s;
  m = 0.5 * (m + m.transpose());
  m.diagonal().array() += 1.0;
  const auto ld = logdet_pd(m);
  if (!ld) {
    throw Error(Errc::precondition_failed, "gaussian_capacity: J0 is not PSD");
  }
  return 0.5 * *ld;
}

double redundancy(double information, double capacity) {
  if (!(capacity > 0.0)) {
    throw Error(Errc::undefined_ratio, "redundancy: capacity must be > 0");
  }
  return 1.0 - information / capacity;
}

}  // namespace popcode
