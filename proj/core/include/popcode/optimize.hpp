#pragma once

#include "popcode/fisher.hpp"
#include "popcode/linalg.hpp"
#include "popcode/models.hpp"
#include "popcode/prior.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace popcode {

enum class ObjectiveKind { I_G, I_F };

/// Maximize I_G (or I_F) over simplex weights alpha on a fixed grid of
/// tuning-curve subclasses, with the expectation over x replaced by the
/// quadrature `x_nodes`.
struct OptimizationProblem {
  ObjectiveKind kind = ObjectiveKind::I_G;
  std::vector<TuningCurve> thetas;
  PriorDensity prior = GaussianPrior{};
  Quadrature x_nodes;
  double population = 1.0;  // N
  FisherKernel kernel = poisson_kernel();
  /// Peak power: every von Mises amplitude is set to this value.
  std::optional<double> peak_power;
  /// Average power: sum_k alpha_k <f(x; theta_k)>_x <= average_power.
  std::optional<double> average_power;

  void validate() const;
};

/// Precomputed kernels S(x_m; theta_k), prior curvature and constants.
class PreparedProblem {
 public:
  explicit PreparedProblem(const OptimizationProblem& problem);

  std::size_t size() const { return k1_; }
  std::size_t input_dim() const { return k_; }
  /// c_k = <f(x; theta_k)>_x on the quadrature.
  const Vector& mean_rates() const { return mean_rates_; }
  const std::optional<double>& average_power() const { return average_power_; }

  /// -inf when G (or J) is not PD on some weighted node.
  double value(const Vector& alpha) const;
  /// g_k = (N/2) <Tr(G^{-1} S_k)>; nullopt when G is not PD on some node.
  std::optional<Vector> gradient(const Vector& alpha) const;
  /// H_kl = -(N^2/2) <Tr(G^{-1} S_k G^{-1} S_l)>; nullopt when G is not PD.
  std::optional<Matrix> hessian(const Vector& alpha) const;

 private:
  Matrix info_at(std::size_t m, const Vector& alpha) const;

  std::size_t k1_ = 0;
  std::size_t k_ = 0;
  bool use_prior_ = true;
  double population_ = 1.0;
  double constant_ = 0.0;  // H - (K/2) ln 2 pi e
  std::vector<double> weights_;
  std::vector<std::vector<Matrix>> kernels_;  // [node][class]
  std::vector<Matrix> curvature_;             // [node]
  Vector mean_rates_;
  std::optional<double> average_power_;
};

double objective(const Vector& alpha, const OptimizationProblem& problem);
/// Throws Errc::precondition_failed when G is not PD on some node.
Vector gradient(const Vector& alpha, const OptimizationProblem& problem);

struct KKTReport {
  double lambda1 = 0.0;
  double mu = 0.0;  // average-power multiplier (0 when inactive or absent)
  Vector gradient;
  std::size_t active_count = 0;
  double equality_violation = 0.0;    // max |g_k - lambda1 - mu c_k| over active k
  double inequality_violation = 0.0;  // max(0, g_k - lambda1 - mu c_k) over inactive k
};

inline constexpr double kDefaultActiveTol = 1e-6;

/// Throws Errc::degenerate_input when no weight exceeds active_tol.
KKTReport kkt_check(const Vector& alpha, const PreparedProblem& problem,
                    double active_tol = kDefaultActiveTol);
KKTReport kkt_check(const Vector& alpha, const OptimizationProblem& problem,
                    double active_tol = kDefaultActiveTol);

enum class StepRule { line_search, open_loop };

struct MaximizeOptions {
  double tol = 1e-8;
  std::size_t max_iters = 20000;
  StepRule step = StepRule::line_search;
  double active_tol = kDefaultActiveTol;
};

struct MaximizeResult {
  Vector alpha;
  double value = 0.0;
  double gap = 0.0;  // final Frank-Wolfe gap
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step, starting at alpha0
  KKTReport kkt;
};

/// Frank-Wolfe ascent over the feasible polytope (the simplex, or the
/// simplex cut by the average-power constraint).
///
/// The line-search rule is fully corrective: each outer iteration adds the
/// best vertex and then re-optimizes the vertex weights over the current
/// support by projected Newton steps, dropping vertices whose weight reaches
/// zero. It stops once both the Frank-Wolfe gap and the away gap are below
/// tol. The open-loop rule is plain Frank-Wolfe with step 2/(t+2). Ties in
/// vertex selection go to the lowest index. alpha0 defaults to uniform, or to
/// uniform over the subclasses meeting the average-power limit when uniform
/// is infeasible.
MaximizeResult maximize(const OptimizationProblem& problem, const MaximizeOptions& options = {},
                        std::optional<Vector> alpha0 = std::nullopt);

struct CapacityPrior {
  Vector density;  // p*(x_m), normalized so that sum_m volume_m p*(x_m) = 1
  Vector masses;   // volume_m p*(x_m)
  double capacity = 0.0;
};

/// p* ∝ det(M(x))^{1/2}, capacity = ln sum_m volume_m det(M(x_m) / 2 pi e)^{1/2}.
/// Nodes where M is PSD but singular get zero density; an indefinite M or an
/// all-zero normalizer throws Errc::degenerate_input.
CapacityPrior capacity_prior(std::span<const Matrix> mats, std::span<const double> volume);
/// Evaluates `field` on the nodes of `grid` with volume element T / M.
CapacityPrior capacity_prior(const MatrixField& field, const GridPrior1D& grid);

/// 1/2 ln det(Sigma0 J0 + I).
double gaussian_capacity(const Matrix& sigma0, const Matrix& j0);

/// 1 - I / C. Throws Errc::undefined_ratio when C <= 0.
double redundancy(double information, double capacity);

}  // namespace popcode
