#include "popcode/models.hpp"

#include "popcode/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace popcode {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kLog2Pi = 1.8378770664093453;  // ln(2 pi)

const std::vector<TuningCurve>& tuning_of(const PopulationModel& model) {
  static const std::vector<TuningCurve> none;
  return std::visit(overloaded{
                        [](const PoissonPopulation& p) -> const std::vector<TuningCurve>& { return p.tuning; },
                        [](const GaussianNoisePopulation& p) -> const std::vector<TuningCurve>& { return p.tuning; },
                        [](const CorrelatedGaussianPopulation& p) -> const std::vector<TuningCurve>& { return p.tuning; },
                        [](const LinearGaussianModel&) -> const std::vector<TuningCurve>& { return none; },
                    },
                    model);
}

void check_dim(std::size_t expected, const Vector& x, const char* where) {
  if (static_cast<std::size_t>(x.size()) != expected) {
    throw Error(Errc::invalid_parameter, std::string(where) + ": stimulus has dimension " +
                                             std::to_string(x.size()) + ", expected " +
                                             std::to_string(expected));
  }
}

void check_population(const std::vector<TuningCurve>& tuning, const char* where) {
  if (tuning.empty()) {
    throw Error(Errc::invalid_parameter, std::string(where) + ": population is empty");
  }
}

void check_correlation(double scale, double correlation, std::size_t n) {
  if (!(scale > 0.0)) {
    throw Error(Errc::invalid_parameter, "correlated population: scale must be > 0");
  }
  if (n == 0) {
    throw Error(Errc::invalid_parameter, "correlated population: N must be >= 1");
  }
  const double lower = n > 1 ? -1.0 / static_cast<double>(n - 1) : -1.0;
  if (!(correlation < 1.0) || !(correlation > lower)) {
    throw Error(Errc::singular_covariance,
                "correlated population: covariance is singular or indefinite for c=" +
                    std::to_string(correlation) + " with N=" + std::to_string(n));
  }
}

// log-determinant of b0 (I - b1 u u^T).
double log_det_decorrelation(const DecorrelationCoefficients& d, std::size_t n) {
  return static_cast<double>(n) * std::log(d.b0) + std::log1p(-static_cast<double>(n) * d.b1);
}

}  // namespace

VonMisesTuning::VonMisesTuning(double amplitude, double width, double period, double center)
    : amplitude_(amplitude), width_(width), period_(period), center_(center) {
  if (!(amplitude > 0.0) || !(width > 0.0) || !(period > 0.0) || !std::isfinite(center)) {
    throw Error(Errc::invalid_parameter,
                "von Mises tuning requires amplitude > 0, width > 0, period > 0 and a finite center");
  }
  const double ratio = period_ / (2.0 * std::numbers::pi * width_);
  concentration_ = ratio * ratio;
  angular_ = 2.0 * std::numbers::pi / period_;
}

double VonMisesTuning::rate(double x) const {
  return amplitude_ * std::exp(-concentration_ * (1.0 - std::cos(angular_ * (x - center_))));
}

double VonMisesTuning::derivative(double x) const {
  return -rate(x) * concentration_ * angular_ * std::sin(angular_ * (x - center_));
}

VonMisesTuning VonMisesTuning::with_amplitude(double amplitude) const {
  return VonMisesTuning(amplitude, width_, period_, center_);
}

double eval_tuning(const VonMisesTuning& curve, double x) { return curve.rate(x); }

std::size_t input_dim(const TuningCurve& curve) {
  return std::visit(overloaded{
                        [](const VonMisesTuning&) -> std::size_t { return 1; },
                        [](const AffineTuning& a) -> std::size_t { return static_cast<std::size_t>(a.weights.size()); },
                    },
                    curve);
}

double rate(const TuningCurve& curve, const Vector& x) {
  check_dim(input_dim(curve), x, "rate");
  return std::visit(overloaded{
                        [&](const VonMisesTuning& v) { return v.rate(x(0)); },
                        [&](const AffineTuning& a) { return a.weights.dot(x) + a.offset; },
                    },
                    curve);
}

Vector rate_gradient(const TuningCurve& curve, const Vector& x) {
  check_dim(input_dim(curve), x, "rate_gradient");
  return std::visit(overloaded{
                        [&](const VonMisesTuning& v) -> Vector { return Vector::Constant(1, v.derivative(x(0))); },
                        [&](const AffineTuning& a) -> Vector { return a.weights; },
                    },
                    curve);
}

Matrix poisson_fisher_kernel(const TuningCurve& curve, const Vector& x, double rate_floor) {
  const double f = rate(curve, x);
  if (!(f > 0.0) || !std::isfinite(f)) {
    throw Error(Errc::rate_underflow, "poisson_fisher_kernel: rate underflow (f=" + std::to_string(f) + ")");
  }
  const Vector df = rate_gradient(curve, x);
  return (df * df.transpose()) / std::max(f, rate_floor);
}

Matrix gaussian_fisher_kernel(const TuningCurve& curve, double sigma, const Vector& x) {
  if (!(sigma > 0.0)) {
    throw Error(Errc::invalid_parameter, "gaussian_fisher_kernel: sigma must be > 0");
  }
  const Vector df = rate_gradient(curve, x);
  return (df * df.transpose()) / (sigma * sigma);
}

void LinearGaussianModel::validate() const {
  const auto k = mixing.rows();
  if (k == 0 || mixing.cols() == 0) {
    throw Error(Errc::invalid_parameter, "linear-Gaussian model: mixing matrix is empty");
  }
  if (prior_mean.size() != k || prior_cov.rows() != k || prior_cov.cols() != k) {
    throw Error(Errc::invalid_parameter, "linear-Gaussian model: prior shape does not match mixing matrix");
  }
  Eigen::LLT<Matrix> llt(prior_cov);
  if (llt.info() != Eigen::Success || !prior_cov.isApprox(prior_cov.transpose(), 1e-12)) {
    throw Error(Errc::invalid_parameter, "linear-Gaussian model: prior covariance is not SPD");
  }
}

std::size_t population_size(const PopulationModel& model) {
  if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
    return static_cast<std::size_t>(lg->mixing.cols());
  }
  return tuning_of(model).size();
}

std::size_t input_dim(const PopulationModel& model) {
  if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
    return static_cast<std::size_t>(lg->mixing.rows());
  }
  const auto& tuning = tuning_of(model);
  check_population(tuning, "input_dim");
  return input_dim(tuning.front());
}

Vector mean_response(const PopulationModel& model, const Vector& x) {
  check_dim(input_dim(model), x, "mean_response");
  if (const auto* lg = std::get_if<LinearGaussianModel>(&model)) {
    return lg->mixing.transpose() * x;
  }
  const auto& tuning = tuning_of(model);
  Vector mean(static_cast<Eigen::Index>(tuning.size()));
  for (std::size_t n = 0; n < tuning.size(); ++n) {
    mean(static_cast<Eigen::Index>(n)) = rate(tuning[n], x);
  }
  return mean;
}

Matrix fisher_information(const PopulationModel& model, const Vector& x) {
  const std::size_t k = input_dim(model);
  check_dim(k, x, "fisher_information");
  return std::visit(
      overloaded{
          [&](const PoissonPopulation& p) -> Matrix {
            Matrix j = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
            for (const auto& c : p.tuning) {
              j += poisson_fisher_kernel(c, x);
            }
            return j;
          },
          [&](const GaussianNoisePopulation& p) -> Matrix {
            Matrix j = Matrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
            for (const auto& c : p.tuning) {
              j += gaussian_fisher_kernel(c, p.sigma, x);
            }
            return j;
          },
          [&](const LinearGaussianModel& lg) -> Matrix { return lg.mixing * lg.mixing.transpose(); },
          [&](const CorrelatedGaussianPopulation& p) -> Matrix {
            const std::size_t n = p.tuning.size();
            Matrix jac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
            for (std::size_t i = 0; i < n; ++i) {
              jac.row(static_cast<Eigen::Index>(i)) = rate_gradient(p.tuning[i], x).transpose();
            }
            const Matrix w = decorrelation_transform(p, n) * jac;
            return w.transpose() * w;
          },
      },
      model);
}

DecorrelationCoefficients decorrelation_coefficients(double scale, double correlation, std::size_t n) {
  check_correlation(scale, correlation, n);
  const double nn = static_cast<double>(n);
  const double b0 = 1.0 / std::sqrt(scale * (1.0 - correlation));
  const double b1 = (1.0 - std::sqrt((1.0 - correlation) / ((nn - 1.0) * correlation + 1.0))) / nn;
  return {b0, b1};
}

Matrix decorrelation_transform(const CorrelatedGaussianPopulation& pop, std::size_t n) {
  const auto d = decorrelation_coefficients(pop.scale, pop.correlation, n);
  const auto nn = static_cast<Eigen::Index>(n);
  return d.b0 * (Matrix::Identity(nn, nn) - d.b1 * Matrix::Ones(nn, nn));
}

Matrix correlated_covariance(double scale, double correlation, std::size_t n) {
  const auto nn = static_cast<Eigen::Index>(n);
  return scale * ((1.0 - correlation) * Matrix::Identity(nn, nn) + correlation * Matrix::Ones(nn, nn));
}

Vector sample_responses(const PopulationModel& model, const Vector& x, std::mt19937_64& rng) {
  const Vector mean = mean_response(model, x);
  const Eigen::Index n = mean.size();
  Vector r(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::visit(overloaded{
                 [&](const PoissonPopulation&) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     if (!(mean(i) > 0.0)) {
                       throw Error(Errc::rate_underflow, "sample_responses: Poisson rate must be > 0");
                     }
                     std::poisson_distribution<long long> pois(mean(i));
                     r(i) = static_cast<double>(pois(rng));
                   }
                 },
                 [&](const GaussianNoisePopulation& p) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     r(i) = mean(i) + p.sigma * normal(rng);
                   }
                 },
                 [&](const LinearGaussianModel&) {
                   for (Eigen::Index i = 0; i < n; ++i) {
                     r(i) = mean(i) + normal(rng);
                   }
                 },
                 [&](const CorrelatedGaussianPopulation& p) {
                   check_correlation(p.scale, p.correlation, static_cast<std::size_t>(n));
                   Vector z(n);
                   for (Eigen::Index i = 0; i < n; ++i) {
                     z(i) = normal(rng);
                   }
                   // Sigma^{1/2} = s0 (P_perp + rho P_u) with P_u = u u^T / N.
                   const double c = p.correlation;
                   const double s0 = std::sqrt(p.scale * (1.0 - c));
                   const double rho = std::sqrt((1.0 - c + static_cast<double>(n) * c) / (1.0 - c));
                   r = mean + s0 * (z.array() + (rho - 1.0) * z.mean()).matrix();
                 },
             },
             model);
  return r;
}

double log_likelihood(const PopulationModel& model, const Vector& r, const Vector& x) {
  const Vector mean = mean_response(model, x);
  const Eigen::Index n = mean.size();
  if (r.size() != n) {
    throw Error(Errc::invalid_parameter, "log_likelihood: response has wrong length");
  }
  return std::visit(
      overloaded{
          [&](const PoissonPopulation&) {
            double sum = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
              const double k = r(i);
              if (!(k >= 0.0) || k != std::floor(k)) {
                throw Error(Errc::domain_error, "log_likelihood: Poisson counts must be nonnegative integers");
              }
              if (!(mean(i) > 0.0)) {
                throw Error(Errc::rate_underflow, "log_likelihood: Poisson rate must be > 0");
              }
              sum += k * std::log(mean(i)) - mean(i) - std::lgamma(k + 1.0);
            }
            return sum;
          },
          [&](const GaussianNoisePopulation& p) {
            if (!(p.sigma > 0.0)) {
              throw Error(Errc::invalid_parameter, "log_likelihood: sigma must be > 0");
            }
            const double q = ((r - mean) / p.sigma).squaredNorm();
            return -0.5 * q - static_cast<double>(n) * (std::log(p.sigma) + 0.5 * kLog2Pi);
          },
          [&](const LinearGaussianModel&) {
            return -0.5 * (r - mean).squaredNorm() - 0.5 * static_cast<double>(n) * kLog2Pi;
          },
          [&](const CorrelatedGaussianPopulation& p) {
            const auto nn = static_cast<std::size_t>(n);
            const auto d = decorrelation_coefficients(p.scale, p.correlation, nn);
            const Vector e = r - mean;
            const Vector w = d.b0 * (e.array() - d.b1 * e.sum()).matrix();
            return -0.5 * w.squaredNorm() + log_det_decorrelation(d, nn) - 0.5 * static_cast<double>(n) * kLog2Pi;
          },
      },
      model);
}

LikelihoodGrid::LikelihoodGrid(const PopulationModel& model, std::span<const Vector> nodes) {
  if (nodes.empty()) {
    throw Error(Errc::invalid_parameter, "LikelihoodGrid: no stimulus nodes");
  }
  const auto m = static_cast<Eigen::Index>(nodes.size());
  const auto n = static_cast<Eigen::Index>(popcode::population_size(model));
  Matrix means(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    means.col(j) = mean_response(model, nodes[static_cast<std::size_t>(j)]);
  }
  node_terms_.resize(m);

  if (std::holds_alternative<PoissonPopulation>(model)) {
    kind_ = Kind::poisson;
    if (!(means.minCoeff() > 0.0)) {
      throw Error(Errc::rate_underflow, "LikelihoodGrid: Poisson rate must be > 0 on every node");
    }
    projection_ = means.array().log().matrix();
    node_terms_ = -means.colwise().sum().transpose();
    return;
  }

  kind_ = Kind::gaussian;
  double sigma = 1.0;
  std::visit(overloaded{
                 [&](const GaussianNoisePopulation& p) { sigma = p.sigma; },
                 [&](const CorrelatedGaussianPopulation& p) {
                   const auto nn = static_cast<std::size_t>(n);
                   const auto d = decorrelation_coefficients(p.scale, p.correlation, nn);
                   whitening_ = decorrelation_transform(p, nn);
                   means = whitening_ * means;
                   log_norm_ += log_det_decorrelation(d, nn);
                 },
                 [](const auto&) {},
             },
             model);
  if (!(sigma > 0.0)) {
    throw Error(Errc::invalid_parameter, "LikelihoodGrid: sigma must be > 0");
  }
  inv_variance_ = 1.0 / (sigma * sigma);
  log_norm_ += -static_cast<double>(n) * (std::log(sigma) + 0.5 * kLog2Pi);
  projection_ = means * inv_variance_;
  node_terms_ = -0.5 * inv_variance_ * means.colwise().squaredNorm().transpose();
}

Matrix LikelihoodGrid::evaluate(const Matrix& responses) const {
  if (responses.cols() != projection_.rows()) {
    throw Error(Errc::invalid_parameter, "LikelihoodGrid: response width does not match population");
  }
  const Eigen::Index b = responses.rows();
  Vector row_terms(b);
  Matrix out;
  if (kind_ == Kind::poisson) {
    for (Eigen::Index i = 0; i < b; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < responses.cols(); ++j) {
        const double k = responses(i, j);
        if (!(k >= 0.0) || k != std::floor(k)) {
          throw Error(Errc::domain_error, "LikelihoodGrid: Poisson counts must be nonnegative integers");
        }
        s += std::lgamma(k + 1.0);
      }
      row_terms(i) = -s;
    }
    out.noalias() = responses * projection_;
  } else {
    Matrix r = whitening_.size() > 0 ? Matrix(responses * whitening_.transpose()) : responses;
    row_terms = (-0.5 * inv_variance_) * r.rowwise().squaredNorm();
    row_terms.array() += log_norm_;
    out.noalias() = r * projection_;
  }
  out.rowwise() += node_terms_.transpose();
  out.colwise() += row_terms;
  return out;
}

}  // namespace popcode
