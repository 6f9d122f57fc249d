#include "fracsim/convolution.hpp"

#include "fracsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace fracsim {

NoiseSpec NoiseSpec::power_law(int modes, double rho, double scale) {
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "noise needs at least one mode");
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "noise scale must be positive");
  if (!std::isfinite(rho)) throw Error(ErrorCode::InvalidArgument, "noise decay rho must be finite");
  NoiseSpec out;
  out.rho = rho;
  out.scale = scale;
  out.lambdas.resize(modes);
  for (int k = 1; k <= modes; ++k) out.lambdas[k - 1] = scale * std::pow(k, -rho);
  return out;
}

double NoiseSpec::tail_bound() const {
  if (rho <= 1.0) return std::numeric_limits<double>::infinity();
  const double K = static_cast<double>(lambdas.size());
  return scale * std::pow(K, 1.0 - rho) / (rho - 1.0);
}

StochasticConvolution::StochasticConvolution(const FractionalParams& params, const EigenSystem& eig,
                                             const NoiseSpec& noise, const ConvolutionOptions& opts)
    : params_(params), eig_(eig), noise_(noise), opts_(opts), ml_(params.alpha, params.alpha) {
  if (noise_.lambdas.size() != eig_.modes()) {
    throw Error(ErrorCode::InvalidArgument, "noise and eigensystem mode counts differ");
  }
  if ((noise_.lambdas.array() <= 0.0).any()) throw Error(ErrorCode::InvalidArgument, "noise eigenvalues must be > 0");
}

void StochasticConvolution::require_sigma() const {
  if (!(params_.sigma_exponent > 0.0)) {
    throw Error(ErrorCode::RateConditionViolation,
                "sigma = min{(2-nu)a+4H-3, (2-nu)a+2H-1} = " + std::to_string(params_.sigma_exponent) + " <= 0");
  }
  // The kernel's transform behaves like (t-s)^{a+H-3/2} next to t, which is
  // square integrable only when a + H > 1.
  if (!(params_.alpha + params_.hurst.value() > 1.0)) {
    throw Error(ErrorCode::QuadratureFailure, "alpha + H <= 1: the mode variance integral diverges");
  }
}

double StochasticConvolution::kernel(int k, double x) const {
  const double a = params_.alpha;
  return std::pow(x, a - 1.0) * ml_.at_negative(eig_.gamma(k) * std::pow(x, a));
}

double StochasticConvolution::mode_integrand(int k, double t, double s) const {
  if (!(s >= 0.0 && s < t)) throw Error(ErrorCode::DegenerateInterval, "mode_integrand needs 0 <= s < t");
  return kernel(k, t - s);
}

double StochasticConvolution::transformed_kernel(int k, double s, double len) const {
  return transformed_kernel(k, s, len, opts_.inner);
}

double StochasticConvolution::transformed_kernel(int k, double s, double len, const GradedRule& rule) const {
  const KstarOptions opt{params_.alpha - 1.0, rule};
  return kstar_span(params_.hurst, [&](double, double rest) { return kernel(k, rest); }, s, len, opt);
}

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::QuadratureFailure, std::string(what) + " is not finite");
  return v;
}

}  // namespace

double StochasticConvolution::mode_variance(int k, double t) const {
  require_sigma();
  if (t < 0.0) throw Error(ErrorCode::NonPositiveTime, "mode_variance needs t >= 0");
  if (t == 0.0) return 0.0;
  const double h = params_.hurst.value();
  const double a = params_.alpha;
  auto sq = [&](double s, double rest) {
    const double v = transformed_kernel(k, s, rest);
    return v * v;
  };
  const double r = integrate_endpoints(sq, t, -std::abs(2.0 * h - 1.0), 2.0 * a + 2.0 * h - 3.0, opts_.outer);
  return checked(noise_.lambdas[k - 1] * r, "mode variance");
}

double StochasticConvolution::mode_covariance(int k, double t1, double t2) const {
  require_sigma();
  if (t1 > t2) std::swap(t1, t2);
  if (t1 < 0.0) throw Error(ErrorCode::NonPositiveTime, "mode_covariance needs t >= 0");
  if (t1 == 0.0) return 0.0;
  const double h = params_.hurst.value();
  const double a = params_.alpha;
  const double gap = t2 - t1;
  auto prod = [&](double s, double rest) { return transformed_kernel(k, s, rest) * transformed_kernel(k, s, rest + gap); };
  const double r = integrate_endpoints(prod, t1, -std::abs(2.0 * h - 1.0), a + h - 1.5, opts_.outer);
  return checked(noise_.lambdas[k - 1] * r, "mode covariance");
}

double StochasticConvolution::mode_increment(int k, double t1, double t2) const {
  require_sigma();
  if (!(params_.gamma_exponent > 0.0)) {
    throw Error(ErrorCode::RateConditionViolation,
                "gamma exponent = " + std::to_string(params_.gamma_exponent) + " <= 0");
  }
  if (t1 > t2) std::swap(t1, t2);
  if (t1 < 0.0) throw Error(ErrorCode::NonPositiveTime, "mode_increment needs t >= 0");
  if (t1 == t2) return 0.0;
  if (t1 == 0.0) return mode_variance(k, t2);
  const double h = params_.hurst.value();
  const double a = params_.alpha;
  const double gap = t2 - t1;
  const double edge = 2.0 * a + 2.0 * h - 3.0;
  // Var + Var - 2 Cov regrouped as two nonnegative integrals, which avoids
  // cancellation at small lags.
  auto diff = [&](double s, double rest) {
    const double d = transformed_kernel(k, s, rest) - transformed_kernel(k, s, rest + gap);
    return d * d;
  };
  auto fresh = [&](double from_t1, double rest) {
    const double v = transformed_kernel(k, t1 + from_t1, rest);
    return v * v;
  };
  const double old_part = integrate_endpoints(diff, t1, -std::abs(2.0 * h - 1.0), edge, opts_.outer);
  const double new_part = integrate_endpoints(fresh, gap, 0.0, edge, opts_.outer);
  return checked(noise_.lambdas[k - 1] * (old_part + new_part), "mode increment");
}

MomentEstimate StochasticConvolution::weighted_sum(const std::vector<double>& per_mode) const {
  const double nu = params_.nu_smooth;
  const int K = eig_.modes();
  std::vector<double> terms(K);
  MomentEstimate out;
  for (int k = 1; k <= K; ++k) {
    terms[k - 1] = std::pow(eig_.gamma(k), nu) * per_mode[k - 1];
    out.value += terms[k - 1];
  }
  if (K >= 2 && terms[K - 2] > 0.0) {
    const double r = terms[K - 1] / terms[K - 2];
    out.tail = r < 1.0 ? terms[K - 1] * r / (1.0 - r) : std::numeric_limits<double>::infinity();
  }
  return out;
}

MomentEstimate StochasticConvolution::z_second_moment(double t) const {
  require_sigma();
  std::vector<double> v(eig_.modes());
  parallel_for(v.size(), [&](std::size_t i) { v[i] = mode_variance(static_cast<int>(i) + 1, t); });
  return weighted_sum(v);
}

MomentEstimate StochasticConvolution::increment_second_moment(double t1, double t2) const {
  require_sigma();
  std::vector<double> v(eig_.modes());
  parallel_for(v.size(), [&](std::size_t i) { v[i] = mode_increment(static_cast<int>(i) + 1, t1, t2); });
  return weighted_sum(v);
}

Eigen::MatrixXd StochasticConvolution::mode_covariance_matrix(int k, const TimeGrid& grid) const {
  require_sigma();
  const double h = params_.hurst.value();
  const double a = params_.alpha;
  const int n = grid.steps();
  std::vector<QuadNode> nodes;
  std::vector<int> interval;
  for (int j = 1; j <= n; ++j) {
    const double p = j == 1 ? -std::abs(2.0 * h - 1.0) : 0.0;
    for (const QuadNode& q : endpoint_nodes(grid[j] - grid[j - 1], p, 2.0 * a + 2.0 * h - 3.0, opts_.sampling)) {
      nodes.push_back(q);
      interval.push_back(j);
    }
  }
  // M(r, i) = sqrt(w_r) A_{t_i}(s_r), zero once s_r lies beyond t_i.
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nodes.size()), n);
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const int j = interval[r];
    const double s = grid[j - 1] + nodes[r].from_left;
    const double sw = std::sqrt(nodes[r].weight);
    for (int i = j; i <= n; ++i) {
      const double len = nodes[r].from_right + (grid[i] - grid[j]);
      M(static_cast<Eigen::Index>(r), i - 1) = sw * transformed_kernel(k, s, len, opts_.sampling);
    }
  }
  if (!M.allFinite()) throw Error(ErrorCode::QuadratureFailure, "covariance quadrature is not finite");
  return noise_.lambdas[k - 1] * (M.transpose() * M);
}

double mode_integrand(int k, double t, double s, const FractionalParams& params, const EigenSystem& eig) {
  if (!(s >= 0.0 && s < t)) throw Error(ErrorCode::DegenerateInterval, "mode_integrand needs 0 <= s < t");
  const double x = t - s;
  return std::pow(x, params.alpha - 1.0) * mittag_leffler(params.alpha, params.alpha, -eig.gamma(k) * std::pow(x, params.alpha));
}

double mode_variance(int k, double t, const FractionalParams& params, const EigenSystem& eig, const NoiseSpec& noise) {
  return StochasticConvolution(params, eig, noise).mode_variance(k, t);
}

MomentEstimate z_second_moment(double t, const FractionalParams& params, const EigenSystem& eig,
                               const NoiseSpec& noise) {
  return StochasticConvolution(params, eig, noise).z_second_moment(t);
}

MomentEstimate increment_second_moment(double t1, double t2, const FractionalParams& params, const EigenSystem& eig,
                                       const NoiseSpec& noise) {
  return StochasticConvolution(params, eig, noise).increment_second_moment(t1, t2);
}

ZEnsemble sample_Z(const TimeGrid& grid, const StochasticConvolution& conv, int n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  const int K = conv.eig().modes();
  const int n = grid.steps();
  std::vector<Eigen::MatrixXd> factors(K);
  parallel_for(static_cast<std::size_t>(K), [&](std::size_t i) {
    const int k = static_cast<int>(i) + 1;
    factors[i] = cholesky_with_ridge(conv.mode_covariance_matrix(k, grid));
  });
  ZEnsemble out{grid, std::vector<Eigen::MatrixXd>(n_paths), seed};
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    Eigen::MatrixXd path = Eigen::MatrixXd::Zero(n + 1, K);
    Eigen::VectorXd z(n);
    for (int k = 0; k < K; ++k) {
      auto rng = make_stream(seed, static_cast<std::uint64_t>(k) + 1, p);
      std::normal_distribution<double> normal;
      for (int i = 0; i < n; ++i) z[i] = normal(rng);
      path.col(k).tail(n) = factors[k] * z;
    }
    out.paths[p] = std::move(path);
  });
  return out;
}

ZEnsemble sample_Z(const TimeGrid& grid, const FractionalParams& params, const EigenSystem& eig,
                   const NoiseSpec& noise, int n_paths, std::uint64_t seed) {
  return sample_Z(grid, StochasticConvolution(params, eig, noise), n_paths, seed);
}

RateReport rate_fit(const std::vector<double>& times, const std::vector<double>& moments, double theoretical,
                    double slack) {
  if (times.size() != moments.size()) throw Error(ErrorCode::InvalidArgument, "times and moments differ in length");
  if (times.size() < 4) throw Error(ErrorCode::InsufficientData, "rate fit needs at least 4 points");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0 && moments[i] > 0.0)) {
      throw Error(ErrorCode::InsufficientData, "rate fit needs positive times and moments");
    }
    if (i > 0 && !(times[i] > times[i - 1])) throw Error(ErrorCode::InvalidArgument, "times must be increasing");
  }
  if (std::log10(times.back() / times.front()) < 1.5) {
    throw Error(ErrorCode::InsufficientData, "rate fit needs times spanning at least 1.5 decades");
  }
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = std::log(times[i]);
    y[i] = std::log(moments[i]);
  }
  const Eigen::Vector2d beta = X.colPivHouseholderQr().solve(y);
  RateReport out;
  out.times = times;
  out.moments = moments;
  out.intercept = beta[0];
  out.fitted_slope = beta[1];
  out.theoretical_exponent = theoretical;
  out.slack = slack;
  out.pass = out.fitted_slope >= theoretical - slack;
  return out;
}

std::vector<double> dyadic_times(int lo_exp, int hi_exp) {
  std::vector<double> t;
  for (int e = lo_exp; e <= hi_exp; ++e) t.push_back(std::ldexp(1.0, e));
  return t;
}

}  // namespace fracsim
