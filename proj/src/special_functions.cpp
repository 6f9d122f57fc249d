#include "fracsim/special_functions.hpp"

#include "fracsim/error.hpp"
#include "fracsim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>

namespace fracsim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double sin_pi(double x) {
  const double r = x - 2.0 * std::round(0.5 * x);  // r in [-1, 1]
  return std::sin(kPi * r);
}

// Arguments such as b - a k land within rounding of a pole; they are snapped
// onto it so the coefficient is an exact zero rather than O(eps) noise.
bool is_nonpositive_integer(double x) {
  const double r = std::round(x);
  return r <= 0.0 && std::abs(x - r) <= 8.0 * kEps * std::max(1.0, std::abs(x));
}

using LogRecip = detail::LogCoef;

// log|1/Gamma(x)| and its sign; sign 0 at the poles.

LogRecip log_rgamma(double x) {
  LogRecip out{-std::numeric_limits<double>::infinity(), 0};
  if (is_nonpositive_integer(x)) return out;
  int sg = 1;
  if (x > 0.0) {
    out.log_abs = -lgamma_r(x, &sg);
    out.sign = sg;
    return out;
  }
  // 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
  const double s = sin_pi(x);
  out.log_abs = std::log(std::abs(s)) + lgamma_r(1.0 - x, &sg) - std::log(kPi);
  out.sign = (s > 0.0 ? 1 : -1) * sg;
  return out;
}

struct Estimate {
  double value = 0.0;
  double error = std::numeric_limits<double>::infinity();
};

// Power series with a rounding-error estimate. Term k carries about k + 4
// roundings (the power, the coefficient and the sum).
Estimate ml_series(const std::vector<double>& coef, double x) {
  double sum = 0.0, power = 1.0, err = 0.0, prev = std::numeric_limits<double>::infinity();
  const std::size_t n = coef.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double term = power * coef[k];
    sum += term;
    const double mag = std::abs(term);
    err += (static_cast<double>(k) + 4.0) * kEps * mag;
    if (k > 2 && mag < prev && mag <= 1e-17 * std::abs(sum)) return {sum, err + mag};
    if (coef[k] == 0.0 && k > 0 && power == 0.0) break;
    prev = mag;
    power *= -x;
    if (!std::isfinite(power)) break;
  }
  return {sum, std::numeric_limits<double>::infinity()};
}

// Algebraic expansion E_{a,b}(-x) ~ -sum_{k>=1} (-x)^{-k} / Gamma(b - a k),
// truncated at its smallest term.
Estimate ml_asymptotic(const std::vector<LogRecip>& coef, double a, double b, double x) {
  const double lx = std::log(x);
  double sum = 0.0, prev = std::numeric_limits<double>::infinity();
  double error = -1.0;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    const int k = static_cast<int>(i) + 1;
    if (coef[i].sign == 0) continue;
    const double mag = std::exp(coef[i].log_abs - k * lx);
    if (mag > prev) {
      error = mag;
      break;
    }
    const double sign = (k % 2 == 0 ? 1.0 : -1.0) * coef[i].sign;
    sum -= sign * mag;
    prev = mag;
    if (mag <= 1e-17 * std::abs(sum)) {
      error = mag;
      break;
    }
  }
  // Ran out of coefficients: the expansion is exact when they end in zeros
  // (integer a and b).
  if (error < 0.0) error = coef.back().sign == 0 ? 0.0 : prev;
  // Exponentially small contribution from the pole s = x^{1/a} e^{i pi / a},
  // present on the negative axis only in the limit a -> 1.
  if (a > 2.0 / 3.0) {
    const double decay = std::abs(std::cos(kPi / a));
    const double lexp = -std::pow(x, 1.0 / a) * decay + (1.0 - b) / a * lx - std::log(a);
    error += std::exp(lexp);
  }
  return {sum, error};
}

struct ContourValue {
  double value;
  double slope;  // d/dx E_{a,b}(-x)
};

// Trapezoid rule on the parabola s = mu (1 + i u)^2 for the Bromwich integral
// of s^{a-b} / (s^a + x) at t = 1.
ContourValue ml_contour(double a, double b, double x) {
  constexpr int n = 24;
  const double mu = kPi * n / 12.0;
  const double h = 3.0 / n;
  double acc = 0.0, dacc = 0.0;
  for (int k = 0; k <= n; ++k) {
    const std::complex<double> one_iu(1.0, k * h);
    const std::complex<double> s = mu * one_iu * one_iu;
    const std::complex<double> ds = std::complex<double>(0.0, 2.0 * mu) * one_iu;
    const std::complex<double> ls = std::log(s);
    const std::complex<double> num = std::exp((a - b) * ls);
    const std::complex<double> den = std::exp(a * ls) + x;
    const std::complex<double> es = std::exp(s) * ds;
    const std::complex<double> f = num / den;
    const double w = k == 0 ? 0.5 : 1.0;
    acc += w * (es * f).imag();
    dacc -= w * (es * f / den).imag();
  }
  return {acc * h / kPi, dacc * h / kPi};
}

void check_ml_domain(double a, double b, double z) {
  if (!(a > 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidArgument, "Mittag-Leffler order a must lie in (0, 1]");
  if (!(b > 0.0)) throw Error(ErrorCode::InvalidArgument, "Mittag-Leffler parameter b must be positive");
  if (!(z <= 0.0)) throw Error(ErrorCode::InvalidArgument, "Mittag-Leffler argument must be <= 0");
}

std::vector<double> series_coefficients(double a, double b, int max_terms) {
  std::vector<double> c(static_cast<std::size_t>(max_terms));
  for (int k = 0; k < max_terms; ++k) {
    const double g = a * k + b;
    int sg = 1;
    c[k] = g < 170.0 ? 1.0 / std::tgamma(g) : std::exp(-lgamma_r(g, &sg));
  }
  return c;
}

std::vector<LogRecip> asymptotic_coefficients(double a, double b, int max_terms) {
  std::vector<LogRecip> c(static_cast<std::size_t>(max_terms));
  for (int k = 1; k <= max_terms; ++k) c[k - 1] = log_rgamma(b - a * k);
  return c;
}

}  // namespace

void MlEvalConfig::validate() const {
  if (!(series_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "series_tol must be positive");
  if (!(z_switch > 0.0)) throw Error(ErrorCode::InvalidArgument, "z_switch must be positive");
  if (max_terms < 10) throw Error(ErrorCode::InvalidArgument, "max_terms must be at least 10");
}

double gamma_fn(double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::NonPositiveArgument, "gamma_fn requires x > 0, got " + std::to_string(x));
  return std::tgamma(x);
}

double rgamma(double x) {
  const LogRecip r = log_rgamma(x);
  return r.sign == 0 ? 0.0 : r.sign * std::exp(r.log_abs);
}

double mittag_leffler_contour(double a, double b, double z) {
  check_ml_domain(a, b, z);
  return ml_contour(a, b, -z).value;
}

double mittag_leffler(double a, double b, double z, const MlEvalConfig& cfg) {
  cfg.validate();
  check_ml_domain(a, b, z);
  const double x = -z;
  if (a == 1.0 && b == 1.0) return std::exp(z);
  if (x == 0.0) return rgamma(b);
  if (x <= cfg.z_switch) {
    const Estimate s = ml_series(series_coefficients(a, b, cfg.max_terms), x);
    if (s.error <= cfg.series_tol * std::abs(s.value)) return s.value;
  } else {
    const Estimate s = ml_asymptotic(asymptotic_coefficients(a, b, cfg.max_terms), a, b, x);
    if (s.value != 0.0 && s.error <= cfg.series_tol * std::abs(s.value)) return s.value;
  }
  const double v = ml_contour(a, b, x).value;
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::ConvergenceFailure, "no Mittag-Leffler branch converged at z = " + std::to_string(z));
  }
  return v;
}

MittagLeffler::MittagLeffler(double a, double b, const MlEvalConfig& cfg) : a_(a), b_(b), cfg_(cfg) {
  cfg_.validate();
  check_ml_domain(a, b, 0.0);
  exponential_ = (a == 1.0 && b == 1.0);
  if (exponential_) return;
  series_coef_ = series_coefficients(a, b, cfg_.max_terms);
  asym_coef_ = asymptotic_coefficients(a, b, cfg_.max_terms);
  for (const LogRecip& c : asym_coef_) {
    const double v = c.sign * std::exp(c.log_abs);
    if (!std::isfinite(v)) break;
    asym_value_.push_back(v);
  }

  auto series_ok = [&](double x) {
    const Estimate s = ml_series(series_coef_, x);
    return s.error <= 0.1 * cfg_.series_tol * std::abs(s.value);
  };
  auto asym_ok = [&](double x) {
    const Estimate s = ml_asymptotic(asym_coef_, a_, b_, x);
    return s.value != 0.0 && s.error <= 0.1 * cfg_.series_tol * std::abs(s.value);
  };

  const double step = cfg_.z_switch / 64.0;
  series_limit_ = 0.0;
  for (double x = step; x <= cfg_.z_switch * (1.0 + 1e-12); x += step) {
    if (!series_ok(x)) break;
    series_limit_ = x;
  }
  asymptotic_limit_ = std::numeric_limits<double>::infinity();
  for (double x = 1e6; x > cfg_.z_switch; x /= 1.02) {
    if (!asym_ok(x)) break;
    asymptotic_limit_ = x;
  }
  if (!std::isfinite(asymptotic_limit_)) {
    throw Error(ErrorCode::ConvergenceFailure, "asymptotic Mittag-Leffler branch never converges");
  }

  if (series_limit_ < asymptotic_limit_) {
    constexpr double kStep = 0.004;
    table_lo_ = std::log(std::max(series_limit_, 1e-3));
    const double hi = std::log(asymptotic_limit_);
    const int nodes = static_cast<int>(std::ceil((hi - table_lo_) / kStep)) + 1;
    table_step_ = (hi - table_lo_) / (nodes - 1);
    table_value_.resize(nodes);
    table_slope_.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
      const double x = std::exp(table_lo_ + i * table_step_);
      const ContourValue c = ml_contour(a_, b_, x);
      table_value_[i] = c.value;
      table_slope_[i] = c.slope * x;  // d/d(log x)
    }
    // Completely monotone cases are positive and close to a power law, so
    // log E is far smoother in log x than E itself.
    log_table_ = std::all_of(table_value_.begin(), table_value_.end(), [](double v) { return v > 0.0; });
    if (log_table_) {
      for (int i = 0; i < nodes; ++i) {
        table_slope_[i] /= table_value_[i];
        table_value_[i] = std::log(table_value_[i]);
      }
    }
  }
}

double MittagLeffler::at_negative(double x) const {
  if (exponential_) return std::exp(-x);
  if (x <= series_limit_) return ml_series(series_coef_, x).value;
  if (x >= asymptotic_limit_) {
    // Same truncation rule as ml_asymptotic with plain coefficients.
    const double step = -1.0 / x;
    double power = 1.0, sum = 0.0, prev = std::numeric_limits<double>::infinity();
    for (const double c : asym_value_) {
      power *= step;
      if (c == 0.0) continue;
      const double term = -c * power;
      const double mag = std::abs(term);
      if (mag > prev) break;
      sum += term;
      prev = mag;
      if (mag <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
  }
  const double u = (std::log(x) - table_lo_) / table_step_;
  const int last = static_cast<int>(table_value_.size()) - 1;
  const int i = std::clamp(static_cast<int>(u), 0, last - 1);
  const double t = u - i;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  const double v = h00 * table_value_[i] + h10 * table_step_ * table_slope_[i] + h01 * table_value_[i + 1] +
                   h11 * table_step_ * table_slope_[i + 1];
  return log_table_ ? std::exp(v) : v;
}

// ---------------------------------------------------------------------------
// Mainardi-Wright function

namespace {

void check_wright_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "Wright order alpha must lie in (0, 1)");
}

Estimate wright_series(double alpha, double theta) {
  double sum = 0.0, max_term = 0.0, prev = std::numeric_limits<double>::infinity();
  double power = 1.0;  // (-theta)^k / k!
  for (int k = 0; k < 600; ++k) {
    const double r = rgamma(1.0 - alpha * (1.0 + k));
    if (!std::isfinite(r)) break;
    const double term = power * r;
    sum += term;
    const double mag = std::abs(term);
    max_term = std::max(max_term, mag);
    if (theta == 0.0) return {sum, 0.0};
    if (r != 0.0) {
      if (k > 3 && mag < prev && mag <= 1e-17 * std::abs(sum)) return {sum, 2.0 * kEps * max_term + mag};
      prev = mag;
    }
    power *= -theta / (k + 1.0);
  }
  return {sum, std::numeric_limits<double>::infinity()};
}

// Positive integral representation obtained from Kanter's formula for the
// one-sided stable density:
//   xi(theta) = theta^{a/(1-a)} / (pi (1-a)) \int_0^pi K(phi) exp(-K(phi) theta^{1/(1-a)}) dphi,
//   K(phi) = sin(a phi)^{a/(1-a)} sin((1-a) phi) / sin(phi)^{1/(1-a)}.
double wright_integral(double alpha, double theta, double tol) {
  const double q = 1.0 / (1.0 - alpha);
  const double c = std::pow(theta, q);
  auto integrand = [&](double phi) {
    const double log_k = alpha * q * std::log(std::sin(alpha * phi)) + std::log(std::sin((1.0 - alpha) * phi)) -
                         q * std::log(std::sin(phi));
    const double k = std::exp(log_k);
    if (!std::isfinite(k)) return 0.0;
    return std::exp(log_k - k * c);
  };
  const AdaptiveResult r = integrate_adaptive(integrand, 0.0, kPi, 0.0, tol, 2000);
  if (!r.converged && r.error > 1e3 * tol * std::abs(r.value) && r.error > 1e-300) {
    throw Error(ErrorCode::QuadratureFailure, "Wright integral did not converge at theta = " + std::to_string(theta));
  }
  return std::pow(theta, alpha * q) * r.value / (kPi * (1.0 - alpha));
}

double log_wright_moment(double alpha, double nu) {
  int sg = 1;
  return lgamma_r(1.0 + nu, &sg) - lgamma_r(1.0 + alpha * nu, &sg);
}

// Markov bound on \int_{theta_max}^inf theta^nu xi(theta) dtheta using the
// higher moments m > nu.
double moment_tail_bound(double alpha, double nu, double theta_max) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= 200; ++j) {
    const double m = nu + j;
    const double log_bound = log_wright_moment(alpha, m) - j * std::log(theta_max);
    best = std::min(best, log_bound);
  }
  return std::exp(best);
}

}  // namespace

double wright_xi(double alpha, double theta, const WrightConfig& cfg) {
  check_wright_alpha(alpha);
  if (!(theta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Wright argument must be >= 0");
  if (theta > cfg.theta_max) {
    throw Error(ErrorCode::DomainOverflow,
                "theta = " + std::to_string(theta) + " exceeds theta_max = " + std::to_string(cfg.theta_max));
  }
  if (theta <= 4.0) {
    const Estimate s = wright_series(alpha, theta);
    if (s.error <= cfg.tol * std::abs(s.value)) return s.value;
  }
  return wright_integral(alpha, theta, cfg.tol);
}

double wright_moment(double alpha, double nu) {
  check_wright_alpha(alpha);
  if (!(nu > -1.0)) throw Error(ErrorCode::InvalidArgument, "moment order nu must exceed -1");
  return gamma_fn(1.0 + nu) / gamma_fn(1.0 + alpha * nu);
}

QuadratureEstimate wright_moment_quadrature(double alpha, double nu, const WrightConfig& cfg) {
  check_wright_alpha(alpha);
  if (!(nu > -1.0)) throw Error(ErrorCode::InvalidArgument, "moment order nu must exceed -1");
  auto f = [&](double theta) {
    if (theta <= 0.0) return 0.0;
    return std::pow(theta, nu) * wright_xi(alpha, theta, cfg);
  };
  const AdaptiveResult r = integrate_adaptive(f, 0.0, cfg.theta_max, 1e-13, 1e-11, 4000);
  if (!r.converged) throw Error(ErrorCode::QuadratureFailure, "moment quadrature did not converge");
  return {r.value, moment_tail_bound(alpha, nu, cfg.theta_max)};
}

double laplace_xi(double alpha, double z, LaplaceWeight weight, const WrightConfig& cfg) {
  check_wright_alpha(alpha);
  if (!(z >= 0.0)) throw Error(ErrorCode::InvalidArgument, "laplace_xi requires z >= 0");
  const bool weighted = weight == LaplaceWeight::alpha_theta;
  auto f = [&](double theta) {
    const double w = weighted ? alpha * theta : 1.0;
    return w * wright_xi(alpha, theta, cfg) * std::exp(-z * theta);
  };
  const double tail = std::exp(-z * cfg.theta_max) * (weighted ? alpha : 1.0) *
                      moment_tail_bound(alpha, weighted ? 1.0 : 0.0, cfg.theta_max);
  if (tail > 1e-8) {
    throw Error(ErrorCode::QuadratureFailure, "tail beyond theta_max is not negligible: bound " + std::to_string(tail));
  }
  const AdaptiveResult r = integrate_adaptive(f, 0.0, cfg.theta_max, 1e-13, 1e-11, 4000);
  if (!r.converged) throw Error(ErrorCode::QuadratureFailure, "Laplace quadrature did not converge");
  return r.value;
}

}  // namespace fracsim
