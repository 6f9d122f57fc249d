#pragma once

#include <vector>

namespace fracsim {

/// Evaluation strategy for E_{a,b}(z), z <= 0.
///
/// The power series is used while its cancellation error stays below
/// `series_tol` and |z| <= z_switch; the algebraic asymptotic expansion is
/// used for |z| > z_switch once its optimally truncated remainder is below
/// `series_tol`. Everything in between goes through numerical inversion of
/// the Laplace transform s^{a-b} / (s^a - z) on a parabolic contour.
struct MlEvalConfig {
  double series_tol = 1e-10;
  double z_switch = 10.0;
  int max_terms = 500;

  void validate() const;
};

/// Gamma function for x > 0; throws NonPositiveArgument otherwise.
double gamma_fn(double x);

/// 1/Gamma(x) for every real x (zero at the poles).
double rgamma(double x);

/// Two-parameter Mittag-Leffler function E_{a,b}(z) for 0 < a <= 1, b > 0, z <= 0.
double mittag_leffler(double a, double b, double z, const MlEvalConfig& cfg = {});

/// E_{a,b}(z) evaluated by contour inversion only; exposed for cross-checks.
double mittag_leffler_contour(double a, double b, double z);

namespace detail {
// log|c| and sign of an expansion coefficient; sign 0 marks an exact zero.
struct LogCoef {
  double log_abs;
  int sign;
};
}  // namespace detail

/// Fixed-(a, b) evaluator for hot loops.
///
/// The branch thresholds are located once at construction, and the contour
/// branch is replaced by a cubic Hermite table in log|z| (values and
/// derivatives both come from the contour sum).
class MittagLeffler {
 public:
  MittagLeffler(double a, double b, const MlEvalConfig& cfg = {});

  /// E_{a,b}(z), z <= 0.
  double operator()(double z) const { return at_negative(-z); }

  /// E_{a,b}(-x), x >= 0.
  double at_negative(double x) const;

  double a() const { return a_; }
  double b() const { return b_; }
  double series_limit() const { return series_limit_; }
  double asymptotic_limit() const { return asymptotic_limit_; }

 private:
  double a_;
  double b_;
  MlEvalConfig cfg_;
  bool exponential_ = false;
  std::vector<double> series_coef_;
  std::vector<detail::LogCoef> asym_coef_;
  std::vector<double> asym_value_;
  double series_limit_ = 0.0;
  double asymptotic_limit_ = 0.0;
  bool log_table_ = false;
  double table_lo_ = 0.0;
  double table_step_ = 0.0;
  std::vector<double> table_value_;
  std::vector<double> table_slope_;
};

/// Domain and accuracy controls for the Mainardi-Wright function.
struct WrightConfig {
  double theta_max = 40.0;
  double tol = 1e-12;
};

/// xi_alpha(theta) = sum_k (-theta)^k / (k! Gamma(1 - alpha(1+k))), 0 < alpha < 1.
double wright_xi(double alpha, double theta, const WrightConfig& cfg = {});

/// Gamma(1+nu) / Gamma(1+alpha nu): the nu-th moment of xi_alpha.
double wright_moment(double alpha, double nu);

struct QuadratureEstimate {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// \int_0^theta_max theta^nu xi_alpha(theta) dtheta by adaptive quadrature,
/// together with a bound on the mass beyond theta_max.
QuadratureEstimate wright_moment_quadrature(double alpha, double nu, const WrightConfig& cfg = {});

enum class LaplaceWeight { plain, alpha_theta };

/// \int_0^inf w(theta) xi_alpha(theta) e^{-z theta} dtheta with w = 1 (plain) or
/// w = alpha*theta. Throws QuadratureFailure when the certified tail bound
/// exceeds 1e-8.
double laplace_xi(double alpha, double z, LaplaceWeight weight, const WrightConfig& cfg = {});

}  // namespace fracsim
