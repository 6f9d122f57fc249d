#pragma once

#include "fracsim/error.hpp"
#include "fracsim/quadrature.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace fracsim {

enum class HurstRegime { low, brownian, high };

class HurstParam {
 public:
  explicit HurstParam(double H);

  double value() const { return h_; }
  HurstRegime regime() const;

 private:
  double h_;
};

/// Strictly increasing nodes 0 = t_0 < ... < t_N = T.
class TimeGrid {
 public:
  explicit TimeGrid(Eigen::VectorXd nodes);
  static TimeGrid uniform(double T, int steps);

  double horizon() const { return nodes_[nodes_.size() - 1]; }
  int steps() const { return static_cast<int>(nodes_.size()) - 1; }
  const Eigen::VectorXd& nodes() const { return nodes_; }
  double operator[](int i) const { return nodes_[i]; }
  bool is_uniform() const;

  /// Nodes 0..last.
  TimeGrid truncated(int last) const;

 private:
  Eigen::VectorXd nodes_;
};

struct FbmPathEnsemble {
  TimeGrid grid;
  HurstParam H;
  Eigen::MatrixXd paths;  // n_paths x (N+1), column 0 is zero
  std::uint64_t seed;
};

double fbm_covariance(const HurstParam& H, double t, double s);

/// [R_H(t_i, t_j)] over the given times.
Eigen::MatrixXd fbm_covariance_matrix(const HurstParam& H, const Eigen::VectorXd& times);

/// Lower Cholesky factor of a covariance matrix. A failed factorization is
/// retried once with 1e-14 * trace added to the diagonal.
Eigen::MatrixXd cholesky_with_ridge(const Eigen::MatrixXd& cov);

double kernel_normalizer(const HurstParam& H);

/// K_H(t, s) for 0 < s < t.
double kernel_KH(const HurstParam& H, double t, double s, const GradedRule& rule = {});

/// K_H(s + len, s); keeps full precision when len << s.
double kernel_KH_span(const HurstParam& H, double s, double len, const GradedRule& rule = {});

/// dK_H/dt (t, s) for 0 < s < t, H != 1/2.
double kernel_dKH_dt(const HurstParam& H, double t, double s);

namespace detail {

inline double dkdt(double c, double h, double t, double s, double gap) {
  return c * (h - 0.5) * std::pow(s / t, 0.5 - h) * std::pow(gap, h - 1.5);
}

}  // namespace detail

struct KstarOptions {
  /// psi(t) ~ (tau - t)^q as t -> tau; q < 0 marks an integrable singularity.
  double right_exponent = 0.0;
  GradedRule rule{};
};

/// (K_tau^* psi)(s) with tau = s + len, 0 < s, len > 0. psi is called as
/// psi(t, tau - t) so integrands singular at tau keep their precision; passing
/// len instead of tau does the same for s close to tau.
template <typename Psi>
double kstar_span(const HurstParam& H, Psi&& psi, double s, double len, const KstarOptions& opt = {}) {
  if (!(s > 0.0 && len > 0.0)) throw Error(ErrorCode::DegenerateInterval, "K* evaluation point must lie in (0, tau)");
  const double h = H.value();
  switch (H.regime()) {
    case HurstRegime::brownian:
      return psi(s, len);
    case HurstRegime::high: {
      const double c = kernel_normalizer(H);
      auto f = [&](double y, double rest) { return psi(s + y, rest) * detail::dkdt(c, h, s + y, s, y); };
      return integrate_endpoints(f, len, h - 1.5, opt.right_exponent, opt.rule);
    }
    case HurstRegime::low: {
      const double c = kernel_normalizer(H);
      const double at_s = psi(s, len);
      auto f = [&](double y, double rest) { return (psi(s + y, rest) - at_s) * detail::dkdt(c, h, s + y, s, y); };
      const double tail = integrate_endpoints(f, len, h - 0.5, std::min(opt.right_exponent, 0.0), opt.rule);
      return at_s * kernel_KH_span(H, s, len, opt.rule) + tail;
    }
  }
  return 0.0;
}

/// (K_tau^* psi)(s) for 0 < s < tau.
template <typename Psi>
double kstar_at(const HurstParam& H, Psi&& psi, double tau, double s, const KstarOptions& opt = {}) {
  if (!(s > 0.0 && s < tau)) throw Error(ErrorCode::DegenerateInterval, "K* evaluation point must lie in (0, tau)");
  return kstar_span(H, std::forward<Psi>(psi), s, tau - s, opt);
}

/// Sampled K* transform of a piecewise-linear psi given at grid nodes; the
/// output is evaluated at the same nodes and is 0 outside (0, tau).
Eigen::VectorXd kstar_transform(const HurstParam& H, const TimeGrid& grid, const Eigen::VectorXd& psi, double tau,
                                const GradedRule& rule = {});

/// \int_0^tau |(K_tau^* psi)(s)|^2 ds, the variance of the Wiener integral of
/// psi against fBm.
double wiener_integral_variance(const HurstParam& H, const std::function<double(double)>& psi, double tau,
                                const GradedRule& rule = {});
double wiener_integral_variance(const HurstParam& H, const TimeGrid& grid, const Eigen::VectorXd& psi, double tau,
                                const GradedRule& rule = {});

/// Cholesky sampler on the grid nodes; path p draws from make_stream(seed, p).
FbmPathEnsemble sample_fbm(const HurstParam& H, const TimeGrid& grid, int n_paths, std::uint64_t seed);

struct CovarianceEntry {
  int i, j;
  double sample, exact, std_error;
};

struct CovarianceCheck {
  std::vector<CovarianceEntry> entries;
  int pairs = 0;
  int within = 0;       // pairs with |sample - R_H| <= n_se standard errors
  double worst_z = 0.0; // largest |sample - R_H| / se
  double fraction() const { return pairs > 0 ? static_cast<double>(within) / pairs : 0.0; }
};

/// Compares the sample second moments E[B(t_i) B(t_j)], 1 <= i <= j <= N, with
/// R_H. The standard error of each entry comes from the spread of the products.
CovarianceCheck check_fbm_covariance(const FbmPathEnsemble& ens, double n_se = 3.0);

}  // namespace fracsim
