#pragma once

#include "fracsim/fbm.hpp"
#include "fracsim/special_functions.hpp"
#include "fracsim/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace fracsim {

/// Covariance eigenvalues lambda_k = scale * k^{-rho} of the noise operator Q.
struct NoiseSpec {
  static NoiseSpec power_law(int modes, double rho, double scale = 1.0);

  Eigen::VectorXd lambdas;
  double rho = 2.0;
  double scale = 1.0;

  double partial_trace() const { return lambdas.sum(); }
  /// Bound on sum_{k > K} lambda_k (infinite when rho <= 1).
  double tail_bound() const;
};

struct ConvolutionOptions {
  GradedRule outer{16, 6};
  GradedRule inner{16, 6};
  GradedRule sampling{8, 4};  // both levels of the covariance matrices behind sample_Z
};

struct MomentEstimate {
  double value = 0.0;
  double tail = 0.0;  // geometric estimate of the truncated modes
};

/// Exact second-order structure of the stochastic convolution
///   Z(t) = \int_0^t (t-s)^{a-1} E_{a,a}(-A (t-s)^a) dB^H_Q(s),
/// computed mode by mode from the K* representation of each kernel.
class StochasticConvolution {
 public:
  StochasticConvolution(const FractionalParams& params, const EigenSystem& eig, const NoiseSpec& noise,
                        const ConvolutionOptions& opts = {});

  /// (t-s)^{a-1} E_{a,a}(-gamma_k (t-s)^a).
  double mode_integrand(int k, double t, double s) const;
  /// Same kernel as a function of the lag x = t - s > 0.
  double kernel(int k, double x) const;

  /// (K_tau^* phi)(s) with phi(r) = kernel(k, tau - r), tau = s + len.
  double transformed_kernel(int k, double s, double len) const;
  double transformed_kernel(int k, double s, double len, const GradedRule& rule) const;

  double mode_variance(int k, double t) const;
  double mode_covariance(int k, double t1, double t2) const;
  /// E|Z_k(t2) - Z_k(t1)|^2.
  double mode_increment(int k, double t1, double t2) const;

  MomentEstimate z_second_moment(double t) const;
  MomentEstimate increment_second_moment(double t1, double t2) const;

  /// Covariance matrix of Z_k over the positive nodes of the grid.
  Eigen::MatrixXd mode_covariance_matrix(int k, const TimeGrid& grid) const;

  const FractionalParams& params() const { return params_; }
  const EigenSystem& eig() const { return eig_; }
  const NoiseSpec& noise() const { return noise_; }
  const ConvolutionOptions& options() const { return opts_; }

 private:
  void require_sigma() const;
  MomentEstimate weighted_sum(const std::vector<double>& per_mode) const;

  FractionalParams params_;
  EigenSystem eig_;
  NoiseSpec noise_;
  ConvolutionOptions opts_;
  MittagLeffler ml_;
};

/// Free-function forms.
double mode_integrand(int k, double t, double s, const FractionalParams& params, const EigenSystem& eig);
double mode_variance(int k, double t, const FractionalParams& params, const EigenSystem& eig, const NoiseSpec& noise);
MomentEstimate z_second_moment(double t, const FractionalParams& params, const EigenSystem& eig,
                               const NoiseSpec& noise);
MomentEstimate increment_second_moment(double t1, double t2, const FractionalParams& params, const EigenSystem& eig,
                                       const NoiseSpec& noise);

/// Sampled trajectories; paths[p] is (N+1) x modes with row 0 zero.
struct ZEnsemble {
  TimeGrid grid;
  std::vector<Eigen::MatrixXd> paths;
  std::uint64_t seed = 0;
};

/// Per-mode Cholesky sampling; mode k of path p draws from make_stream(seed, k, p).
ZEnsemble sample_Z(const TimeGrid& grid, const StochasticConvolution& conv, int n_paths, std::uint64_t seed);
ZEnsemble sample_Z(const TimeGrid& grid, const FractionalParams& params, const EigenSystem& eig,
                   const NoiseSpec& noise, int n_paths, std::uint64_t seed);

struct RateReport {
  std::vector<double> times;
  std::vector<double> moments;
  double fitted_slope = 0.0;
  double intercept = 0.0;
  double theoretical_exponent = 0.0;
  double slack = 0.0;
  bool pass = false;
};

/// Least-squares slope of log(moment) against log(t). Needs >= 4 positive
/// points spanning at least 1.5 decades.
RateReport rate_fit(const std::vector<double>& times, const std::vector<double>& moments, double theoretical,
                    double slack);

/// Dyadic times 2^{lo}, ..., 2^{hi}.
std::vector<double> dyadic_times(int lo_exp, int hi_exp);

}  // namespace fracsim
