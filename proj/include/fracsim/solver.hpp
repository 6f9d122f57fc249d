#pragma once

#include "fracsim/convolution.hpp"
#include "fracsim/spectral.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace fracsim {

struct SolverConfig {
  FractionalParams params{0.8, 0.7, 0.0};
  EigenSystem eig{1.0, 8};
  NoiseSpec noise = NoiseSpec::power_law(8, 2.0);
  TimeGrid grid = TimeGrid::uniform(0.1, 128);
  ForcingSpec forcing = LinearForcing{0.0};
  SpectralField u0 = SpectralField::Zero(8);
  double K_ball = 10.0;
  double picard_tol = 1e-10;
  int picard_max_iters = 200;
  bool noise_enabled = false;
  bool nonlinearity_enabled = true;
  int grid_size = 0;  // collocation points for B and f; 0 picks 2 * modes + 2

  void validate() const;
  int collocation_size() const { return grid_size > 0 ? grid_size : 2 * eig.modes() + 2; }
};

/// states is (N+1) x modes; row n holds u(t_n).
struct Trajectory {
  TimeGrid grid;
  Eigen::MatrixXd states;
  int iterations_used = 0;
  std::vector<double> contraction_ratios;
  double final_residual = 0.0;
};

/// Product-integration weights of the Duhamel kernel S(x) = x^{a-1} E_{a,a}(-gamma x^a)
/// against piecewise-linear data on a uniform grid. Lag m couples node n to
/// the interval [t_{n-m}, t_{n-m+1}].
class DuhamelWeights {
 public:
  DuhamelWeights(const TimeGrid& grid, const FractionalParams& params, const EigenSystem& eig);

  /// \int_0^{t_n} S(t_n - s) g(s) ds per mode; g is (N+1) x modes.
  SpectralField apply(const Eigen::MatrixXd& g, int n) const;
  /// The same for every node at once.
  Eigen::MatrixXd apply_all(const Eigen::MatrixXd& g) const;

  /// Weight of the left / right interval endpoint at lag m (1-based), mode k.
  double left(int m, int k) const { return left_(m - 1, k - 1); }
  double right(int m, int k) const { return right_(m - 1, k - 1); }

 private:
  Eigen::MatrixXd left_;   // N x modes
  Eigen::MatrixXd right_;  // N x modes
};

/// \int_0^{t_n} S_alpha(t_n - s) g(s) ds on any grid, g piecewise linear.
SpectralField convolve_S_alpha(const Eigen::MatrixXd& g, int t_index, const TimeGrid& grid,
                               const FractionalParams& params, const EigenSystem& eig);

/// Picard iteration of the mild-solution map on a uniform grid. z_path, when
/// given, is the (N+1) x modes noise trajectory held fixed across sweeps.
Trajectory picard_solve(const SolverConfig& cfg, const Eigen::MatrixXd* z_path = nullptr);

/// sup_n ||F(u)(t_n) - u(t_n)|| in the nu-norm: one extra application of the map.
double fixed_point_residual(const SolverConfig& cfg, const Trajectory& traj, const Eigen::MatrixXd* z_path = nullptr);

/// Probes ||F(u) - F(v)||^2 / ||u - v||^2 over random constant-in-time pairs
/// in the ball and returns 2 * sup / (T^{2a} (1 + K^2)).
double measure_contraction_constant(const SolverConfig& cfg, int probes, std::uint64_t seed);

struct ContractionCheck {
  double bound;
  bool pass;
};

/// C T^{2a} (1 + K^2) and whether it is below 1.
ContractionCheck contraction_check(const SolverConfig& cfg, double measured_C);

/// Largest grid node T with C T^{2a} (1 + K^2) <= 1/2.
double select_T_star(const SolverConfig& cfg, double measured_C);

/// L1 discrete Caputo residual ||D^a u + A u - B(u) - f(u)|| at every node
/// (entry 0 is zero).
Eigen::VectorXd caputo_residual(const Trajectory& traj, const FractionalParams& params, const EigenSystem& eig,
                                const ForcingSpec& forcing, bool B_enabled, int grid_size = 0);

struct HolderOptions {
  double t1 = 0.0;         // base time of the increments
  std::vector<int> lags;   // in steps; empty picks 1, 2, 4, ... up to the horizon
  double slack = 0.15;
};

struct HolderStudy {
  RateReport report;
  std::vector<int> lags;
  int iterations_max = 0;
};

/// Monte Carlo estimate of E||u(t1 + lag) - u(t1)||^2 in the nu-norm with the
/// log-log slope compared to the beta exponent.
HolderStudy holder_study(const SolverConfig& cfg, int n_paths, std::uint64_t seed, const HolderOptions& opts = {});

}  // namespace fracsim
