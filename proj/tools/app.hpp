#pragma once

#include "fracsim/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fracsim::app {

/// Fully resolved run configuration. Every field has a default, so an empty
/// config file is valid.
struct RunConfig {
  std::uint64_t seed = 1;

  // params
  double alpha = 0.8;
  double hurst = 0.7;
  double nu = 0.0;

  // eigen
  double viscosity = 1.0;
  int modes = 32;

  // noise
  double rho = 2.0;
  double noise_scale = 1.0;

  // grid
  double horizon = 0.0625;
  int steps = 128;

  // solver
  std::string forcing = "bounded_sine:0.5";
  std::vector<double> u0{0.1};
  double K_ball = 10.0;
  double picard_tol = 1e-10;
  int picard_max_iters = 200;
  bool noise = true;
  bool nonlinearity = true;
  int grid_size = 0;
  bool select_T_star = false;
  int probes = 64;

  // rate (z-moments, z-increments)
  int t_lo_exp = -10;
  int t_hi_exp = -4;
  double t1 = 0.125;
  double rate_slack = 0.1;

  // ml_eval
  std::vector<double> ml_alpha{0.5, 0.8, 1.0};
  std::vector<double> ml_beta{1.0};
  std::vector<double> ml_z{0.0, 0.1, 1.0, 5.0, 10.0, 20.0, 50.0};
  std::vector<double> wright_alpha{0.3, 0.5, 0.7, 0.9};
  std::vector<double> wright_nu{0.0, 0.5, 1.0, 2.0};
  std::vector<double> wright_theta{0.0, 0.5, 1.0, 2.0, 5.0, 10.0};

  // fbm
  double fbm_hurst = 0.7;
  double fbm_horizon = 1.0;
  int fbm_steps = 64;
  int fbm_paths = 1000;

  // mc (holder-study)
  int mc_paths = 200;
  double mc_t1 = 0.0;
  std::vector<int> mc_lags;
  double mc_slack = 0.15;
};

/// Reads a config object; unknown keys and mistyped values throw ConfigError
/// naming the key. A manifest is accepted too: its "config" member is used.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path);

/// 0 pass, 1 rate check failed, 2 config, 3 numerics, 4 hypothesis violation,
/// 5 non-convergence.
int exit_code(ErrorCode code);

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"ml-eval", "fbm-sample", "z-moments", "z-increments", "solve",
                                              "holder-study"};
  return names;
}

/// Runs one subcommand, writing its CSV files and manifest.json into out.
/// Returns the exit status; diagnostics go to err.
int run_subcommand(const std::string& name, const RunConfig& cfg, const std::filesystem::path& out, std::ostream& err);

/// Command-line entry point.
int main(int argc, char** argv);

}  // namespace fracsim::app
