#include "fracsim/solver.hpp"

#include "fracsim/parallel.hpp"
#include "fracsim/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace fracsim {

void SolverConfig::validate() const {
  const int K = eig.modes();
  if (noise.lambdas.size() != K) throw Error(ErrorCode::InvalidArgument, "noise and eigensystem mode counts differ");
  if (u0.size() != K) throw Error(ErrorCode::InvalidArgument, "u0 and eigensystem mode counts differ");
  if (!(picard_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "picard_tol must be positive");
  if (picard_max_iters < 1) throw Error(ErrorCode::InvalidArgument, "picard_max_iters must be >= 1");
  if (!(K_ball > sobolev_norm(u0, params.nu_smooth, eig))) {
    throw Error(ErrorCode::InvalidArgument, "K_ball must exceed the nu-norm of u0");
  }
  if (grid_size != 0 && grid_size < 2 * K) {
    throw Error(ErrorCode::AliasingRisk, "grid_size must be >= 2 * modes");
  }
}

namespace {

// \int_a^b S(x) (x - a)/h dx and \int_a^b S(x) (b - x)/h dx for h = b - a.
struct IntervalWeights {
  double at_far;   // multiplies g at x = b (the earlier node)
  double at_near;  // multiplies g at x = a (the later node)
};

IntervalWeights interval_weights(double a, double b, double alpha, double gamma, const MittagLeffler& ml) {
  const double h = b - a;
  if (a == 0.0) {
    // Closed forms: \int_0^X S = X^a E_{a,a+1}(-g X^a), \int_0^X x S = X^{a+1} (E_{a,a+1} - E_{a,a+2})(-g X^a).
    const double z = -gamma * std::pow(h, alpha);
    const double e1 = mittag_leffler(alpha, alpha + 1.0, z);
    const double e2 = mittag_leffler(alpha, alpha + 2.0, z);
    const double j0 = std::pow(h, alpha) * e1;
    const double j1 = std::pow(h, alpha + 1.0) * (e1 - e2);
    return {j1 / h, j0 - j1 / h};
  }
  const GaussRule& gl = gauss_legendre(16);
  const double half = 0.5 * h, mid = 0.5 * (a + b);
  IntervalWeights w{0.0, 0.0};
  for (int i = 0; i < 16; ++i) {
    const double x = mid + half * gl.nodes[i];
    const double s = std::pow(x, alpha - 1.0) * ml.at_negative(gamma * std::pow(x, alpha));
    const double wt = half * gl.weights[i] * s / h;
    w.at_far += wt * (x - a);
    w.at_near += wt * (b - x);
  }
  return w;
}

double nu_norm(const Eigen::Ref<const Eigen::VectorXd>& v, const SolverConfig& cfg) {
  return sobolev_norm(v, cfg.params.nu_smooth, cfg.eig);
}

double sup_norm(const Eigen::MatrixXd& m, const SolverConfig& cfg) {
  double sup = 0.0;
  for (Eigen::Index n = 0; n < m.rows(); ++n) sup = std::max(sup, nu_norm(m.row(n).transpose(), cfg));
  return sup;
}

}  // namespace

DuhamelWeights::DuhamelWeights(const TimeGrid& grid, const FractionalParams& params, const EigenSystem& eig) {
  if (!grid.is_uniform()) throw Error(ErrorCode::InvalidArgument, "Duhamel lag weights need a uniform grid");
  const int N = grid.steps();
  const int K = eig.modes();
  const double h = grid.horizon() / N;
  const MittagLeffler ml(params.alpha, params.alpha);
  left_.resize(N, K);
  right_.resize(N, K);
  for (int k = 1; k <= K; ++k) {
    for (int m = 1; m <= N; ++m) {
      const IntervalWeights w = interval_weights((m - 1) * h, m * h, params.alpha, eig.gamma(k), ml);
      left_(m - 1, k - 1) = w.at_far;
      right_(m - 1, k - 1) = w.at_near;
    }
  }
}

SpectralField DuhamelWeights::apply(const Eigen::MatrixXd& g, int n) const {
  SpectralField out = SpectralField::Zero(left_.cols());
  for (int m = 1; m <= n; ++m) {
    out += left_.row(m - 1).transpose().cwiseProduct(g.row(n - m).transpose()) +
           right_.row(m - 1).transpose().cwiseProduct(g.row(n - m + 1).transpose());
  }
  return out;
}

Eigen::MatrixXd DuhamelWeights::apply_all(const Eigen::MatrixXd& g) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), g.cols());
  for (Eigen::Index n = 1; n < g.rows(); ++n) out.row(n) = apply(g, static_cast<int>(n)).transpose();
  return out;
}

SpectralField convolve_S_alpha(const Eigen::MatrixXd& g, int t_index, const TimeGrid& grid,
                               const FractionalParams& params, const EigenSystem& eig) {
  if (t_index < 0 || t_index > grid.steps()) throw Error(ErrorCode::InvalidArgument, "t_index outside the grid");
  if (g.rows() < t_index + 1 || g.cols() != eig.modes()) {
    throw Error(ErrorCode::InvalidArgument, "g must cover nodes 0..t_index and every mode");
  }
  const MittagLeffler ml(params.alpha, params.alpha);
  SpectralField out = SpectralField::Zero(eig.modes());
  const double tn = grid[t_index];
  for (int k = 1; k <= eig.modes(); ++k) {
    double acc = 0.0;
    for (int j = 0; j < t_index; ++j) {
      const double a = j + 1 == t_index ? 0.0 : tn - grid[j + 1];
      const IntervalWeights w = interval_weights(a, tn - grid[j], params.alpha, eig.gamma(k), ml);
      acc += w.at_far * g(j, k - 1) + w.at_near * g(j + 1, k - 1);
    }
    out[k - 1] = acc;
  }
  if (!out.allFinite()) throw Error(ErrorCode::QuadratureFailure, "Duhamel convolution is not finite");
  return out;
}

namespace {

// Pieces of the mild-solution map shared by the solver entry points.
class MildMap {
 public:
  MildMap(const SolverConfig& cfg, const Eigen::MatrixXd* z_path)
      : cfg_(cfg), weights_(cfg.grid, cfg.params, cfg.eig), nl_(cfg.eig.modes(), cfg.collocation_size()) {
    const int N = cfg.grid.steps();
    const int K = cfg.eig.modes();
    base_.resize(N + 1, K);
    base_.row(0) = cfg.u0.transpose();
    const MittagLeffler ml(cfg.params.alpha, 1.0);
    for (int n = 1; n <= N; ++n) {
      const double ta = std::pow(cfg.grid[n], cfg.params.alpha);
      for (int k = 1; k <= K; ++k) base_(n, k - 1) = ml.at_negative(cfg.eig.gamma(k) * ta) * cfg.u0[k - 1];
    }
    if (z_path) {
      if (z_path->rows() != N + 1 || z_path->cols() != K) {
        throw Error(ErrorCode::InvalidArgument, "noise path shape does not match grid and modes");
      }
      base_ += *z_path;
    }
  }

  Eigen::MatrixXd operator()(const Eigen::MatrixXd& u) const {
    Eigen::MatrixXd g(u.rows(), u.cols());
    for (Eigen::Index n = 0; n < u.rows(); ++n) {
      const SpectralField un = u.row(n).transpose();
      SpectralField gn = forcing_f(un, cfg_.forcing, nl_);
      if (cfg_.nonlinearity_enabled) gn += nl_(un);
      g.row(n) = gn.transpose();
    }
    return base_ + weights_.apply_all(g);
  }

  /// The map without its affine part: the Duhamel term alone.
  Eigen::MatrixXd duhamel(const Eigen::MatrixXd& u) const { return (*this)(u) - base_; }

  const Eigen::MatrixXd& base() const { return base_; }

 private:
  const SolverConfig& cfg_;
  DuhamelWeights weights_;
  Nonlinearity nl_;
  Eigen::MatrixXd base_;
};

std::string ratio_list(const std::vector<double>& r) {
  std::ostringstream os;
  const std::size_t from = r.size() > 5 ? r.size() - 5 : 0;
  for (std::size_t i = from; i < r.size(); ++i) os << (i > from ? ", " : "") << r[i];
  return os.str();
}

}  // namespace

Trajectory picard_solve(const SolverConfig& cfg, const Eigen::MatrixXd* z_path) {
  cfg.validate();
  const int N = cfg.grid.steps();
  const int K = cfg.eig.modes();
  Trajectory out{cfg.grid, Eigen::MatrixXd::Zero(N + 1, K), 0, {}, 0.0};
  if (!z_path && cfg.u0.isZero(0.0)) return out;

  const MildMap map(cfg, z_path);
  Eigen::MatrixXd u = map.base();
  if (sup_norm(u, cfg) > cfg.K_ball) {
    throw Error(ErrorCode::BallEscape, "initial iterate leaves the ball of radius " + std::to_string(cfg.K_ball));
  }
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 1; it <= cfg.picard_max_iters; ++it) {
    Eigen::MatrixXd next = map(u);
    if (!next.allFinite()) throw Error(ErrorCode::NoConvergence, "Picard iterate became non-finite");
    const double radius = sup_norm(next, cfg);
    if (radius > cfg.K_ball) {
      throw Error(ErrorCode::BallEscape, "iterate " + std::to_string(it) + " has sup norm " + std::to_string(radius) +
                                             " > K_ball = " + std::to_string(cfg.K_ball));
    }
    const double dist = sup_norm(next - u, cfg);
    if (it > 1 && prev > 0.0) out.contraction_ratios.push_back(dist / prev);
    prev = dist;
    u = std::move(next);
    out.iterations_used = it;
    if (dist < cfg.picard_tol) {
      out.states = u;
      out.final_residual = sup_norm(map(u) - u, cfg);
      return out;
    }
  }
  throw Error(ErrorCode::NoConvergence, "no fixed point after " + std::to_string(cfg.picard_max_iters) +
                                            " sweeps; last distance " + std::to_string(prev) + ", ratios [" +
                                            ratio_list(out.contraction_ratios) + "]");
}

double fixed_point_residual(const SolverConfig& cfg, const Trajectory& traj, const Eigen::MatrixXd* z_path) {
  const MildMap map(cfg, z_path);
  return sup_norm(map(traj.states) - traj.states, cfg);
}

double measure_contraction_constant(const SolverConfig& cfg, int probes, std::uint64_t seed) {
  cfg.validate();
  if (probes < 1) throw Error(ErrorCode::InvalidArgument, "probes must be >= 1");
  const int N = cfg.grid.steps();
  const int K = cfg.eig.modes();
  const MildMap map(cfg, nullptr);
  auto rng = make_stream(seed, 0x70726f6265ULL);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](double radius) {
    SpectralField v(K);
    for (int k = 0; k < K; ++k) v[k] = normal(rng) / std::pow(k + 1.0, 1.0 + cfg.params.nu_smooth);
    const double n = nu_norm(v, cfg);
    return n > 0.0 ? SpectralField(v * (radius / n)) : v;
  };
  double sup = 0.0;
  for (int p = 0; p < probes; ++p) {
    const SpectralField u = draw(cfg.K_ball * unit(rng));
    const SpectralField v = p % 2 == 0 ? draw(cfg.K_ball * unit(rng)) : SpectralField(u + draw(1e-3 * cfg.K_ball));
    Eigen::MatrixXd U = u.transpose().replicate(N + 1, 1);
    Eigen::MatrixXd V = v.transpose().replicate(N + 1, 1);
    const double den = sup_norm(U - V, cfg);
    if (den <= 0.0) continue;
    const double num = sup_norm(map.duhamel(U) - map.duhamel(V), cfg);
    sup = std::max(sup, num * num / (den * den));
  }
  const double T = cfg.grid.horizon();
  const double K2 = cfg.K_ball * cfg.K_ball;
  return 2.0 * sup / (std::pow(T, 2.0 * cfg.params.alpha) * (1.0 + K2));
}

ContractionCheck contraction_check(const SolverConfig& cfg, double measured_C) {
  if (!(measured_C >= 0.0)) throw Error(ErrorCode::InvalidArgument, "measured_C must be >= 0");
  const double bound = measured_C * std::pow(cfg.grid.horizon(), 2.0 * cfg.params.alpha) *
                       (1.0 + cfg.K_ball * cfg.K_ball);
  return {bound, bound < 1.0};
}

double select_T_star(const SolverConfig& cfg, double measured_C) {
  if (!(measured_C >= 0.0)) throw Error(ErrorCode::InvalidArgument, "measured_C must be >= 0");
  const double a = cfg.params.alpha;
  const double K2 = cfg.K_ball * cfg.K_ball;
  const TimeGrid& grid = cfg.grid;
  if (measured_C == 0.0) return grid.horizon();
  const double t_star = std::pow(1.0 / (2.0 * measured_C * (1.0 + K2)), 1.0 / (2.0 * a));
  int best = 0;
  for (int n = 1; n <= grid.steps(); ++n) {
    if (measured_C * std::pow(grid[n], 2.0 * a) * (1.0 + K2) <= 0.5) best = n;
  }
  if (best == 0) {
    throw Error(ErrorCode::NoFeasibleHorizon, "the first step already violates the contraction bound (T* = " +
                                                  std::to_string(t_star) + ")");
  }
  return grid[best];
}

Eigen::VectorXd caputo_residual(const Trajectory& traj, const FractionalParams& params, const EigenSystem& eig,
                                const ForcingSpec& forcing, bool B_enabled, int grid_size) {
  const TimeGrid& grid = traj.grid;
  const int N = grid.steps();
  const int K = static_cast<int>(traj.states.cols());
  if (traj.states.rows() != N + 1) throw Error(ErrorCode::InvalidArgument, "trajectory does not match its grid");
  if (K > eig.modes()) throw Error(ErrorCode::InvalidArgument, "trajectory has more modes than the eigensystem");
  const Nonlinearity nl(K, grid_size > 0 ? grid_size : 2 * K + 2);
  const double a = params.alpha;
  const double g2a = std::tgamma(2.0 - a);
  const Eigen::VectorXd gam = eig.gammas().head(K);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(N + 1);
  for (int n = 1; n <= N; ++n) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(K);
    if (a == 1.0) {
      d = (traj.states.row(n) - traj.states.row(n - 1)).transpose() / (grid[n] - grid[n - 1]);
    } else {
      for (int j = 0; j < n; ++j) {
        const double far = std::pow(grid[n] - grid[j], 1.0 - a);
        const double near = j + 1 == n ? 0.0 : std::pow(grid[n] - grid[j + 1], 1.0 - a);
        const double b = (far - near) / (g2a * (grid[j + 1] - grid[j]));
        d += b * (traj.states.row(j + 1) - traj.states.row(j)).transpose();
      }
    }
    const SpectralField un = traj.states.row(n).transpose();
    Eigen::VectorXd r = d + gam.cwiseProduct(un) - forcing_f(un, forcing, nl);
    if (B_enabled) r -= nl(un);
    out[n] = r.norm();
  }
  return out;
}

HolderStudy holder_study(const SolverConfig& cfg, int n_paths, std::uint64_t seed, const HolderOptions& opts) {
  cfg.validate();
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  const FractionalParams& p = cfg.params;
  if (!(p.beta_exponent > 0.0)) {
    throw Error(ErrorCode::RateConditionViolation, "beta exponent = " + std::to_string(p.beta_exponent) + " <= 0");
  }
  const TimeGrid& grid = cfg.grid;
  if (!grid.is_uniform()) throw Error(ErrorCode::InvalidArgument, "holder_study needs a uniform grid");
  const int N = grid.steps();
  const double h = grid.horizon() / N;
  const int n1 = static_cast<int>(std::lround(opts.t1 / h));
  if (n1 < 0 || n1 >= N) throw Error(ErrorCode::InvalidArgument, "t1 must lie in [0, T)");

  std::vector<int> lags = opts.lags;
  if (lags.empty()) {
    for (int m = 1; n1 + m <= N; m *= 2) lags.push_back(m);
  }
  for (int m : lags) {
    if (m < 1 || n1 + m > N) throw Error(ErrorCode::InvalidArgument, "lag runs past the horizon");
  }

  std::optional<ZEnsemble> z;
  if (cfg.noise_enabled) z = sample_Z(grid, StochasticConvolution(p, cfg.eig, cfg.noise), n_paths, seed);

  std::vector<Eigen::VectorXd> per_path(n_paths);
  std::vector<int> iters(n_paths);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t i) {
    const Trajectory traj = picard_solve(cfg, z ? &z->paths[i] : nullptr);
    Eigen::VectorXd inc(lags.size());
    for (std::size_t j = 0; j < lags.size(); ++j) {
      const Eigen::VectorXd d = (traj.states.row(n1 + lags[j]) - traj.states.row(n1)).transpose();
      const double v = sobolev_norm(d, p.nu_smooth, cfg.eig);
      inc[static_cast<Eigen::Index>(j)] = v * v;
    }
    per_path[i] = inc;
    iters[i] = traj.iterations_used;
  });

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lags.size()));
  for (const auto& v : per_path) mean += v;
  mean /= n_paths;
  std::vector<double> times, moments;
  for (std::size_t j = 0; j < lags.size(); ++j) {
    times.push_back(lags[j] * h);
    moments.push_back(mean[static_cast<Eigen::Index>(j)]);
  }
  HolderStudy out;
  out.report = rate_fit(times, moments, p.beta_exponent, opts.slack);
  out.lags = lags;
  out.iterations_max = *std::max_element(iters.begin(), iters.end());
  return out;
}

}  // namespace fracsim
