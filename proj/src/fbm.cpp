#include "fracsim/fbm.hpp"

#include "fracsim/parallel.hpp"
#include "fracsim/special_functions.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace fracsim {

HurstParam::HurstParam(double H) : h_(H) {
  if (!(H > 0.0 && H < 1.0)) throw Error(ErrorCode::InvalidArgument, "Hurst parameter must lie in (0, 1)");
}

HurstRegime HurstParam::regime() const {
  if (h_ < 0.5) return HurstRegime::low;
  if (h_ > 0.5) return HurstRegime::high;
  return HurstRegime::brownian;
}

TimeGrid::TimeGrid(Eigen::VectorXd nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw Error(ErrorCode::InvalidArgument, "time grid needs at least two nodes");
  if (nodes_[0] != 0.0) throw Error(ErrorCode::InvalidArgument, "time grid must start at 0");
  for (Eigen::Index i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1])) throw Error(ErrorCode::InvalidArgument, "time grid must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double T, int steps) {
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon T must be positive");
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "step count must be >= 1");
  Eigen::VectorXd nodes(steps + 1);
  for (int i = 0; i <= steps; ++i) nodes[i] = T * i / steps;
  nodes[steps] = T;
  return TimeGrid(std::move(nodes));
}

bool TimeGrid::is_uniform() const {
  const double h = horizon() / steps();
  for (int i = 1; i <= steps(); ++i) {
    if (std::abs(nodes_[i] - nodes_[i - 1] - h) > 1e-12 * horizon()) return false;
  }
  return true;
}

TimeGrid TimeGrid::truncated(int last) const {
  if (last < 1 || last > steps()) throw Error(ErrorCode::InvalidArgument, "truncation index out of range");
  return TimeGrid(nodes_.head(last + 1));
}

double fbm_covariance(const HurstParam& H, double t, double s) {
  if (!(t >= 0.0 && s >= 0.0)) throw Error(ErrorCode::InvalidArgument, "fBm covariance needs t, s >= 0");
  const double e = 2.0 * H.value();
  return 0.5 * (std::pow(t, e) + std::pow(s, e) - std::pow(std::abs(t - s), e));
}

Eigen::MatrixXd fbm_covariance_matrix(const HurstParam& H, const Eigen::VectorXd& times) {
  const Eigen::Index n = times.size();
  Eigen::MatrixXd R(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) R(i, j) = R(j, i) = fbm_covariance(H, times[i], times[j]);
  }
  return R;
}

Eigen::MatrixXd cholesky_with_ridge(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::MatrixXd ridged = cov;
  ridged.diagonal().array() += 1e-14 * cov.trace();
  llt.compute(ridged);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::CholeskyFailure, "covariance matrix is not positive definite even after the ridge");
  }
  return llt.matrixL();
}

double kernel_normalizer(const HurstParam& H) {
  const double h = H.value();
  return std::sqrt(2.0 * h * gamma_fn(1.5 - h) / (gamma_fn(h + 0.5) * gamma_fn(2.0 - 2.0 * h)));
}

double kernel_KH(const HurstParam& H, double t, double s, const GradedRule& rule) {
  if (!(s > 0.0 && s < t)) throw Error(ErrorCode::DegenerateInterval, "K_H(t, s) needs 0 < s < t");
  return kernel_KH_span(H, s, t - s, rule);
}

double kernel_KH_span(const HurstParam& H, double s, double len, const GradedRule& rule) {
  if (!(s > 0.0 && len > 0.0)) throw Error(ErrorCode::DegenerateInterval, "K_H(t, s) needs 0 < s < t");
  const double h = H.value();
  switch (H.regime()) {
    case HurstRegime::brownian:
      return 1.0;
    case HurstRegime::high: {
      auto f = [&](double y, double) { return std::pow(y, h - 1.5) * std::pow(s + y, h - 0.5); };
      const double inner = integrate_endpoints(f, len, h - 1.5, 0.0, rule);
      return kernel_normalizer(H) * (h - 0.5) * std::pow(s, 0.5 - h) * inner;
    }
    case HurstRegime::low: {
      auto f = [&](double y, double) { return std::pow(s + y, h - 1.5) * std::pow(y, h - 0.5); };
      const double inner = integrate_endpoints(f, len, h - 0.5, 0.0, rule);
      const double closed = std::pow((s + len) / s, h - 0.5) * std::pow(len, h - 0.5);
      return kernel_normalizer(H) * (closed - (h - 0.5) * std::pow(s, 0.5 - h) * inner);
    }
  }
  return 0.0;
}

double kernel_dKH_dt(const HurstParam& H, double t, double s) {
  if (!(s > 0.0 && s < t)) throw Error(ErrorCode::DegenerateInterval, "dK_H/dt needs 0 < s < t");
  if (H.regime() == HurstRegime::brownian) return 0.0;
  return detail::dkdt(kernel_normalizer(H), H.value(), t, s, t - s);
}

namespace {

std::function<double(double)> linear_interpolant(const TimeGrid& grid, const Eigen::VectorXd& values) {
  if (values.size() != grid.nodes().size()) {
    throw Error(ErrorCode::InvalidArgument, "sampled function length does not match the grid");
  }
  return [&grid, &values](double t) {
    const Eigen::VectorXd& x = grid.nodes();
    const auto n = x.size();
    if (t <= x[0]) return values[0];
    if (t >= x[n - 1]) return values[n - 1];
    const auto it = std::upper_bound(x.data(), x.data() + n, t);
    const auto i = static_cast<Eigen::Index>(it - x.data()) - 1;
    const double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * values[i] + w * values[i + 1];
  };
}

}  // namespace

Eigen::VectorXd kstar_transform(const HurstParam& H, const TimeGrid& grid, const Eigen::VectorXd& psi, double tau,
                                const GradedRule& rule) {
  if (!(tau > 0.0 && tau <= grid.horizon() * (1.0 + 1e-12))) {
    throw Error(ErrorCode::InvalidArgument, "tau must lie in (0, T]");
  }
  const auto f = linear_interpolant(grid, psi);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(psi.size());
  const KstarOptions opt{0.0, rule};
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double s = grid[static_cast<int>(i)];
    if (s <= 0.0 || s >= tau) continue;
    out[i] = kstar_at(H, [&](double t, double) { return f(t); }, tau, s, opt);
  }
  return out;
}

double wiener_integral_variance(const HurstParam& H, const std::function<double(double)>& psi, double tau,
                                const GradedRule& rule) {
  if (!(tau > 0.0)) throw Error(ErrorCode::NonPositiveTime, "tau must be positive");
  const double h = H.value();
  if (H.regime() == HurstRegime::brownian) {
    return integrate_endpoints([&](double s, double) { const double v = psi(s); return v * v; }, tau, 0.0, 0.0, rule);
  }
  const KstarOptions opt{0.0, rule};
  auto sq = [&](double s, double rest) {
    const double a = kstar_span(H, [&](double t, double) { return psi(t); }, s, rest, opt);
    return a * a;
  };
  const double r = integrate_endpoints(sq, tau, -std::abs(2.0 * h - 1.0), 2.0 * h - 1.0, rule);
  if (!std::isfinite(r)) throw Error(ErrorCode::QuadratureFailure, "Wiener integral variance is not finite");
  return r;
}

double wiener_integral_variance(const HurstParam& H, const TimeGrid& grid, const Eigen::VectorXd& psi, double tau,
                                const GradedRule& rule) {
  return wiener_integral_variance(H, linear_interpolant(grid, psi), tau, rule);
}

FbmPathEnsemble sample_fbm(const HurstParam& H, const TimeGrid& grid, int n_paths, std::uint64_t seed) {
  if (n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  const int n = grid.steps();
  const Eigen::MatrixXd L = cholesky_with_ridge(fbm_covariance_matrix(H, grid.nodes().tail(n)));
  Eigen::MatrixXd paths = Eigen::MatrixXd::Zero(n_paths, n + 1);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t p) {
    auto rng = make_stream(seed, p);
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal(rng);
    paths.row(static_cast<Eigen::Index>(p)).tail(n) = (L * z).transpose();
  });
  return {grid, H, std::move(paths), seed};
}

}  // namespace fracsim

namespace fracsim {

CovarianceCheck check_fbm_covariance(const FbmPathEnsemble& ens, double n_se) {
  const Eigen::MatrixXd& X = ens.paths;
  const auto n = X.rows();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "covariance check needs at least 2 paths");
  CovarianceCheck out;
  for (int i = 1; i <= ens.grid.steps(); ++i) {
    for (int j = i; j <= ens.grid.steps(); ++j) {
      const Eigen::ArrayXd prod = X.col(i).array() * X.col(j).array();
      const double mean = prod.mean();
      const double var = (prod - mean).square().sum() / static_cast<double>(n - 1);
      const double se = std::sqrt(var / static_cast<double>(n));
      const double exact = fbm_covariance(ens.H, ens.grid[i], ens.grid[j]);
      const double z = std::abs(mean - exact) / se;
      out.entries.push_back({i, j, mean, exact, se});
      ++out.pairs;
      if (z <= n_se) ++out.within;
      out.worst_z = std::max(out.worst_z, z);
    }
  }
  return out;
}

}  // namespace fracsim
