#include "fracsim/spectral.hpp"

#include "fracsim/parallel.hpp"
#include "fracsim/special_functions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace fracsim {

namespace {
constexpr double kPi = std::numbers::pi;
}

EigenSystem::EigenSystem(double viscosity, int modes) : viscosity_(viscosity), gammas_(modes) {
  if (!(viscosity > 0.0)) throw Error(ErrorCode::InvalidArgument, "viscosity must be positive");
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "mode count must be >= 1");
  for (int k = 1; k <= modes; ++k) gammas_[k - 1] = viscosity * kPi * kPi * k * k;
}

FractionalParams::FractionalParams(double a, double H, double nu) : alpha(a), nu_smooth(nu), hurst(H) {
  if (!(a > 0.0 && a <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  if (!(nu >= 0.0 && nu < 2.0)) throw Error(ErrorCode::InvalidArgument, "nu must lie in [0, 2)");
  const double base = (2.0 - nu) * a;
  const double low = base + 4.0 * H - 3.0;
  const double mid = base + 2.0 * H - 1.0;
  sigma_exponent = std::min(low, mid);
  gamma_exponent = std::min({2.0 - base, low, mid});
  beta_exponent = std::min({a * nu, base, 2.0 - base, low, mid});
}

Eigen::VectorXd ml_multipliers(MlKind kind, double t, const FractionalParams& params, const EigenSystem& eig) {
  if (!(t > 0.0)) throw Error(ErrorCode::NonPositiveTime, "Mittag-Leffler operators need t > 0");
  const double a = params.alpha;
  const double ta = std::pow(t, a);
  const MittagLeffler ml(a, kind == MlKind::E_alpha ? 1.0 : a);
  Eigen::VectorXd m(eig.modes());
  for (int k = 0; k < eig.modes(); ++k) m[k] = ml.at_negative(eig.gammas()[k] * ta);
  if (kind == MlKind::S_alpha) m *= std::pow(t, a - 1.0);
  return m;
}

Nonlinearity::Nonlinearity(int modes, int grid_size)
    : grid_size_(grid_size), phi_(std::max(grid_size - 1, 0), modes), dphi_(std::max(grid_size - 1, 0), modes) {
  if (modes < 1) throw Error(ErrorCode::InvalidArgument, "mode count must be >= 1");
  if (grid_size < 2 * modes) {
    throw Error(ErrorCode::AliasingRisk, "grid_size " + std::to_string(grid_size) + " < 2 * modes = " +
                                             std::to_string(2 * modes));
  }
  const double r2 = std::sqrt(2.0);
  for (int j = 1; j < grid_size; ++j) {
    const double x = static_cast<double>(j) / grid_size;
    for (int k = 1; k <= modes; ++k) {
      phi_(j - 1, k - 1) = r2 * std::sin(k * kPi * x);
      dphi_(j - 1, k - 1) = r2 * k * kPi * std::cos(k * kPi * x);
    }
  }
}

SpectralField Nonlinearity::operator()(const SpectralField& u) const {
  const Eigen::VectorXd prod = (phi_ * u).cwiseProduct(dphi_ * u);
  return -phi_.transpose() * prod / grid_size_;
}

SpectralField nonlinearity_B(const SpectralField& u, const EigenSystem& eig, int grid_size) {
  if (u.size() > eig.modes()) throw Error(ErrorCode::InvalidArgument, "field has more modes than the eigensystem");
  return Nonlinearity(static_cast<int>(u.size()), grid_size)(u);
}

double measure_B_constant(const EigenSystem& eig, int grid_size, int samples, std::uint64_t seed) {
  const Nonlinearity B(eig.modes(), grid_size);
  auto rng = make_stream(seed, 0);
  std::normal_distribution<double> normal;
  double sup = 0.0;
  for (int i = 0; i < samples; ++i) {
    SpectralField u(eig.modes());
    // Decay the draws so a range of spectral shapes is probed.
    const double decay = 0.5 + 2.0 * i / std::max(samples - 1, 1);
    for (int k = 0; k < u.size(); ++k) u[k] = normal(rng) / std::pow(k + 1.0, decay);
    const double denom = u.norm() * sobolev_norm(u, 1.0, eig);
    if (denom > 0.0) sup = std::max(sup, B(u).norm() / denom);
  }
  return sup;
}

ForcingSpec parse_forcing(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::UnknownForcing, "forcing '" + text + "' has no ':c' part");
  const std::string name = text.substr(0, colon);
  const std::string arg = text.substr(colon + 1);
  double c = 0.0;
  const auto [end, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), c);
  if (ec != std::errc() || end != arg.data() + arg.size() || !std::isfinite(c)) {
    throw Error(ErrorCode::UnknownForcing, "forcing coefficient '" + arg + "' is not a number");
  }
  if (name == "linear") return LinearForcing{c};
  if (name == "bounded_sine") return BoundedSineForcing{c};
  throw Error(ErrorCode::UnknownForcing, "unknown forcing '" + name + "'");
}

std::string to_string(const ForcingSpec& spec) {
  char buf[64];
  if (const auto* l = std::get_if<LinearForcing>(&spec)) {
    std::snprintf(buf, sizeof buf, "linear:%.17g", l->c);
  } else {
    std::snprintf(buf, sizeof buf, "bounded_sine:%.17g", std::get<BoundedSineForcing>(spec).c);
  }
  return buf;
}

SpectralField forcing_f(const SpectralField& u, const ForcingSpec& spec, const Nonlinearity& grid) {
  if (const auto* l = std::get_if<LinearForcing>(&spec)) return l->c * u;
  const double c = std::get<BoundedSineForcing>(spec).c;
  if (u.size() != grid.modes()) throw Error(ErrorCode::InvalidArgument, "field and collocation grid disagree");
  return c * grid.project(grid.synthesize(u).array().sin().matrix());
}

double measure_forcing_lipschitz(const ForcingSpec& spec, const Nonlinearity& grid, int pairs, std::uint64_t seed) {
  auto rng = make_stream(seed, 1);
  std::normal_distribution<double> normal;
  double sup = 0.0;
  for (int i = 0; i < pairs; ++i) {
    SpectralField u(grid.modes()), v(grid.modes());
    for (int k = 0; k < grid.modes(); ++k) {
      u[k] = 2.0 * normal(rng);
      v[k] = u[k] + std::pow(10.0, -3.0 * (i % 3)) * normal(rng);
    }
    const double d = (u - v).norm();
    if (d > 0.0) sup = std::max(sup, (forcing_f(u, spec, grid) - forcing_f(v, spec, grid)).norm() / d);
  }
  return sup;
}

}  // namespace fracsim
