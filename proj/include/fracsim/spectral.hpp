#pragma once

#include "fracsim/fbm.hpp"

#include <Eigen/Dense>

#include <string>
#include <variant>

namespace fracsim {

/// Coefficients v_1..v_K on the basis e_k(x) = sqrt(2) sin(k pi x); entry k-1
/// holds mode k.
using SpectralField = Eigen::VectorXd;

/// gamma_k = viscosity * pi^2 * k^2, k = 1..modes.
class EigenSystem {
 public:
  EigenSystem(double viscosity, int modes);

  double viscosity() const { return viscosity_; }
  int modes() const { return static_cast<int>(gammas_.size()); }
  /// 1-based mode index.
  double gamma(int k) const { return gammas_[k - 1]; }
  const Eigen::VectorXd& gammas() const { return gammas_; }

 private:
  double viscosity_;
  Eigen::VectorXd gammas_;
};

/// (alpha, H, nu) with the regularity exponents derived from them.
struct FractionalParams {
  FractionalParams(double alpha, double H, double nu_smooth);

  double alpha;
  double nu_smooth;
  HurstParam hurst;
  double sigma_exponent;  // second moment of Z(t) ~ t^sigma
  double gamma_exponent;  // increments of Z
  double beta_exponent;   // increments of the mild solution
};

/// (sum_k gamma_k^sigma v_k^2)^{1/2}.
template <typename Derived>
double sobolev_norm(const Eigen::MatrixBase<Derived>& v, double sigma, const EigenSystem& eig) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Sobolev index must be >= 0");
  const auto n = v.size();
  if (n > eig.modes()) throw Error(ErrorCode::InvalidArgument, "field has more modes than the eigensystem");
  if (sigma == 0.0) return v.norm();
  return std::sqrt((eig.gammas().head(n).array().pow(sigma) * v.array().square()).sum());
}

enum class MlKind { E_alpha, E_alpha_alpha, S_alpha };

/// Diagonal symbols m_k(t) of the Mittag-Leffler operators.
Eigen::VectorXd ml_multipliers(MlKind kind, double t, const FractionalParams& params, const EigenSystem& eig);

template <typename Derived>
SpectralField ml_operator_apply(MlKind kind, double t, const Eigen::MatrixBase<Derived>& v,
                                const FractionalParams& params, const EigenSystem& eig) {
  const Eigen::VectorXd m = ml_multipliers(kind, t, params, eig);
  if (v.size() > m.size()) throw Error(ErrorCode::InvalidArgument, "field has more modes than the eigensystem");
  return m.head(v.size()).cwiseProduct(v);
}

/// Pseudo-spectral evaluation of -u u_x on M-1 interior points x_j = j/M.
class Nonlinearity {
 public:
  Nonlinearity(int modes, int grid_size);

  SpectralField operator()(const SpectralField& u) const;

  /// Physical values u(x_j).
  Eigen::VectorXd synthesize(const SpectralField& u) const { return phi_ * u; }
  /// Discrete projection of point values onto the modes.
  SpectralField project(const Eigen::VectorXd& g) const { return phi_.transpose() * g / grid_size_; }

  int modes() const { return static_cast<int>(phi_.cols()); }
  int grid_size() const { return grid_size_; }

 private:
  int grid_size_;
  Eigen::MatrixXd phi_;  // sqrt(2) sin(k pi x_j)
  Eigen::MatrixXd dphi_; // sqrt(2) k pi cos(k pi x_j)
};

/// One-shot form of Nonlinearity; throws AliasingRisk if grid_size < 2 * modes.
SpectralField nonlinearity_B(const SpectralField& u, const EigenSystem& eig, int grid_size);

/// sup over random fields of ||B(u)|| / (||u|| ||A^{1/2} u||).
double measure_B_constant(const EigenSystem& eig, int grid_size, int samples, std::uint64_t seed);

struct LinearForcing {
  double c;
};
struct BoundedSineForcing {
  double c;
};
using ForcingSpec = std::variant<LinearForcing, BoundedSineForcing>;

/// "linear:c" or "bounded_sine:c"; anything else is UnknownForcing.
ForcingSpec parse_forcing(const std::string& text);
std::string to_string(const ForcingSpec& spec);

/// f(u). The bounded sine is applied pointwise on the collocation grid of
/// `grid`, so it must match the field's mode count.
SpectralField forcing_f(const SpectralField& u, const ForcingSpec& spec, const Nonlinearity& grid);

/// Largest ||f(u)-f(v)|| / ||u-v|| over random pairs.
double measure_forcing_lipschitz(const ForcingSpec& spec, const Nonlinearity& grid, int pairs, std::uint64_t seed);

}  // namespace fracsim
