#include "fracsim/quadrature.hpp"

#include "fracsim/error.hpp"

#include <Eigen/Eigenvalues>

#include <vector>

namespace fracsim {

namespace {

GaussRule golub_welsch(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussRule rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
  // One Newton polish per node on P_n keeps nodes at full precision for n ~ 64.
  for (int i = 0; i < n; ++i) {
    double x = rule.nodes[i];
    for (int iter = 0; iter < 2; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = n == 1 ? x : p1;
      const double pm = n == 1 ? 1.0 : p0;
      const double dp = n * (x * pn - pm) / (x * x - 1.0);
      x -= pn / dp;
      if (iter == 1) rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    rule.nodes[i] = x;
  }
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static const std::vector<GaussRule> rules = [] {
    std::vector<GaussRule> out(65);
    for (int k = 1; k <= 64; ++k) out[k] = golub_welsch(k);
    return out;
  }();
  if (n < 1 || n > 64) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre order must be in [1, 64]");
  return rules[n];
}

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveArgument: return "NonPositiveArgument";
    case ErrorCode::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::DomainOverflow: return "DomainOverflow";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::DegenerateInterval: return "DegenerateInterval";
    case ErrorCode::CholeskyFailure: return "CholeskyFailure";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::AliasingRisk: return "AliasingRisk";
    case ErrorCode::UnknownForcing: return "UnknownForcing";
    case ErrorCode::RateConditionViolation: return "RateConditionViolation";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BallEscape: return "BallEscape";
    case ErrorCode::NoFeasibleHorizon: return "NoFeasibleHorizon";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace fracsim
