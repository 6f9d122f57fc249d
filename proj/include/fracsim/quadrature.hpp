#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace fracsim {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

/// Cached Gauss-Legendre rule with n points, 1 <= n <= 64 (Golub-Welsch).
const GaussRule& gauss_legendre(int n);

template <typename F>
double integrate_gauss(F&& f, double a, double b, int n) {
  const GaussRule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

/// Geometric grading toward a singular endpoint: cells shrink by 1/2 for
/// `levels` levels, each carrying a `points`-point Gauss rule.
struct GradedRule {
  int levels = 40;
  int points = 8;

  GradedRule refined() const { return {levels + levels / 2, points + points / 2}; }
};

namespace detail {

// \int_0^c f(y) dy for an integrand behaving like y^p at 0 (p > -1).
// Substituting v = y^(p+1) removes the power; the v-axis is then graded
// geometrically toward 0. f receives the distance y from the endpoint.
template <typename F>
double integrate_power_end(F&& f, double p, double c, const GradedRule& rule) {
  if (c <= 0.0) return 0.0;
  const double e = p + 1.0;
  const double inv_e = 1.0 / e;
  const bool identity = std::abs(p) < 1e-14;
  const double top = identity ? c : std::pow(c, e);
  const GaussRule& gl = gauss_legendre(rule.points);

  auto body = [&](double v) {
    if (identity) return f(v);
    const double y = std::pow(v, inv_e);
    if (!(y > 0.0)) return 0.0;
    // dy = y^{-p} dv / e
    return f(y) * std::pow(y, -p) * inv_e;
  };

  double total = 0.0;
  double hi = top;
  for (int level = 0; level <= rule.levels; ++level) {
    const double lo = level == rule.levels ? 0.0 : 0.5 * hi;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    double cell = 0.0;
    for (int i = 0; i < rule.points; ++i) cell += gl.weights[i] * body(mid + half * gl.nodes[i]);
    total += half * cell;
    hi = lo;
  }
  return total;
}

}  // namespace detail

/// \int_0^L f over an interval whose integrand behaves like x^p near the left
/// end and (L-x)^q near the right end. f(from_left, from_right) receives both
/// distances so callers keep full precision next to either endpoint.
template <typename F>
double integrate_endpoints(F&& f, double length, double p, double q, const GradedRule& rule) {
  if (length <= 0.0) return 0.0;
  const double half = 0.5 * length;
  const double left = detail::integrate_power_end(
      [&](double y) { return f(y, length - y); }, p, half, rule);
  const double right = detail::integrate_power_end(
      [&](double y) { return f(length - y, y); }, q, half, rule);
  return left + right;
}

struct QuadNode {
  double from_left;
  double from_right;
  double weight;
};

/// Explicit nodes and weights of integrate_endpoints, for callers that reuse
/// one node set across many integrands.
inline std::vector<QuadNode> endpoint_nodes(double length, double p, double q, const GradedRule& rule) {
  std::vector<QuadNode> out;
  if (length <= 0.0) return out;
  out.reserve(static_cast<std::size_t>(2 * (rule.levels + 1) * rule.points));
  const double half = 0.5 * length;
  auto side = [&](double power, bool left) {
    const double e = power + 1.0;
    const bool identity = std::abs(power) < 1e-14;
    double hi = identity ? half : std::pow(half, e);
    const GaussRule& gl = gauss_legendre(rule.points);
    for (int level = 0; level <= rule.levels; ++level) {
      const double lo = level == rule.levels ? 0.0 : 0.5 * hi;
      const double h = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      for (int i = 0; i < rule.points; ++i) {
        const double v = mid + h * gl.nodes[i];
        const double y = identity ? v : std::pow(v, 1.0 / e);
        const double w = identity ? h * gl.weights[i] : h * gl.weights[i] * std::pow(y, -power) / e;
        if (y > 0.0) out.push_back(left ? QuadNode{y, length - y, w} : QuadNode{length - y, y, w});
      }
      hi = lo;
    }
  };
  side(p, true);
  side(q, false);
  return out;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

struct Kronrod15 {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
};

template <typename F>
std::pair<double, double> kronrod_cell(F& f, double a, double b) {
  using K = Kronrod15;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * K::wgk[7];
  double gauss = fc * K::wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * K::xgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += K::wgk[j] * s;
    if (j % 2 == 1) gauss += K::wg[j / 2] * s;
  }
  return {kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature on [a, b].
template <typename F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                  int max_intervals = 4000) {
  struct Cell {
    double a, b, value, error;
  };
  std::vector<Cell> cells;
  cells.reserve(64);
  auto [v0, e0] = detail::kronrod_cell(f, a, b);
  cells.push_back({a, b, v0, e0});
  AdaptiveResult out;
  while (true) {
    double value = 0.0, error = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      value += cells[i].value;
      error += cells[i].error;
      if (cells[i].error > cells[worst].error) worst = i;
    }
    out.value = value;
    out.error = error;
    out.intervals = static_cast<int>(cells.size());
    if (error <= std::max(abs_tol, rel_tol * std::abs(value))) {
      out.converged = true;
      return out;
    }
    if (static_cast<int>(cells.size()) >= max_intervals) return out;
    const Cell cell = cells[worst];
    const double mid = 0.5 * (cell.a + cell.b);
    auto [vl, el] = detail::kronrod_cell(f, cell.a, mid);
    auto [vr, er] = detail::kronrod_cell(f, mid, cell.b);
    cells[worst] = {cell.a, mid, vl, el};
    cells.push_back({mid, cell.b, vr, er});
  }
}

}  // namespace fracsim
