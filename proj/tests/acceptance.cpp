// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include "app.hpp"

#include "fracsim/convolution.hpp"
#include "fracsim/fbm.hpp"
#include "fracsim/solver.hpp"
#include "fracsim/special_functions.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracsim;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Point {
  double alpha, hurst, nu;
};

std::vector<Point> matrix() {
  std::vector<Point> out;
  for (double a : {0.6, 0.8})
    for (double h : {0.3, 0.5, 0.7})
      for (double nu : {0.0, 1.0}) out.push_back({a, h, nu});
  return out;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string point_name(const Point& p) { return fmt("(%.1f,%.1f,%.0f)", p.alpha, p.hurst, p.nu); }

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

fs::path work_dir() {
  const fs::path d = fs::temp_directory_path() / ("fracsim_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict special_functions() {
  Verdict v;
  double e11 = 0.0;
  for (double x = 0.0; x <= 50.0; x += 0.005) e11 = std::max(e11, std::abs(mittag_leffler(1, 1, -x) - std::exp(-x)));
  double moments = 0.0;
  for (double a : {0.3, 0.5, 0.7, 0.9})
    for (double nu : {0.0, 0.5, 1.0, 2.0}) moments = std::max(moments, std::abs(wright_moment_quadrature(a, nu).value - wright_moment(a, nu)));
  double laplace = 0.0;
  for (double a : {0.3, 0.5, 0.7, 0.9}) {
    for (double z : {0.0, 0.1, 1.0, 5.0, 10.0}) {
      laplace = std::max(laplace, std::abs(laplace_xi(a, z, LaplaceWeight::plain) - mittag_leffler(a, 1.0, -z)));
      laplace = std::max(laplace, std::abs(laplace_xi(a, z, LaplaceWeight::alpha_theta) - mittag_leffler(a, a, -z)));
    }
  }
  v.pass = e11 <= 1e-10 && moments <= 1e-6 && laplace <= 1e-6;
  v.detail = fmt("E11 err %.2e, moment residual %.2e, Laplace residual %.2e", e11, moments, laplace);
  return v;
}

Verdict fbm_statistics() {
  Verdict v;
  const TimeGrid grid = TimeGrid::uniform(1.0, 64);
  for (double h : {0.3, 0.5, 0.7}) {
    const CovarianceCheck chk = check_fbm_covariance(sample_fbm(HurstParam(h), grid, 10000, 20240601));
    v.pass = v.pass && chk.fraction() >= 0.95;
    v.detail += fmt("H=%.1f %.3f  ", h, chk.fraction());
  }
  return v;
}

Verdict isometry() {
  Verdict v;
  for (double h : {0.3, 0.7}) {
    for (double tau : {0.25, 1.0}) {
      const double r = wiener_integral_variance(HurstParam(h), [](double) { return 1.0; }, tau) / std::pow(tau, 2 * h) - 1;
      v.pass = v.pass && std::abs(r) <= 0.01;
      v.detail += fmt("H=%.1f tau=%.2f %+.1e  ", h, tau, r);
    }
  }
  return v;
}

StochasticConvolution convolution_at(const Point& p, int modes) {
  return StochasticConvolution(FractionalParams(p.alpha, p.hurst, p.nu), EigenSystem(1.0, modes),
                               NoiseSpec::power_law(modes, 2.0));
}

Verdict moment_rate(bool increments) {
  Verdict v;
  const std::vector<double> ts = dyadic_times(-10, -4);
  for (const Point& p : matrix()) {
    const FractionalParams fp(p.alpha, p.hurst, p.nu);
    const double exponent = increments ? fp.gamma_exponent : fp.sigma_exponent;
    if (!(fp.sigma_exponent > 0.0) || !(exponent > 0.0)) continue;
    const auto conv = convolution_at(p, 32);
    std::vector<double> ms;
    bool finite = true;
    for (double t : ts) {
      const double m = increments ? conv.increment_second_moment(0.125, 0.125 + t).value : conv.z_second_moment(t).value;
      finite = finite && std::isfinite(m) && m > 0.0;
      ms.push_back(m);
    }
    if (!finite) {
      v.pass = false;
      v.detail += point_name(p) + " non-finite  ";
      continue;
    }
    const RateReport r = rate_fit(ts, ms, exponent, 0.1);
    v.pass = v.pass && r.pass;
    v.detail += fmt("%s %.3f/%.1f%s  ", point_name(p).c_str(), r.fitted_slope, exponent, r.pass ? "" : "!");
  }
  return v;
}

Verdict sampler_oracle() {
  Verdict v;
  const int n = 10000;
  const TimeGrid grid = TimeGrid::uniform(0.25, 8);
  for (const Point& p : matrix()) {
    const FractionalParams fp(p.alpha, p.hurst, p.nu);
    if (!(fp.sigma_exponent > 0.0)) continue;
    const auto conv = convolution_at(p, 8);
    const ZEnsemble z = sample_Z(grid, conv, n, 99);
    double worst = 0.0;
    for (int i : {2, 5, 8}) {
      Eigen::ArrayXd norms(n);
      for (int path = 0; path < n; ++path) {
        double s = 0.0;
        for (int k = 1; k <= 8; ++k) s += std::pow(conv.eig().gamma(k), p.nu) * std::pow(z.paths[path](i, k - 1), 2);
        norms[path] = s;
      }
      const double mean = norms.mean();
      const double se = std::sqrt((norms - mean).square().sum() / (n - 1) / n);
      const double zscore = std::abs(mean - conv.z_second_moment(grid[i]).value) / se;
      worst = std::max(worst, zscore);
    }
    v.pass = v.pass && worst <= 3.0;
    v.detail += fmt("%s |z|max %.2f  ", point_name(p).c_str(), worst);
  }
  return v;
}

Verdict fixed_point(const fs::path& dir) {
  Verdict v;
  int runs = 0;
  double worst_ratio = 0.0, worst_residual = 0.0;
  for (const Point& p : matrix()) {
    const bool noise = FractionalParams(p.alpha, p.hurst, p.nu).sigma_exponent > 0.0;
    const json cfg = {{"seed", 3},
                      {"params", {{"alpha", p.alpha}, {"H", p.hurst}, {"nu", p.nu}}},
                      {"eigen", {{"modes", 8}}},
                      {"grid", {{"T", 1.0}, {"steps", 128}}},
                      {"solver", {{"forcing", "bounded_sine:0.5"}, {"u0", {0.1}}, {"noise", noise}, {"select_T_star", true}}}};
    const fs::path out = dir / ("solve_" + std::to_string(runs++));
    std::ostringstream err;
    const int code = app::run_subcommand("solve", app::config_from_json(cfg), out, err);
    const json m = json::parse(slurp(out / "manifest.json"));
    if (code != 0) {
      v.pass = false;
      v.detail += point_name(p) + " exit " + std::to_string(code) + "  ";
      continue;
    }
    for (double r : m["results"]["contraction_ratios"]) worst_ratio = std::max(worst_ratio, r);
    worst_residual = std::max(worst_residual, m["results"]["final_residual"].get<double>());
  }
  v.pass = v.pass && worst_ratio < 1.0 && worst_residual <= 2e-10;
  v.detail += fmt("%d points, max ratio %.3f, max residual %.1e", runs, worst_ratio, worst_residual);

  // Linear problem at N = 512 against E_a(-gamma_k t^a) u0_k.
  double worst = 0.0;
  for (double a : {0.6, 0.8}) {
    SolverConfig s;
    s.params = FractionalParams(a, 0.7, 0.0);
    s.eig = EigenSystem(1.0, 8);
    s.noise = NoiseSpec::power_law(8, 2.0);
    s.grid = TimeGrid::uniform(0.1, 512);
    s.forcing = LinearForcing{0.0};
    s.u0 = SpectralField(8);
    for (int k = 0; k < 8; ++k) s.u0[k] = 1.0 / (k + 1);
    s.nonlinearity_enabled = false;
    const Trajectory tr = picard_solve(s);
    for (int n = 0; n <= 512; ++n)
      for (int k = 1; k <= 8; ++k)
        worst = std::max(worst, std::abs(tr.states(n, k - 1) - mittag_leffler(a, 1.0, -s.eig.gamma(k) * std::pow(s.grid[n], a)) * s.u0[k - 1]));
  }
  v.pass = v.pass && worst <= 1e-3;
  v.detail += fmt(", linear N=512 err %.1e", worst);
  return v;
}

Verdict caputo_order() {
  Verdict v;
  for (double a : {0.6, 0.8}) {
    std::vector<double> hs, rs;
    for (int N : {32, 64, 128, 256, 512}) {
      SolverConfig s;
      s.params = FractionalParams(a, 0.7, 0.0);
      s.eig = EigenSystem(1.0, 8);
      s.noise = NoiseSpec::power_law(8, 2.0);
      s.grid = TimeGrid::uniform(0.1, N);
      s.forcing = LinearForcing{-1.0};
      s.u0 = SpectralField(8);
      for (int k = 0; k < 8; ++k) s.u0[k] = 1.0 / (k + 1);
      s.nonlinearity_enabled = false;
      const Trajectory tr = picard_solve(s);
      const Eigen::VectorXd r = caputo_residual(tr, s.params, s.eig, s.forcing, false);
      hs.push_back(0.1 / N);
      rs.push_back(r.tail(N / 2 + 1).maxCoeff());
    }
    const double order = slope(hs, rs);
    v.pass = v.pass && order >= 1.0;
    v.detail += fmt("alpha=%.1f order %.3f  ", a, order);
  }
  return v;
}

Verdict holder() {
  SolverConfig s;
  s.params = FractionalParams(0.8, 0.7, 1.0);
  s.eig = EigenSystem(1.0, 8);
  s.noise = NoiseSpec::power_law(8, 2.0);
  s.grid = TimeGrid::uniform(1.0 / 16, 128);
  s.forcing = BoundedSineForcing{0.5};
  s.u0 = SpectralField::Zero(8);
  s.u0[0] = 0.1;
  s.K_ball = 10.0;
  s.noise_enabled = true;
  s.nonlinearity_enabled = true;
  HolderOptions opts;
  opts.slack = 0.15;
  const HolderStudy h = holder_study(s, 200, 7, opts);
  return {h.report.pass, fmt("slope %.4f vs beta %.2f - 0.15", h.report.fitted_slope, h.report.theoretical_exponent)};
}

Verdict reproducibility(const fs::path& dir) {
  Verdict v;
  const json small = {{"seed", 5},
                      {"eigen", {{"modes", 4}}},
                      {"grid", {{"T", 0.05}, {"steps", 16}}},
                      {"fbm", {{"steps", 16}, {"paths", 200}}},
                      {"mc", {{"paths", 8}}},
                      {"rate", {{"t_lo_exp", -8}, {"t_hi_exp", -2}}},
                      {"solver", {{"select_T_star", true}, {"probes", 8}}}};
  for (const std::string& name : app::subcommands()) {
    const fs::path a = dir / ("repro_" + name + "_a"), b = dir / ("repro_" + name + "_b");
    std::ostringstream err;
    app::run_subcommand(name, app::config_from_json(small), a, err);
    app::run_subcommand(name, app::load_config(a / "manifest.json"), b, err);
    bool same = slurp(a / "manifest.json") == slurp(b / "manifest.json");
    for (const auto& f : json::parse(slurp(a / "manifest.json"))["outputs"])
      same = same && slurp(a / f.get<std::string>()) == slurp(b / f.get<std::string>());
    v.pass = v.pass && same;
    v.detail += name + (same ? " ok  " : " DIFFERS  ");
  }
  return v;
}

}  // namespace

int main() {
  const fs::path dir = work_dir();
  struct Criterion {
    int id;
    double budget;  // seconds; 0 means no runtime limit
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, 10, special_functions},
      {2, 60, fbm_statistics},
      {3, 0, isometry},
      {4, 300, [] { return moment_rate(false); }},
      {5, 0, [] { return moment_rate(true); }},
      {6, 0, sampler_oracle},
      {7, 0, [&] { return fixed_point(dir); }},
      {8, 0, caputo_order},
      {9, 600, holder},
      {10, 0, [&] { return reproducibility(dir); }},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && secs > c.budget) {
      v.pass = false;
      v.detail += fmt(" over the %.0f s budget", c.budget);
    }
    failed += v.pass ? 0 : 1;
    std::printf("criterion %d: %s  %s [%.1f s]\n", c.id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  fs::remove_all(dir);
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
