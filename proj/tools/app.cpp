#include "app.hpp"

#include "fracsim/convolution.hpp"
#include "fracsim/fbm.hpp"
#include "fracsim/solver.hpp"
#include "fracsim/special_functions.hpp"
#include "fracsim/spectral.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#ifndef FRACSIM_VERSION
#define FRACSIM_VERSION "unknown"
#endif

namespace fracsim::app {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ConfigError, "'" + key + "' " + what);
}

bool convert(const json& j, double& out) {
  if (!j.is_number()) return false;
  out = j.get<double>();
  return true;
}

bool convert(const json& j, int& out) {
  if (!j.is_number_integer()) return false;
  const auto v = j.get<std::int64_t>();
  if (v < INT32_MIN || v > INT32_MAX) return false;
  out = static_cast<int>(v);
  return true;
}

bool convert(const json& j, std::uint64_t& out) {
  // Programmatic JSON holds small literals as signed integers.
  if (j.is_number_unsigned()) {
    out = j.get<std::uint64_t>();
  } else if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(j.get<std::int64_t>());
  } else {
    return false;
  }
  return true;
}

bool convert(const json& j, bool& out) {
  if (!j.is_boolean()) return false;
  out = j.get<bool>();
  return true;
}

bool convert(const json& j, std::string& out) {
  if (!j.is_string()) return false;
  out = j.get<std::string>();
  return true;
}

template <typename T>
bool convert(const json& j, std::vector<T>& out) {
  if (!j.is_array()) return false;
  std::vector<T> v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!convert(j[i], v[i])) return false;
  }
  out = std::move(v);
  return true;
}

// One JSON object level. Every key read is recorded so finish() can reject
// the rest.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) config_error(where_, "must be an object");
  }

  template <typename T>
  void read(const std::string& key, T& dst) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it != j_.end() && !convert(*it, dst)) config_error(path(key), "has the wrong type");
  }

  Section section(const std::string& key) {
    static const json empty = json::object();
    seen_.insert(key);
    const auto it = j_.find(key);
    return Section(it == j_.end() ? empty : *it, path(key));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) config_error(path(item.key()), "is not a recognised key");
    }
  }

 private:
  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

// Runs a library constructor and reports its complaint against the key.
template <typename F>
void check(const std::string& key, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    config_error(key, e.what());
  }
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) config_error(key, what);
}

template <typename T, typename P>
void require_all(const std::vector<T>& v, P&& pred, const std::string& key, const std::string& what) {
  require(!v.empty(), key, "must not be empty");
  for (const T& x : v) require(pred(x), key, what);
}

void validate(const RunConfig& c) {
  check("params", [&] { FractionalParams(c.alpha, c.hurst, c.nu); });
  check("eigen", [&] { EigenSystem(c.viscosity, c.modes); });
  check("noise", [&] { NoiseSpec::power_law(c.modes, c.rho, c.noise_scale); });
  check("grid", [&] { TimeGrid::uniform(c.horizon, c.steps); });
  check("solver.forcing", [&] { parse_forcing(c.forcing); });
  require(static_cast<int>(c.u0.size()) <= c.modes, "solver.u0", "has more entries than eigen.modes");
  for (double v : c.u0) require(std::isfinite(v), "solver.u0", "must be finite");
  require(c.K_ball > 0.0, "solver.K_ball", "must be positive");
  require(c.picard_tol > 0.0, "solver.picard_tol", "must be positive");
  require(c.picard_max_iters >= 1, "solver.picard_max_iters", "must be >= 1");
  require(c.grid_size == 0 || c.grid_size >= 2 * c.modes, "solver.grid_size", "must be 0 or >= 2 * eigen.modes");
  require(c.probes >= 1, "solver.probes", "must be >= 1");
  require(c.t_lo_exp < c.t_hi_exp, "rate.t_lo_exp", "must be below rate.t_hi_exp");
  require(c.t1 >= 0.0, "rate.t1", "must be >= 0");
  require(c.rate_slack >= 0.0, "rate.slack", "must be >= 0");
  require_all(c.ml_alpha, [](double a) { return a > 0.0 && a <= 1.0; }, "ml_eval.alpha", "entries must lie in (0, 1]");
  require_all(c.ml_beta, [](double b) { return b > 0.0; }, "ml_eval.beta", "entries must be positive");
  require_all(c.ml_z, [](double z) { return z >= 0.0 && std::isfinite(z); }, "ml_eval.z", "entries must be >= 0");
  require_all(c.wright_alpha, [](double a) { return a > 0.0 && a < 1.0; }, "ml_eval.wright_alpha",
              "entries must lie in (0, 1)");
  require_all(c.wright_nu, [](double n) { return n > -1.0; }, "ml_eval.nu", "entries must exceed -1");
  require_all(c.wright_theta, [](double t) { return t >= 0.0; }, "ml_eval.theta", "entries must be >= 0");
  check("fbm.H", [&] { HurstParam{c.fbm_hurst}; });
  check("fbm", [&] { TimeGrid::uniform(c.fbm_horizon, c.fbm_steps); });
  require(c.fbm_paths >= 2, "fbm.paths", "must be >= 2");
  require(c.mc_paths >= 1, "mc.paths", "must be >= 1");
  require(c.mc_t1 >= 0.0, "mc.t1", "must be >= 0");
  for (int m : c.mc_lags) require(m >= 1, "mc.lags", "entries must be >= 1");
  require(c.mc_slack >= 0.0, "mc.slack", "must be >= 0");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// RFC 4180 rows; every field is numeric or a fixed header name.
class CsvWriter {
 public:
  CsvWriter(const fs::path& file, const std::vector<std::string>& header) : out_(file, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::ConfigError, "cannot write " + file.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\r\n";
  }

  void row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << fmt(values[i]);
    out_ << "\r\n";
  }

 private:
  std::ofstream out_;
};

SolverConfig solver_config(const RunConfig& c) {
  SolverConfig s;
  s.params = FractionalParams(c.alpha, c.hurst, c.nu);
  s.eig = EigenSystem(c.viscosity, c.modes);
  s.noise = NoiseSpec::power_law(c.modes, c.rho, c.noise_scale);
  s.grid = TimeGrid::uniform(c.horizon, c.steps);
  s.forcing = parse_forcing(c.forcing);
  s.u0 = SpectralField::Zero(c.modes);
  for (std::size_t i = 0; i < c.u0.size(); ++i) s.u0[static_cast<Eigen::Index>(i)] = c.u0[i];
  s.K_ball = c.K_ball;
  s.picard_tol = c.picard_tol;
  s.picard_max_iters = c.picard_max_iters;
  s.noise_enabled = c.noise;
  s.nonlinearity_enabled = c.nonlinearity;
  s.grid_size = c.grid_size;
  return s;
}

ojson report_json(const RateReport& r) {
  ojson j;
  j["fitted_slope"] = r.fitted_slope;
  j["intercept"] = r.intercept;
  j["theoretical_exponent"] = r.theoretical_exponent;
  j["slack"] = r.slack;
  j["pass"] = r.pass;
  return j;
}

struct Outcome {
  ojson results = ojson::object();
  std::vector<std::string> outputs;
  int status = 0;
};

void run_ml_eval(const RunConfig& c, const fs::path& out, Outcome& o) {
  {
    CsvWriter csv(out / "ml_eval.csv", {"alpha", "beta", "z", "value"});
    for (double a : c.ml_alpha) {
      for (double b : c.ml_beta) {
        for (double z : c.ml_z) csv.row({a, b, z, mittag_leffler(a, b, -z)});
      }
    }
  }
  o.outputs.push_back("ml_eval.csv");
  {
    CsvWriter csv(out / "wright_xi.csv", {"alpha", "theta", "value"});
    for (double a : c.wright_alpha) {
      for (double t : c.wright_theta) csv.row({a, t, wright_xi(a, t)});
    }
  }
  o.outputs.push_back("wright_xi.csv");
  double worst = 0.0;
  {
    CsvWriter csv(out / "wright_moments.csv", {"alpha", "nu", "exact", "quadrature", "tail_bound", "residual"});
    for (double a : c.wright_alpha) {
      for (double nu : c.wright_nu) {
        const double exact = wright_moment(a, nu);
        const QuadratureEstimate q = wright_moment_quadrature(a, nu);
        const double r = std::abs(q.value - exact);
        worst = std::max(worst, r);
        csv.row({a, nu, exact, q.value, q.tail_bound, r});
      }
    }
  }
  o.outputs.push_back("wright_moments.csv");
  o.results["max_moment_residual"] = worst;
}

void run_fbm_sample(const RunConfig& c, const fs::path& out, Outcome& o) {
  const HurstParam H(c.fbm_hurst);
  const TimeGrid grid = TimeGrid::uniform(c.fbm_horizon, c.fbm_steps);
  const FbmPathEnsemble ens = sample_fbm(H, grid, c.fbm_paths, c.seed);
  {
    CsvWriter csv(out / "fbm_paths.csv", {"path", "t", "value"});
    for (Eigen::Index p = 0; p < ens.paths.rows(); ++p) {
      for (int i = 0; i <= grid.steps(); ++i) csv.row({static_cast<double>(p), grid[i], ens.paths(p, i)});
    }
  }
  o.outputs.push_back("fbm_paths.csv");
  const CovarianceCheck chk = check_fbm_covariance(ens);
  {
    CsvWriter csv(out / "fbm_covariance.csv", {"t_i", "t_j", "sample", "exact", "std_error"});
    for (const CovarianceEntry& e : chk.entries) csv.row({grid[e.i], grid[e.j], e.sample, e.exact, e.std_error});
  }
  o.outputs.push_back("fbm_covariance.csv");
  o.results["pairs"] = chk.pairs;
  o.results["within_3se"] = chk.within;
  o.results["fraction_within_3se"] = chk.fraction();
  o.results["worst_z"] = chk.worst_z;
}

void run_rate(const RunConfig& c, const fs::path& out, Outcome& o, bool increments) {
  const FractionalParams p(c.alpha, c.hurst, c.nu);
  const EigenSystem eig(c.viscosity, c.modes);
  const StochasticConvolution conv(p, eig, NoiseSpec::power_law(c.modes, c.rho, c.noise_scale));
  const std::vector<double> ts = dyadic_times(c.t_lo_exp, c.t_hi_exp);
  std::vector<MomentEstimate> est;
  for (double t : ts) est.push_back(increments ? conv.increment_second_moment(c.t1, c.t1 + t) : conv.z_second_moment(t));
  std::vector<double> m;
  for (const MomentEstimate& e : est) m.push_back(e.value);
  const RateReport r = rate_fit(ts, m, increments ? p.gamma_exponent : p.sigma_exponent, c.rate_slack);
  const std::string file = increments ? "z_increments.csv" : "z_moments.csv";
  {
    CsvWriter csv(out / file, {increments ? "lag" : "t", "moment", "tail"});
    for (std::size_t i = 0; i < ts.size(); ++i) csv.row({ts[i], est[i].value, est[i].tail});
  }
  o.outputs.push_back(file);
  o.results = report_json(r);
  o.status = r.pass ? 0 : 1;
}

void run_solve(const RunConfig& c, const fs::path& out, Outcome& o) {
  SolverConfig s = solver_config(c);
  if (c.select_T_star) {
    const double C = measure_contraction_constant(s, c.probes, c.seed);
    o.results["measured_C"] = C;
    const double t_star = select_T_star(s, C);
    int last = s.grid.steps();
    while (s.grid[last] > t_star) --last;
    s.grid = s.grid.truncated(last);
  }
  o.results["T_star"] = s.grid.horizon();
  std::optional<Eigen::MatrixXd> z;
  if (s.noise_enabled) {
    z = sample_Z(s.grid, StochasticConvolution(s.params, s.eig, s.noise), 1, c.seed).paths[0];
  }
  const Trajectory traj = picard_solve(s, z ? &*z : nullptr);
  o.results["iterations"] = traj.iterations_used;
  o.results["contraction_ratios"] = traj.contraction_ratios;
  o.results["final_residual"] = traj.final_residual;
  std::vector<std::string> header{"t"};
  for (int k = 1; k <= c.modes; ++k) header.push_back("u_" + std::to_string(k));
  header.push_back("norm");
  {
    CsvWriter csv(out / "trajectory.csv", header);
    for (int n = 0; n <= s.grid.steps(); ++n) {
      const SpectralField u = traj.states.row(n).transpose();
      std::vector<double> row{s.grid[n]};
      row.insert(row.end(), u.data(), u.data() + u.size());
      row.push_back(sobolev_norm(u, c.nu, s.eig));
      csv.row(row);
    }
  }
  o.outputs.push_back("trajectory.csv");
}

void run_holder(const RunConfig& c, const fs::path& out, Outcome& o) {
  const SolverConfig s = solver_config(c);
  HolderOptions opts;
  opts.t1 = c.mc_t1;
  opts.lags = c.mc_lags;
  opts.slack = c.mc_slack;
  const HolderStudy h = holder_study(s, c.mc_paths, c.seed, opts);
  {
    CsvWriter csv(out / "holder.csv", {"lag", "moment"});
    for (std::size_t i = 0; i < h.report.times.size(); ++i) csv.row({h.report.times[i], h.report.moments[i]});
  }
  o.outputs.push_back("holder.csv");
  o.results = report_json(h.report);
  o.results["iterations_max"] = h.iterations_max;
  o.status = h.report.pass ? 0 : 1;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (j.is_object() && j.contains("artifact") && j.contains("config")) return config_from_json(j.at("config"));
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  {
    Section s = root.section("params");
    s.read("alpha", c.alpha);
    s.read("H", c.hurst);
    s.read("nu", c.nu);
    s.finish();
  }
  {
    Section s = root.section("eigen");
    s.read("viscosity", c.viscosity);
    s.read("modes", c.modes);
    s.finish();
  }
  {
    Section s = root.section("noise");
    s.read("rho", c.rho);
    s.read("scale", c.noise_scale);
    s.finish();
  }
  {
    Section s = root.section("grid");
    s.read("T", c.horizon);
    s.read("steps", c.steps);
    s.finish();
  }
  {
    Section s = root.section("solver");
    s.read("forcing", c.forcing);
    s.read("u0", c.u0);
    s.read("K_ball", c.K_ball);
    s.read("picard_tol", c.picard_tol);
    s.read("picard_max_iters", c.picard_max_iters);
    s.read("noise", c.noise);
    s.read("nonlinearity", c.nonlinearity);
    s.read("grid_size", c.grid_size);
    s.read("select_T_star", c.select_T_star);
    s.read("probes", c.probes);
    s.finish();
  }
  {
    Section s = root.section("rate");
    s.read("t_lo_exp", c.t_lo_exp);
    s.read("t_hi_exp", c.t_hi_exp);
    s.read("t1", c.t1);
    s.read("slack", c.rate_slack);
    s.finish();
  }
  {
    Section s = root.section("ml_eval");
    s.read("alpha", c.ml_alpha);
    s.read("beta", c.ml_beta);
    s.read("z", c.ml_z);
    s.read("wright_alpha", c.wright_alpha);
    s.read("nu", c.wright_nu);
    s.read("theta", c.wright_theta);
    s.finish();
  }
  {
    Section s = root.section("fbm");
    s.read("H", c.fbm_hurst);
    s.read("T", c.fbm_horizon);
    s.read("steps", c.fbm_steps);
    s.read("paths", c.fbm_paths);
    s.finish();
  }
  {
    Section s = root.section("mc");
    s.read("paths", c.mc_paths);
    s.read("t1", c.mc_t1);
    s.read("lags", c.mc_lags);
    s.read("slack", c.mc_slack);
    s.finish();
  }
  root.finish();
  validate(c);
  return c;
}

ojson config_to_json(const RunConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["params"] = {{"alpha", c.alpha}, {"H", c.hurst}, {"nu", c.nu}};
  j["eigen"] = {{"viscosity", c.viscosity}, {"modes", c.modes}};
  j["noise"] = {{"rho", c.rho}, {"scale", c.noise_scale}};
  j["grid"] = {{"T", c.horizon}, {"steps", c.steps}};
  j["solver"] = {{"forcing", c.forcing},
                 {"u0", c.u0},
                 {"K_ball", c.K_ball},
                 {"picard_tol", c.picard_tol},
                 {"picard_max_iters", c.picard_max_iters},
                 {"noise", c.noise},
                 {"nonlinearity", c.nonlinearity},
                 {"grid_size", c.grid_size},
                 {"select_T_star", c.select_T_star},
                 {"probes", c.probes}};
  j["rate"] = {{"t_lo_exp", c.t_lo_exp}, {"t_hi_exp", c.t_hi_exp}, {"t1", c.t1}, {"slack", c.rate_slack}};
  j["ml_eval"] = {{"alpha", c.ml_alpha},        {"beta", c.ml_beta},    {"z", c.ml_z},
                  {"wright_alpha", c.wright_alpha}, {"nu", c.wright_nu}, {"theta", c.wright_theta}};
  j["fbm"] = {{"H", c.fbm_hurst}, {"T", c.fbm_horizon}, {"steps", c.fbm_steps}, {"paths", c.fbm_paths}};
  j["mc"] = {{"paths", c.mc_paths}, {"t1", c.mc_t1}, {"lags", c.mc_lags}, {"slack", c.mc_slack}};
  return j;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
    case ErrorCode::UnknownForcing:
    case ErrorCode::AliasingRisk:
      return 2;
    case ErrorCode::RateConditionViolation:
    case ErrorCode::NoFeasibleHorizon:
      return 4;
    case ErrorCode::NoConvergence:
    case ErrorCode::BallEscape:
      return 5;
    default:
      return 3;
  }
}

int run_subcommand(const std::string& name, const RunConfig& cfg, const fs::path& out, std::ostream& err) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    err << "error: cannot create " << out.string() << ": " << ec.message() << "\n";
    return 2;
  }
  Outcome o;
  ojson manifest;
  manifest["artifact"] = "fracsim";
  manifest["version"] = FRACSIM_VERSION;
  manifest["subcommand"] = name;
  manifest["seed"] = cfg.seed;
  manifest["config"] = config_to_json(cfg);
  try {
    if (name == "ml-eval") {
      run_ml_eval(cfg, out, o);
    } else if (name == "fbm-sample") {
      run_fbm_sample(cfg, out, o);
    } else if (name == "z-moments") {
      run_rate(cfg, out, o, false);
    } else if (name == "z-increments") {
      run_rate(cfg, out, o, true);
    } else if (name == "solve") {
      run_solve(cfg, out, o);
    } else if (name == "holder-study") {
      run_holder(cfg, out, o);
    } else {
      err << "error: unknown subcommand '" << name << "'\n";
      return 2;
    }
    manifest["status"] = o.status == 0 ? "pass" : "fail";
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    o.status = exit_code(e.code());
    manifest["status"] = std::string(to_string(e.code()));
    manifest["message"] = e.what();
  }
  manifest["exit_code"] = o.status;
  manifest["outputs"] = o.outputs;
  manifest["results"] = o.results;
  std::ofstream mf(out / "manifest.json", std::ios::binary);
  mf << manifest.dump(2) << "\n";
  if (!mf) {
    err << "error: cannot write manifest in " << out.string() << "\n";
    return 3;
  }
  return o.status;
}

int main(int argc, char** argv) {
  CLI::App cli{"Simulation and rate studies for a time-fractional stochastic Burgers-type equation", "fracsim"};
  cli.set_version_flag("--version", FRACSIM_VERSION);
  cli.require_subcommand(1);
  cli.fallthrough();
  std::string config_path;
  std::string out_dir = "fracsim-out";
  std::optional<std::uint64_t> seed;
  std::optional<double> slack;
  cli.add_option("--config", config_path, "JSON config, or a manifest from an earlier run");
  cli.add_option("--seed", seed, "overrides the config seed");
  cli.add_option("--out", out_dir, "output directory")->capture_default_str();
  cli.add_option("--slack", slack, "overrides the slope slack of rate studies");
  const std::vector<std::pair<std::string, std::string>> help{
      {"ml-eval", "Mittag-Leffler and Wright function tables"},
      {"fbm-sample", "fBm paths and a covariance check"},
      {"z-moments", "second moment of the stochastic convolution and its small-t rate"},
      {"z-increments", "increment moments of the stochastic convolution and their rate"},
      {"solve", "mild solution by Picard iteration"},
      {"holder-study", "Monte Carlo Hoelder exponent of the solution"}};
  for (const auto& [name, text] : help) cli.add_subcommand(name, text);
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return cli.exit(e) == 0 ? 0 : 2;
  }
  const std::string name = cli.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = config_path.empty() ? config_from_json(json::object()) : load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (slack) {
      if (!(*slack >= 0.0)) throw Error(ErrorCode::ConfigError, "'--slack' must be >= 0");
      cfg.rate_slack = *slack;
      cfg.mc_slack = *slack;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return run_subcommand(name, cfg, out_dir, std::cerr);
}

}  // namespace fracsim::app
