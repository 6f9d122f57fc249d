#include "oracles.hpp"

#include "fracsim/fbm.hpp"

#include <doctest.h>

#include <cmath>

using namespace fracsim;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("Hurst parameter and time grid") {
  CHECK(HurstParam(0.3).regime() == HurstRegime::low);
  CHECK(HurstParam(0.5).regime() == HurstRegime::brownian);
  CHECK(HurstParam(0.7).regime() == HurstRegime::high);
  CHECK(code_of([] { HurstParam(1.0); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { HurstParam(0.0); }) == ErrorCode::InvalidArgument);

  const TimeGrid g = TimeGrid::uniform(2.0, 8);
  CHECK(g.steps() == 8);
  CHECK(g.horizon() == 2.0);
  CHECK(g[0] == 0.0);
  CHECK(g.is_uniform());
  CHECK(g.truncated(4).horizon() == doctest::Approx(1.0));
  Eigen::VectorXd bad(3);
  bad << 0.0, 0.5, 0.5;
  CHECK(code_of([&] { TimeGrid{bad}; }) == ErrorCode::InvalidArgument);
  bad << 0.1, 0.5, 0.6;
  CHECK(code_of([&] { TimeGrid{bad}; }) == ErrorCode::InvalidArgument);
}

TEST_CASE("fBm covariance") {
  for (double h : {0.2, 0.5, 0.9}) CHECK(fbm_covariance(HurstParam(h), 1, 1) == doctest::Approx(1.0));
  CHECK(fbm_covariance(HurstParam(0.5), 3, 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fbm_covariance(HurstParam(0.7), 2, 1) == doctest::Approx(0.5 * std::pow(2.0, 1.4)).epsilon(1e-15));
  CHECK(fbm_covariance(HurstParam(0.7), 2, 1) == doctest::Approx(1.31950791077289).epsilon(1e-13));
  CHECK(fbm_covariance(HurstParam(0.3), 0.4, 1.7) == fbm_covariance(HurstParam(0.3), 1.7, 0.4));

  for (double h : {0.1, 0.3, 0.5, 0.7, 0.95}) {
    const Eigen::MatrixXd R = fbm_covariance_matrix(HurstParam(h), TimeGrid::uniform(1.0, 64).nodes().tail(64));
    CHECK((R - R.transpose()).norm() == 0.0);
    CHECK(cholesky_with_ridge(R).allFinite());
  }
}

TEST_CASE("Cholesky ridge policy") {
  // Rank one: the plain factorization fails, the ridge rescues it.
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
  const Eigen::MatrixXd L = cholesky_with_ridge(ones);
  CHECK((L * L.transpose() - ones).norm() <= 1e-12);
  CHECK(code_of([] { cholesky_with_ridge(-Eigen::MatrixXd::Identity(2, 2)); }) == ErrorCode::CholeskyFailure);
}

TEST_CASE("kernel normalizer") {
  CHECK(kernel_normalizer(HurstParam(0.5)) == doctest::Approx(1.0).epsilon(1e-15));
  for (double h : {0.3, 0.7}) {
    CHECK(kernel_normalizer(HurstParam(h)) == doctest::Approx(static_cast<double>(oracle::kernel_normalizer(h))).epsilon(1e-14));
  }
}

TEST_CASE("K_H against its integral representation") {
  CHECK(kernel_KH(HurstParam(0.5), 1.0, 0.3) == 1.0);
  for (double h : {0.3, 0.4, 0.6, 0.7, 0.9}) {
    for (auto [t, s] : {std::pair{1.0, 0.5}, {2.0, 0.1}, {0.3, 0.29}}) {
      INFO("H = " << h << " t = " << t << " s = " << s);
      const double want = static_cast<double>(oracle::kernel_KH(h, t, s));
      CHECK(kernel_KH(HurstParam(h), t, s) == doctest::Approx(want).epsilon(1e-8));
      CHECK(kernel_KH_span(HurstParam(h), s, t - s) == doctest::Approx(want).epsilon(1e-8));
    }
  }
  CHECK(code_of([] { kernel_KH(HurstParam(0.7), 1.0, 1.0); }) == ErrorCode::DegenerateInterval);
  CHECK(code_of([] { kernel_KH(HurstParam(0.7), 1.0, 0.0); }) == ErrorCode::DegenerateInterval);
}

TEST_CASE("K_H squared integrates to t^{2H}") {
  for (double h : {0.3, 0.7}) {
    for (double t : {0.25, 1.0}) {
      const HurstParam H(h);
      auto f = [&](long double, long double s, long double rest) {
        const double k = kernel_KH_span(H, static_cast<double>(s), static_cast<double>(rest));
        return static_cast<long double>(k) * k;
      };
      const double v = static_cast<double>(oracle::tanh_sinh(f, 0.0L, t, 1e-10L, 6));
      INFO("H = " << h << " t = " << t);
      CHECK(std::abs(v / std::pow(t, 2 * h) - 1) <= 0.01);
    }
  }
}

TEST_CASE("time derivative of K_H") {
  const HurstParam h7(0.7);
  CHECK(kernel_dKH_dt(h7, 2, 1) == doctest::Approx(0.2 * kernel_normalizer(h7) * std::pow(2.0, 0.2)).epsilon(1e-14));
  CHECK(kernel_dKH_dt(h7, 1.0, 0.4) > 0.0);
  CHECK(kernel_dKH_dt(HurstParam(0.3), 1.0, 0.4) < 0.0);
  const double step = 1e-5;
  for (double h : {0.3, 0.7}) {
    const HurstParam H(h);
    for (auto [t, s] : {std::pair{1.0, 0.5}, {0.8, 0.1}}) {
      const double fd = (kernel_KH(H, t + step, s) - kernel_KH(H, t - step, s)) / (2 * step);
      INFO("H = " << h << " t = " << t << " s = " << s);
      CHECK(kernel_dKH_dt(H, t, s) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("K* transform") {
  auto lin = [](double t, double) { return t; };
  CHECK(kstar_at(HurstParam(0.5), lin, 1.0, 0.3) == 0.3);
  // Above 1/2: c (H - 1/2) s^{1/2-H} \int_s^tau t * t^{H-1/2} (t-s)^{H-3/2} dt.
  const double h = 0.7;
  for (double s : {0.05, 0.25, 0.9}) {
    auto f = [&](long double t, long double from_s, long double) {
      return t * std::pow(t, h - 0.5L) * std::pow(from_s, h - 1.5L);
    };
    const long double want =
        oracle::kernel_normalizer(h) * (h - 0.5L) * std::pow((long double)s, 0.5L - h) * oracle::tanh_sinh(f, s, 1.0L);
    INFO("s = " << s);
    CHECK(kstar_at(HurstParam(h), lin, 1.0, s) == doctest::Approx(static_cast<double>(want)).epsilon(1e-9));
  }
  CHECK(kstar_at(HurstParam(0.7), lin, 1.0, 0.25) == doctest::Approx(0.43015572933822471633).epsilon(1e-9));

  // The sampled form interpolates linearly, so psi(t) = t is reproduced exactly.
  const TimeGrid g = TimeGrid::uniform(1.0, 16);
  const Eigen::VectorXd psi = g.nodes();
  for (double hh : {0.3, 0.7}) {
    const Eigen::VectorXd out = kstar_transform(HurstParam(hh), g, psi, 0.75);
    CHECK(out[0] == 0.0);
    CHECK(out[12] == 0.0);
    CHECK(out[16] == 0.0);
    for (int i = 1; i < 12; ++i) CHECK(out[i] == doctest::Approx(kstar_at(HurstParam(hh), lin, 0.75, g[i])).epsilon(1e-9));
  }
}

TEST_CASE("Wiener integral variance") {
  for (double h : {0.3, 0.5, 0.7}) {
    for (double tau : {0.25, 1.0}) {
      INFO("H = " << h << " tau = " << tau);
      const double v = wiener_integral_variance(HurstParam(h), [](double) { return 1.0; }, tau);
      CHECK(std::abs(v / std::pow(tau, 2 * h) - 1) <= 0.01);
      CHECK(std::abs(v / std::pow(tau, 2 * h) - 1) <= 1e-8);
    }
    // psi(t) = t on [0, 1]: integrating by parts against R_H gives 1 / (2H + 2).
    const double v = wiener_integral_variance(HurstParam(h), [](double t) { return t; }, 1.0);
    CHECK(v == doctest::Approx(1.0 / (2 * h + 2)).epsilon(1e-9));
    const TimeGrid g = TimeGrid::uniform(1.0, 8);
    CHECK(wiener_integral_variance(HurstParam(h), g, g.nodes(), 1.0) == doctest::Approx(1.0 / (2 * h + 2)).epsilon(1e-8));
  }
  // Ito isometry at H = 1/2.
  CHECK(wiener_integral_variance(HurstParam(0.5), [](double t) { return std::sin(t); }, 2.0) ==
        doctest::Approx(1.0 - std::sin(4.0) / 4.0).epsilon(1e-12));
}

TEST_CASE("fBm sampling") {
  const TimeGrid g = TimeGrid::uniform(1.0, 32);
  const auto a = sample_fbm(HurstParam(0.7), g, 50, 11);
  const auto b = sample_fbm(HurstParam(0.7), g, 50, 11);
  CHECK(a.paths == b.paths);
  CHECK(a.paths.col(0).isZero(0.0));
  CHECK(sample_fbm(HurstParam(0.7), g, 50, 12).paths != a.paths);

  const int n = 10000;
  for (double h : {0.3, 0.5, 0.7}) {
    const auto e = sample_fbm(HurstParam(h), g, n, 5);
    INFO("H = " << h);
    // Terminal variance and one increment law, each within 3 standard errors.
    const Eigen::ArrayXd end = e.paths.col(32).array();
    const double var = end.square().mean();
    CHECK(std::abs(var - 1.0) <= 3.0 * std::sqrt(2.0 / n));
    const Eigen::ArrayXd inc = (e.paths.col(24) - e.paths.col(8)).array();
    const double want = std::pow(0.5, 2 * h);
    CHECK(std::abs(inc.square().mean() - want) <= 3.0 * want * std::sqrt(2.0 / n));
    CHECK(check_fbm_covariance(e).fraction() >= 0.95);
  }
  // Brownian increments over disjoint intervals are uncorrelated.
  const auto w = sample_fbm(HurstParam(0.5), g, n, 9);
  const Eigen::ArrayXd d1 = (w.paths.col(8) - w.paths.col(0)).array();
  const Eigen::ArrayXd d2 = (w.paths.col(32) - w.paths.col(16)).array();
  const double corr = (d1 * d2).mean() / std::sqrt(d1.square().mean() * d2.square().mean());
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(static_cast<double>(n)));
}
