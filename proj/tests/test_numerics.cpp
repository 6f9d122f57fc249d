#include "fracsim/parallel.hpp"
#include "fracsim/quadrature.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

using namespace fracsim;

namespace {

class ScopedThreads {
 public:
  explicit ScopedThreads(const char* value) {
    if (const char* old = std::getenv("FRACSIM_THREADS")) saved_ = old, had_ = true;
    setenv("FRACSIM_THREADS", value, 1);
  }
  ~ScopedThreads() {
    if (had_) setenv("FRACSIM_THREADS", saved_.c_str(), 1);
    else unsetenv("FRACSIM_THREADS");
  }

 private:
  std::string saved_;
  bool had_ = false;
};

}  // namespace

TEST_CASE("Gauss-Legendre rules") {
  for (int n : {1, 2, 5, 16, 64}) {
    const GaussRule& r = gauss_legendre(n);
    CHECK(r.nodes.size() == n);
    CHECK(r.weights.sum() == doctest::Approx(2.0).epsilon(1e-14));
    // Exact for degree 2n - 1.
    const int deg = 2 * n - 1;
    const double got = integrate_gauss([&](double x) { return std::pow(x, deg - 1) + std::pow(x, deg); }, 0.0, 1.0, n);
    CHECK(got == doctest::Approx(1.0 / deg + 1.0 / (deg + 1)).epsilon(1e-13));
  }
  CHECK(&gauss_legendre(8) == &gauss_legendre(8));
  CHECK(integrate_gauss([](double x) { return std::exp(x); }, 0.0, 1.0, 12) == doctest::Approx(std::expm1(1.0)).epsilon(1e-15));
}

TEST_CASE("graded endpoint quadrature") {
  const GradedRule rule;
  // \int_0^1 x^{-1/2} (1-x)^{-0.3} dx = B(1/2, 0.7)
  const double beta = std::tgamma(0.5) * std::tgamma(0.7) / std::tgamma(1.2);
  auto f = [](double l, double r) { return std::pow(l, -0.5) * std::pow(r, -0.3); };
  CHECK(integrate_endpoints(f, 1.0, -0.5, -0.3, rule) == doctest::Approx(beta).epsilon(1e-12));

  // Node form matches the direct form.
  double sum = 0.0;
  for (const QuadNode& n : endpoint_nodes(1.0, -0.5, -0.3, rule)) sum += n.weight * f(n.from_left, n.from_right);
  CHECK(sum == doctest::Approx(beta).epsilon(1e-12));

  // Smooth integrand, p = q = 0: \int_0^2 x^3 = 4.
  CHECK(integrate_endpoints([](double l, double) { return l * l * l; }, 2.0, 0.0, 0.0, rule) ==
        doctest::Approx(4.0).epsilon(1e-13));
  CHECK(integrate_endpoints(f, 0.0, -0.5, -0.3, rule) == 0.0);
  CHECK(rule.refined().levels == 60);
  CHECK(rule.refined().points == 12);
}

TEST_CASE("adaptive Gauss-Kronrod") {
  const AdaptiveResult r = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, 1e-14, 1e-12);
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-12));
  const AdaptiveResult peak = integrate_adaptive([](double x) { return 1.0 / (1e-4 + x * x); }, -1.0, 1.0, 1e-12, 1e-10);
  CHECK(peak.converged);
  CHECK(peak.value == doctest::Approx(2.0 / 1e-2 * std::atan(1.0 / 1e-2)).epsilon(1e-9));
  CHECK(peak.intervals > 1);
  const AdaptiveResult starved = integrate_adaptive([](double x) { return 1.0 / (1e-4 + x * x); }, -1.0, 1.0, 1e-14, 1e-14, 2);
  CHECK_FALSE(starved.converged);
}

TEST_CASE("thread count follows the environment") {
  {
    ScopedThreads env("3");
    CHECK(thread_count() == 3);
  }
  {
    ScopedThreads env("0");
    CHECK(thread_count() >= 1);
  }
  {
    ScopedThreads env("many");
    CHECK(thread_count() >= 1);
  }
}

TEST_CASE("parallel_for") {
  ScopedThreads env("4");
  std::vector<int> out(1000, 0);
  parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
  for (std::size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == static_cast<int>(i * i % 97));
  parallel_for(0, [](std::size_t) { FAIL("no work expected"); });

  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(1000,
                               [&](std::size_t i) {
                                 ++ran;
                                 if (i % 100 == 7) throw std::runtime_error(std::to_string(i));
                               }),
                  std::runtime_error);
  CHECK(ran.load() < 1000);
}

TEST_CASE("parallel_for rethrows the lowest failing index when serial") {
  ScopedThreads env("1");
  try {
    parallel_for(50, [](std::size_t i) {
      if (i >= 20) throw std::runtime_error(std::to_string(i));
    });
    FAIL("expected a throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "20");
  }
}

TEST_CASE("random streams") {
  auto a = make_stream(42, 1, 2);
  auto b = make_stream(42, 1, 2);
  CHECK(a() == b());
  CHECK(make_stream(42, 1, 2)() != make_stream(42, 2, 1)());
  CHECK(make_stream(42, 1)() != make_stream(43, 1)());
  CHECK(make_stream(1ull << 32, 0)() != make_stream(0, 0)());
}
