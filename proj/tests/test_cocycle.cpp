#include <doctest.h>

#include <cmath>
#include <random>

#include "maglab/cocycle.hpp"
#include "maglab/suites.hpp"

using namespace maglab;

namespace {

std::vector<double> sample(double (*f)(double), int n, double lo, double hi) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(f(lo + (hi - lo) * i / (n - 1)));
  return v;
}

double smooth(double x) { return std::sin(3 * x); }
double kink(double x) { return std::abs(x); }
double xlogx(double x) { return x == 0.0 ? 0.0 : x * std::log(std::abs(x)); }
double root(double x) { return std::sqrt(std::abs(x)); }

}  // namespace

TEST_SUITE("cocycle") {

TEST_CASE("contact value on the constant model") {
  // -1 - lambda^2 F c with F = 1, c = -1.
  const auto s = std::make_shared<const SurfaceModel>();
  for (auto [lambda, expected] : {std::pair{0.0, -1.0}, {0.5, -0.75}, {0.9, -0.19}}) {
    const FlowParams p(lambda, s);
    const OrbitSegment o = integrate(p, SMPoint(0.1, 0.2, 0.3), 3.0);
    const ContactProfile c = contact_check(p, o);
    CHECK(c.max_deviation < 1e-8);
    CHECK(c.fluctuation < 1e-8);
    CHECK(c.expected.front() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("contact value shifts by lambda theta when a form is supplied") {
  const auto s = std::make_shared<const SurfaceModel>();
  const FlowParams p(0.5, s);
  const OrbitSegment o = integrate(p, SMPoint(0.1, 0.2, 0.3), 1.0);
  const ContactProfile c = contact_check(p, o, [](const Vec3& x) { return 0.1 * std::cos(x[2]); });
  CHECK(c.theta_included);
  CHECK(c.max_deviation < 1e-8);
}

TEST_CASE("Chebyshev interpolation is exact on polynomials") {
  const auto x = ChebyshevCurve::nodes(-0.5, 1.5, 9);
  std::vector<Vec3> v;
  for (double t : x) v.emplace_back(t * t * t, 1 - t, t * t);
  const ChebyshevCurve c(-0.5, 1.5, v);
  for (double t : {-0.4, 0.0, 0.77, 1.3}) {
    CHECK((c.value(t) - Vec3(t * t * t, 1 - t, t * t)).norm() < 1e-12);
    CHECK((c.derivative(t) - Vec3(3 * t * t, -1, 2 * t)).norm() < 1e-10);
  }
}

TEST_CASE("regularity classifier on functions of known class") {
  const int n = 1025;
  const double dx = 2.0 / (n - 1);
  CHECK(zygmund_lipschitz_scan(sample(smooth, n, -1, 1), dx).classification == "smooth");
  CHECK(zygmund_lipschitz_scan(sample(kink, n, -1, 1), dx).classification == "lipschitz-not-little-zygmund");
  CHECK(zygmund_lipschitz_scan(sample(xlogx, n, -1, 1), dx).classification == "zygmund-not-lipschitz");
  CHECK(zygmund_lipschitz_scan(sample(root, n, -1, 1), dx).classification == "not-zygmund");
}

TEST_CASE("regularity scan rejects short inputs") {
  CHECK_THROWS_AS(zygmund_lipschitz_scan(std::vector<double>(10, 0.0), 0.1), DomainError);
}

TEST_CASE("adapted chart tangents follow the strong directions") {
  const auto s = std::make_shared<const SurfaceModel>();
  const FlowParams p(0.3, s);
  const AdaptedChart chart = build_adapted_chart(p, SMPoint(0.1, -0.2, 0.4));
  CHECK(chart.tangency_error() < 1e-4);
  const Vec3 a = chart(0.0, 0.0);
  CHECK((a - Vec3(0.1, -0.2, 0.4)).norm() < 1e-10);
}

TEST_CASE("cocycle vanishes on the constant model") {
  const auto s = std::make_shared<const SurfaceModel>();
  const FlowParams p(0.5, s);
  const CocycleSample k = kam_cocycle(p, SMPoint(0.05, 0.1, 1.2), 1.0);
  CHECK(std::abs(k.value) <= std::max(10 * k.error, 1e-6));
}

}  // TEST_SUITE
