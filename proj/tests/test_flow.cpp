#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "maglab/splitting.hpp"
#include "maglab/suites.hpp"

using namespace maglab;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const SurfaceModel> hyperbolic() { return std::make_shared<const SurfaceModel>(); }

std::shared_ptr<const SurfaceModel> perturbed() {
  return std::make_shared<const SurfaceModel>(preset_surface("perturbed"));
}

double wrap(double a) { return std::remainder(a, 2 * kPi); }

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("geodesic from the origin is a diameter of length T") {
  for (double theta : {0.0, 0.7, 2.5}) {
    const FlowParams p(0.0, hyperbolic());
    const OrbitSegment o = integrate(p, SMPoint(0.0, 0.0, theta), 1.0, false);
    const Vec3 e = o.states.back();
    const cplx z(e[0], e[1]);
    CHECK(std::abs(z - std::polar(std::tanh(0.5), theta)) < 1e-10);
    CHECK(std::abs(wrap(e[2] - theta)) < 1e-10);
  }
}

TEST_CASE("constant curvature orbit through the origin is a Euclidean circle") {
  // At 0 the conformal factor is 2, so k_g = lambda gives Euclidean curvature
  // 2 lambda there. The orbit is a Mobius image of a circle, hence a circle
  // tangent to the start direction: centre i / (2 lambda) for theta = 0.
  for (double lambda : {0.3, 0.5}) {
    const FlowParams p(lambda, hyperbolic());
    const OrbitSegment o = integrate(p, SMPoint(0.0, 0.0, 0.0), 2.0, false);
    const cplx c(0.0, 1.0 / (2 * lambda));
    double worst = 0.0;
    for (const Vec3& s : o.states) worst = std::max(worst, std::abs(std::abs(cplx(s[0], s[1]) - c) - std::abs(c)));
    CHECK(worst < 1e-9);
    CHECK(magnetic_curvature_residual(o) < 1e-6);
  }
}

TEST_CASE("time reversal: flip, flow, flip returns to the start") {
  std::mt19937_64 rng(2);
  const auto pts = random_states(10, rng);
  for (const auto& surface : {hyperbolic(), perturbed()}) {
    const FlowParams fwd(0.4, surface), back(-0.4, surface);
    for (const SMPoint& p : pts) {
      const Vec3 a = flow_state(fwd, p.state(), 3.0, false);
      const Vec3 b = flow_state(back, Vec3(a[0], a[1], a[2] + kPi), 3.0, false);
      CHECK(std::abs(b[0] - p.base().x()) < 1e-9);
      CHECK(std::abs(b[1] - p.base().y()) < 1e-9);
      CHECK(std::abs(wrap(b[2] - kPi - p.theta())) < 1e-9);
    }
  }
}

TEST_CASE("orbits stay in the octagon with unit speed") {
  std::mt19937_64 rng(4);
  const FlowParams p(0.5, perturbed());
  for (const SMPoint& s : random_states(5, rng)) {
    const OrbitSegment o = integrate(p, s, 10.0);
    for (const Vec3& x : o.states) CHECK(FuchsianGroup::contains(cplx(x[0], x[1]), 1e-9));
    CHECK(unit_speed_residual(o) < 1e-8);
    CHECK(magnetic_curvature_residual(o) < 1e-6);
  }
}

TEST_CASE("reduced and unreduced orbits agree through the deck maps") {
  const FlowParams p(0.3, hyperbolic());
  const SMPoint s(0.2, -0.1, 1.0);
  const Vec3 free = flow_state(p, s.state(), 4.0, false);
  const FlowDerivative d = flow_derivative(p, s.state(), 4.0);
  const Vec3 mapped = transport_state(d.deck, d.end);
  CHECK(std::abs(mapped[0] - free[0]) < 1e-9);
  CHECK(std::abs(mapped[1] - free[1]) < 1e-9);
  CHECK(std::abs(wrap(mapped[2] - free[2])) < 1e-9);
}

TEST_CASE("Liouville volume is preserved") {
  std::mt19937_64 rng(6);
  for (const auto& surface : {hyperbolic(), perturbed()}) {
    const FlowParams p(0.3, surface);
    for (const SMPoint& s : random_states(5, rng)) CHECK(std::abs(liouville_jacobian(p, s, 5.0) - 1.0) < 1e-8);
  }
}

TEST_CASE("analytic Jacobian of the vector field matches finite differences") {
  std::mt19937_64 rng(8);
  const FlowParams p(0.7, std::make_shared<const SurfaceModel>(preset_surface("magnetic")));
  for (const SMPoint& s : random_states(10, rng)) {
    const Mat3 J = magnetic_field_jacobian(p, s.state());
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = 1e-6;
      const Vec3 fd = (magnetic_field(p, s.state() + e) - magnetic_field(p, s.state() - e)) / 2e-6;
      CHECK((J.col(k) - fd).norm() < 1e-6);
    }
  }
}

TEST_CASE("frame duality and brackets") {
  std::mt19937_64 rng(10);
  const auto s = perturbed();
  const FlowParams p(0.0, s);
  for (const SMPoint& x : random_states(10, rng)) {
    const Mat3 E = frame_at(*s, x.state());
    Mat3 D;
    for (int k = 0; k < 3; ++k) D.col(k) = coframe_on(*s, x.state(), E.col(k));
    CHECK((D - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    const CommutatorResiduals c = commutator_check(p, x);
    CHECK(c.vx_minus_h < 1e-5);
    CHECK(c.vh_plus_x < 1e-5);
    CHECK(c.xh_minus_kv < 1e-5);
  }
}

TEST_CASE("Fornberg weights reproduce derivatives of polynomials") {
  const std::vector<double> nodes{-2, -1, 0, 1, 2};
  const auto w = fd_weights(0.3, nodes, 2);
  auto f = [](double x) { return x * x * x - 2 * x; };
  double d1 = 0, d2 = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    d1 += w[1][i] * f(nodes[i]);
    d2 += w[2][i] * f(nodes[i]);
  }
  CHECK(d1 == doctest::Approx(3 * 0.09 - 2).epsilon(1e-12));
  CHECK(d2 == doctest::Approx(6 * 0.3).epsilon(1e-12));
}

}  // TEST_SUITE

TEST_SUITE("splitting") {

TEST_CASE("Anosov margin and gating") {
  const FlowParams ok(0.5, hyperbolic()), bad(1.0, hyperbolic());
  CHECK(anosov_margin(ok) == doctest::Approx(0.75));
  CHECK_NOTHROW(require_anosov(ok));
  CHECK_THROWS_AS(require_anosov(bad), HypothesisViolation);
}

TEST_CASE("constant curvature slopes solve the Riccati equation") {
  // u' + u^2 + K + lambda^2 F^2 = 0 with constant data: u = +-sqrt(1 - lambda^2).
  std::mt19937_64 rng(12);
  for (double lambda : {0.0, 0.4, 0.8}) {
    const FlowParams p(lambda, hyperbolic());
    const double r = std::sqrt(1 - lambda * lambda);
    for (const SMPoint& s : random_states(2, rng)) {
      const SplittingSample x = splitting_sample(p, s);
      CHECK(x.u_u == doctest::Approx(r).epsilon(1e-4));
      CHECK(x.u_s == doctest::Approx(-r).epsilon(1e-4));
      CHECK(x.growth_rate == doctest::Approx(r).epsilon(1e-2));
    }
  }
}

TEST_CASE("unstable slopes are positive and stable slopes negative") {
  std::mt19937_64 rng(16);
  const FlowParams p(0.3, perturbed());
  for (const SMPoint& s : random_states(3, rng)) {
    const SplittingSample x = splitting_sample(p, s);
    CHECK(x.u_u > 0.0);
    CHECK(x.u_s < 0.0);
  }
}

TEST_CASE("dichotomy fit on the constant model") {
  std::mt19937_64 rng(14);
  const FlowParams p(0.6, hyperbolic());
  const DichotomyReport d = dichotomy_fit(p, random_states(3, rng));
  CHECK(d.eta == doctest::Approx(std::exp(0.8)).epsilon(0.02));
  CHECK(d.rho == doctest::Approx(std::exp(-0.8)).epsilon(0.02));
}

}  // TEST_SUITE
