#include <doctest.h>

#include <cmath>
#include <random>

#include "maglab/cohomology.hpp"
#include "maglab/suites.hpp"

using namespace maglab;

namespace {

std::shared_ptr<const SurfaceModel> hyperbolic() { return std::make_shared<const SurfaceModel>(); }

InvariantField potential(const FuchsianGroup& G) {
  return InvariantField(0.0, {{cplx(0.1, 0.2), 0.5, 0.3}, {cplx(-0.3, 0.0), 0.4, -0.2}}, G);
}

}  // namespace

TEST_SUITE("cohomology") {

TEST_CASE("line integral of dh is a difference of potentials") {
  const FuchsianGroup G;
  const InvariantField h = potential(G);
  const OneForm w = OneForm::exact(h);
  for (auto [a, b] : {std::pair{cplx(0.0, 0.0), cplx(0.5, 0.1)}, {cplx(-0.2, 0.3), cplx(0.6, -0.5)}}) {
    CHECK(w.line_integral(a, b) == doctest::Approx(h.value(b) - h.value(a)).epsilon(1e-9));
  }
  for (double p : w.periods(G)) CHECK(std::abs(p) < 1e-9);
}

TEST_CASE("collar forms have an integer period matrix of full rank") {
  auto basis = std::make_shared<const CollarBasis>(std::make_shared<const FuchsianGroup>());
  Eigen::Matrix4d P;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 4> c{0, 0, 0, 0};
    c[static_cast<std::size_t>(k)] = 1.0;
    const auto per = OneForm::closed(basis, c).periods(basis->group());
    for (int j = 0; j < 4; ++j) {
      P(k, j) = per[static_cast<std::size_t>(j)];
      CHECK(std::abs(P(k, j) - std::round(P(k, j))) < 1e-6);
    }
  }
  CHECK(std::abs(P.determinant()) > 0.5);
}

TEST_CASE("closed forms are invariant") {
  auto basis = std::make_shared<const CollarBasis>(std::make_shared<const FuchsianGroup>());
  const OneForm w = OneForm::closed(basis, {1.0, -0.5, 0.25, 0.0});
  const FuchsianGroup& G = basis->group();
  for (cplx z : {cplx(0.1, 0.05), cplx(-0.4, 0.3)}) {
    for (int k = 0; k < 4; ++k) {
      const MobiusMap& g = G.generator(k);
      // Pullback invariance: omega_z(g z) g'(z) = omega_z(z).
      CHECK(std::abs(w.dz(g.apply(z)) * g.derivative(z) - w.dz(z)) < 1e-9);
    }
  }
}

TEST_CASE("closed orbit periods on constant curvature") {
  // The closed orbit of word g winds around the hypercycle of g's axis:
  // period = translation length / sqrt(1 - lambda^2).
  const FuchsianGroup G;
  for (double lambda : {0.0, 0.3, 0.6}) {
    const FlowParams p(lambda, hyperbolic());
    for (const char* w : {"g1", "g1 g2"}) {
      const ClosedOrbit o = find_closed_orbit(p, parse_word(w));
      const double L = G.word_map(parse_word(w)).translation_length();
      CHECK(o.period == doctest::Approx(L / std::sqrt(1 - lambda * lambda)).epsilon(1e-9));
      CHECK(o.closure < 1e-8);
      const OrbitIntegral one = orbit_integral([](const Vec3&) { return 1.0; }, o);
      CHECK(one.value == doctest::Approx(o.period).epsilon(1e-12));
    }
  }
}

TEST_CASE("coboundary recovery on a coarse grid") {
  GridSettings st;
  st.base = 24;
  const auto g = std::make_shared<const SMGrid>(hyperbolic(), st);
  std::mt19937_64 rng(1);
  const SyntheticCoboundary syn = synthesize_coboundary(g, 2, 0.3, rng);
  TransportSettings ts;
  ts.band = 5;
  const TransportSolution sol = solve_transport(syn.f, 0.3, ts);
  CHECK(sol.relative_residual < 0.2);
  CHECK(aligned_distance(sol.g, syn.g_true) < 0.5 * syn.g_true.norm());
  CHECK(sol.tail(3) < 0.5 * syn.g_true.norm());
}

TEST_CASE("support check flags content above the band") {
  GridSettings st;
  st.base = 16;
  const auto g = std::make_shared<const SMGrid>(hyperbolic(), st);
  TransportSolution s;
  s.g = FourierField(g);
  s.band = 4;
  s.g.mode(3).setConstant(0.5);
  s.g.mode(-3).setConstant(0.5);
  s.g.mode(1).setConstant(1.0);
  s.g.mode(-1).setConstant(1.0);
  for (int n = -s.band; n <= s.band; ++n) s.profile.push_back(std::sqrt(s.g.mode_energy(n)));
  const SupportCheck ok = fourier_support_check(s, 4, 1e-3);
  const SupportCheck bad = fourier_support_check(s, 2, 1e-3);
  CHECK(ok.pass);
  CHECK(!bad.pass);
}

TEST_CASE("curvature normalization") {
  const auto [s, shift] = normalize_curvature(preset_surface("perturbed"));
  CHECK(s->curvature_range().second == doctest::Approx(-2.0).epsilon(1e-9));
  const auto [t, zero_shift] = normalize_curvature(SurfaceModel());
  CHECK(t->curvature(0.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(zero_shift == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("gated experiments name the hypothesis") {
  GridPair grids;
  grids.coarse = 16;
  try {
    coboundary_recovery(hyperbolic(), 0.9, 2, grids, 1);
    FAIL("expected a refusal");
  } catch (const HypothesisViolation& e) {
    CHECK(e.hypothesis.find("lambda^2 max(N+1,2) + K(x) < 0") != std::string::npos);
  }
  try {
    theorem_a_experiment(hyperbolic(), std::make_shared<const SurfaceModel>(preset_surface("perturbed")), 0.8);
    FAIL("expected a refusal");
  } catch (const HypothesisViolation& e) {
    CHECK(e.hypothesis == "2 lambda^2 + K(x) < 0 for all x in M");
  }
}

}  // TEST_SUITE
