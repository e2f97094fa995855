#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "maglab/errors.hpp"
#include "maglab/surface.hpp"

using namespace maglab;

namespace {

constexpr double kPi = std::numbers::pi;

cplx random_disk_point(std::mt19937_64& rng, double rmax = 0.9) {
  std::uniform_real_distribution<double> r(0.0, rmax), a(0.0, 2 * kPi);
  return std::polar(r(rng), a(rng));
}

MobiusMap random_map(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 2.0), a(0.0, 2 * kPi);
  return MobiusMap::translation(d(rng), a(rng)) * MobiusMap::rotation(a(rng));
}

// Central differences of the conformal exponent, independent of the jets.
double fd_curvature(const SurfaceModel& s, cplx z, double h = 1e-4) {
  auto P = [&](double dx, double dy) { return s.conformal_jet(z + cplx(dx, dy)).value; };
  const double lap = (P(h, 0) + P(-h, 0) + P(0, h) + P(0, -h) - 4 * P(0, 0)) / (h * h);
  return -std::exp(-2 * P(0, 0)) * lap;
}

SurfaceModel bumpy() {
  return SurfaceModel::from_json(
      {{"phi", {{"bumps", {{{"center", {0.2, -0.1}}, {"width", 0.4}, {"amplitude", 0.08}}}}}},
       {"magnetic", {{"constant", 1.0}, {"bumps", {{{"center", {-0.3, 0.2}}, {"width", 0.5}, {"amplitude", 0.2}}}}}}});
}

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("mobius maps preserve hyperbolic distance") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const MobiusMap g = random_map(rng);
    const cplx z = random_disk_point(rng), w = random_disk_point(rng);
    CHECK(std::abs(g.determinant_defect()) < 1e-12);
    const double d = hyperbolic_distance(z, w);
    CHECK(hyperbolic_distance(g.apply(z), g.apply(w)) == doctest::Approx(d).epsilon(1e-9));
    CHECK(std::abs(g.inverse().apply(g.apply(z)) - z) < 1e-12);
  }
}

TEST_CASE("origin distance has the closed form 2 atanh r") {
  for (double r : {0.0, 0.1, 0.5, 0.9, 0.99}) {
    CHECK(hyperbolic_distance(r, 0.0) == doctest::Approx(2.0 * std::atanh(r)).epsilon(1e-12));
  }
}

TEST_CASE("composition agrees with successive application") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 50; ++k) {
    const MobiusMap f = random_map(rng), g = random_map(rng);
    const cplx z = random_disk_point(rng);
    CHECK(std::abs((f * g).apply(z) - f.apply(g.apply(z))) < 1e-10);
    const double h = 1e-6;
    const cplx fd = (f.apply(z + h) - f.apply(z - h)) / (2 * h);
    CHECK(std::abs(f.derivative(z) - fd) < 1e-6 * std::abs(fd));
  }
}

TEST_CASE("points on or outside the boundary are rejected") {
  CHECK_THROWS_AS(DiskPoint(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(DiskPoint(0.8, 0.8), DomainError);
}

TEST_CASE("octagon group: relator and side pairing") {
  const FuchsianGroup G;
  CHECK(G.relator_product().distance_to_identity() < 1e-9);
  for (int k = 0; k < 4; ++k) {
    const cplx m = G.generator(k).apply(FuchsianGroup::side_midpoint(k + 4));
    CHECK(std::abs(m - FuchsianGroup::side_midpoint(k)) < 1e-10);
  }
  // Regular octagon with angles pi/4: cosh(circumradius) = cot^2(pi/8).
  const double cot = 1.0 / std::tan(kPi / 8);
  CHECK(std::cosh(FuchsianGroup::circumradius()) == doctest::Approx(cot * cot).epsilon(1e-12));
}

TEST_CASE("reduction lands in the octagon and its word undoes it") {
  const FuchsianGroup G;
  std::mt19937_64 rng(7);
  for (int k = 0; k < 300; ++k) {
    const cplx z = random_disk_point(rng, 0.97);
    const Reduction r = G.reduce(z, 16);
    CHECK(FuchsianGroup::contains(r.point, 1e-9));
    CHECK(std::abs(r.map.apply(r.point) - z) < 1e-8);
    CHECK(G.word_map(r.word).distance_to_identity() == doctest::Approx(r.map.distance_to_identity()).epsilon(1e-6));
  }
}

TEST_CASE("word parsing round trip") {
  const Word w = parse_word("g1 G2 g3 G4");
  CHECK(w.size() == 4);
  CHECK(w[1].inverse);
  CHECK(to_string(w) == "g1 G2 g3 G4");
  CHECK(parse_word("").empty());
  const FuchsianGroup G;
  CHECK((G.word_map(w) * G.word_map(inverse_word(w))).distance_to_identity() < 1e-9);
}

TEST_CASE("hyperbolic model has K = -1 and area 4 pi") {
  const SurfaceModel s;
  CHECK(s.area() == doctest::Approx(4 * kPi).epsilon(1e-8));
  CHECK(s.cohomology_constant() == doctest::Approx(-1.0));
  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const cplx z = random_disk_point(rng, 0.5);
    CHECK(s.curvature(z) == doctest::Approx(-1.0).epsilon(1e-10));
  }
}

TEST_CASE("curvature of a perturbed metric matches finite differences") {
  const SurfaceModel s = bumpy();
  std::mt19937_64 rng(11);
  for (int k = 0; k < 40; ++k) {
    const cplx z = random_disk_point(rng, 0.6);
    CHECK(s.curvature(z) == doctest::Approx(fd_curvature(s, z)).epsilon(1e-5));
  }
}

TEST_CASE("Christoffel symbols of a conformal metric") {
  const SurfaceModel s = bumpy();
  std::mt19937_64 rng(13);
  for (int k = 0; k < 20; ++k) {
    const cplx z = random_disk_point(rng, 0.6);
    const double h = 1e-5;
    const double px = (s.conformal_jet(z + h).value - s.conformal_jet(z - h).value) / (2 * h);
    const double py =
        (s.conformal_jet(z + cplx(0, h)).value - s.conformal_jet(z - cplx(0, h)).value) / (2 * h);
    const Christoffel G = christoffel_at(s, DiskPoint(z));
    // Gamma^x_xx = Phi_x, Gamma^x_yy = -Phi_x, Gamma^x_xy = Phi_y, and symmetrically.
    CHECK(G.gamma[0][0][0] == doctest::Approx(px).epsilon(1e-6));
    CHECK(G.gamma[0][1][1] == doctest::Approx(-px).epsilon(1e-6));
    CHECK(G.gamma[0][0][1] == doctest::Approx(py).epsilon(1e-6));
    CHECK(G.gamma[1][1][1] == doctest::Approx(py).epsilon(1e-6));
    CHECK(G.gamma[1][0][0] == doctest::Approx(-py).epsilon(1e-6));
    CHECK(G.gamma[1][0][1] == doctest::Approx(px).epsilon(1e-6));
  }
}

TEST_CASE("invariant fields are group invariant") {
  const SurfaceModel s = bumpy();
  std::mt19937_64 rng(17);
  for (int k = 0; k < 40; ++k) {
    const cplx z = random_disk_point(rng, 0.6);
    for (int g = 0; g < 4; ++g) {
      const cplx w = s.group().generator(g).apply(z);
      CHECK(s.curvature(w) == doctest::Approx(s.curvature(z)).epsilon(1e-8));
      CHECK(s.magnetic_density(w) == doctest::Approx(s.magnetic_density(z)).epsilon(1e-10));
    }
  }
}

TEST_CASE("Gauss-Bonnet on a perturbed surface") {
  const SurfaceModel s = bumpy();
  const double total = s.integrate([&](cplx z) { return s.curvature(z); });
  CHECK(total == doctest::Approx(-4 * kPi).epsilon(1e-7));
  // Omega = F dA = c K dA + d theta integrates to c times -4 pi.
  CHECK(s.cohomology_constant() ==
        doctest::Approx(s.integrate([&](cplx z) { return s.magnetic_density(z); }) / (-4 * kPi)).epsilon(1e-8));
}

TEST_CASE("surface JSON round trip") {
  const SurfaceModel s = bumpy();
  const SurfaceModel t = SurfaceModel::from_json(s.to_json());
  for (cplx z : {cplx(0.1, 0.2), cplx(-0.3, 0.05)}) {
    CHECK(t.curvature(z) == doctest::Approx(s.curvature(z)).epsilon(1e-14));
    CHECK(t.magnetic_density(z) == doctest::Approx(s.magnetic_density(z)).epsilon(1e-14));
  }
}

}  // TEST_SUITE
