#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "maglab/fiber_fourier.hpp"
#include "maglab/suites.hpp"

using namespace maglab;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const SMGrid> grid(const std::string& surface, int base = 24) {
  static std::map<std::pair<std::string, int>, std::shared_ptr<const SMGrid>> cache;
  auto& g = cache[{surface, base}];
  if (!g) {
    GridSettings st;
    st.base = base;
    g = std::make_shared<const SMGrid>(std::make_shared<const SurfaceModel>(preset_surface(surface)), st);
  }
  return g;
}

double max_abs(const std::vector<cplx>& a, const FourierField& f, int n) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - f.at(i, n)));
  return m;
}

}  // namespace

TEST_SUITE("fourier") {

TEST_CASE("weights are positive, normalized and integrate the area") {
  for (const char* s : {"constant", "perturbed"}) {
    const auto g = grid(s);
    double total = 0.0;
    for (double w : g->weights()) {
      CHECK(w > 0.0);
      total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g->area() == doctest::Approx(g->surface().area()).epsilon(1e-3));
  }
}

TEST_CASE("lattice quadrature of K converges to Gauss-Bonnet") {
  double err[2];
  for (int k = 0; k < 2; ++k) {
    const auto g = grid("perturbed", 24 << k);
    std::vector<double> K;
    for (std::size_t i = 0; i < g->size(); ++i) K.push_back(g->surface().curvature(g->node(i)));
    err[k] = std::abs(g->integrate(K) + 4 * kPi);
  }
  CHECK(err[0] < 0.05 * 4 * kPi);
  CHECK(err[1] < err[0] / 3);
}

TEST_CASE("ghosts pair the sides") {
  const auto g = grid("constant");
  CHECK(g->ghost_pairing_defect() < 1e-10);
  for (const Ghost& gh : g->ghosts()) {
    CHECK(FuchsianGroup::contains(gh.reduced, 1e-9));
    CHECK(!FuchsianGroup::contains(gh.point, -1e-12));
  }
}

TEST_CASE("fiber transform is a Parseval isometry") {
  const auto g = grid("constant");
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  RMatrix s(static_cast<Eigen::Index>(g->size()), g->fiber());
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = n01(rng);
  }
  const Projection p = project_modes(g, s);
  const CMatrix back = synthesize(p.field);
  CHECK((back.real() - s).cwiseAbs().maxCoeff() < 1e-12);
  double mean_square = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    mean_square += g->weight(static_cast<std::size_t>(i)) * s.row(i).squaredNorm() / s.cols();
  }
  CHECK(p.field.norm() * p.field.norm() == doctest::Approx(mean_square).epsilon(1e-12));
  CHECK(p.field.reality_defect() < 1e-12);
}

TEST_CASE("single Fourier modes of trigonometric samples") {
  const auto g = grid("constant");
  const RMatrix s = sample_function(*g, [](const Vec3& x) { return 2.0 * std::cos(3 * x[2]) + x[0]; });
  const Projection p = project_modes(g, s);
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(std::abs(p.field.at(i, 3) - 1.0) < 1e-12);
    CHECK(std::abs(p.field.at(i, -3) - 1.0) < 1e-12);
    CHECK(std::abs(p.field.at(i, 0) - g->node(i).real()) < 1e-12);
    CHECK(std::abs(p.field.at(i, 1)) < 1e-12);
  }
}

TEST_CASE("eta operators match exact jets and converge") {
  std::mt19937_64 rng(3);
  for (const char* s : {"constant", "perturbed"}) {
    const auto coarse = grid(s, 24), fine = grid(s, 48);
    const ModeFieldSpec spec = random_mode_spec(coarse->surface(), rng);
    for (int n : {0, 2}) {
      const double ec = max_abs(exact_eta_plus(*coarse, n, spec), apply_eta_plus(single_mode_field(coarse, n, spec)), n + 1);
      const double ef = max_abs(exact_eta_plus(*fine, n, spec), apply_eta_plus(single_mode_field(fine, n, spec)), n + 1);
      CHECK(ef < ec);
      CHECK(ef < 0.1);
    }
  }
}

TEST_CASE("mode locality of the frame derivation") {
  std::mt19937_64 rng(5);
  const auto g = grid("perturbed");
  const ModeFieldSpec spec = random_mode_spec(g->surface(), rng);
  for (int n : {-2, 0, 1, 3}) CHECK(mode_locality_residual(single_mode_field(g, n, spec), n) < 1e-12);
}

TEST_CASE("X_lambda through eta agrees with the direct frame path") {
  std::mt19937_64 rng(7);
  const auto g = grid("magnetic");
  const FourierField f = random_band_field(g, 4, rng);
  for (double lambda : {0.0, 0.3}) {
    const auto r = mode_transport_residual(f, lambda);
    for (double v : r) CHECK(v < 1e-10);
  }
}

TEST_CASE("energy identity on constant curvature holds with slack") {
  // ||eta+ f||^2 - ||eta- f||^2 = -(K/2) n ||f||^2 on K = -1 up to discretization.
  std::mt19937_64 rng(9);
  const auto g = grid("constant");
  for (int n = 0; n <= 4; ++n) {
    const FourierField f = single_mode_field(g, n, random_mode_spec(g->surface(), rng));
    const EnergySlack e = energy_inequality_check(f, n, 0.5);
    CHECK(e.slack >= -0.05 * (e.plus + e.minus + e.norm2));
  }
}

TEST_CASE("refinement tolerance formula") {
  CHECK(refinement_tolerance(0.3, 0.1) == doctest::Approx(2.0 * 4.0 / 3.0 * 0.2));
  CHECK(refinement_tolerance(0.1, 0.3) == doctest::Approx(2.0 * 4.0 / 3.0 * 0.2));
}

TEST_CASE("band overflow is reported") {
  const auto g = grid("constant");
  FourierField f(g);
  f.mode(g->max_mode()).setOnes();
  CHECK_THROWS_AS(apply_eta_plus(f), BandOverflow);
}

}  // TEST_SUITE
