#include "maglab/cohomology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/CholmodSupport>
#include <boost/math/quadrature/gauss.hpp>

namespace maglab {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

double bump_profile(double t) { return std::abs(t) < 1.0 ? std::exp(-1.0 / (1.0 - t * t)) : 0.0; }

template <class F>
double composite_gauss(F&& f, double a, double b, int panels) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  double acc = 0.0;
  const double step = (b - a) / panels;
  for (int k = 0; k < panels; ++k) acc += Rule::integrate(f, a + k * step, a + (k + 1) * step);
  return acc;
}

double max_curvature(const SurfaceModel& s) { return s.curvature_range().second; }

}  // namespace

// ---------------------------------------------------------------- collar forms

CollarBasis::CollarBasis(std::shared_ptr<const FuchsianGroup> group, double width)
    : group_(std::move(group)), width_(width) {
  if (!group_) throw DomainError("collar forms need a group");
  if (!(width_ > 0.0 && width_ < 0.44)) throw DomainError("collar width must lie in (0, 0.44)");
  bump_norm_ = composite_gauss(bump_profile, -1.0, 1.0, 16);
  const double reach = FuchsianGroup::circumradius() + width_;
  const auto elements = group_->elements_within(reach + FuchsianGroup::inradius() + 0.2, 16);
  for (int k = 0; k < FuchsianGroup::kGenerators; ++k) {
    const Axis ax = hyperbolic_axis(group_->generator(k));
    std::map<std::array<long long, 4>, bool> seen;
    auto& out = lifts_[static_cast<std::size_t>(k)];
    for (const auto& g : elements) {
      cplx p = g.apply(ax.repelling), q = g.apply(ax.attracting);
      p /= std::abs(p);
      q /= std::abs(q);
      const std::array<long long, 4> key{std::llround(p.real() * 1e7), std::llround(p.imag() * 1e7),
                                         std::llround(q.real() * 1e7), std::llround(q.imag() * 1e7)};
      if (!seen.emplace(key, true).second) continue;
      Lift l;
      const cplx sum = p + q;
      if (std::abs(sum) < 1e-12) {
        l.center = 0.0;
        l.direction = q;
      } else {
        const cplx u = sum / std::abs(sum);
        const double half = 0.5 * std::abs(std::arg(q / p));
        l.center = u * (1.0 - std::sin(half)) / std::cos(half);
        const cplx t = kI * u;
        l.direction = (std::conj(t) * (q - p)).real() > 0.0 ? t : -t;
      }
      if (2.0 * std::atanh(std::abs(l.center)) <= reach + 0.05) out.push_back(l);
    }
  }
}

cplx CollarBasis::dz_near(int k, cplx z) const {
  cplx acc = 0.0;
  for (const Lift& l : lifts_[static_cast<std::size_t>(k)]) {
    const cplx den = 1.0 - std::conj(l.center) * z;
    const cplx w = std::conj(l.direction) * (z - l.center) / den;
    const double q = 1.0 - std::norm(w);
    const double s = 2.0 * w.imag() / q;
    const double d = std::asinh(s);
    if (std::abs(d) >= width_) continue;
    const cplx ds_dw = -kI * (1.0 - std::conj(w) * std::conj(w)) / (q * q);
    const cplx dw_dz = std::conj(l.direction) * (1.0 - std::norm(l.center)) / (den * den);
    const double b = bump_profile(d / width_) / (width_ * bump_norm_);
    acc += b * ds_dw * dw_dz / std::sqrt(1.0 + s * s);
  }
  return acc;
}

cplx CollarBasis::dz(int k, cplx z) const {
  if (k < 0 || k >= FuchsianGroup::kGenerators) throw DomainError("collar form index out of range");
  if (hyperbolic_distance(z, 0.0) <= FuchsianGroup::circumradius()) return dz_near(k, z);
  const Reduction r = group_->reduce(z, 32);
  return dz_near(k, r.point) / r.map.derivative(r.point);
}

// ---------------------------------------------------------------- one-forms

OneForm OneForm::exact(InvariantField potential) {
  OneForm f;
  f.potential_ = std::move(potential);
  return f;
}

OneForm OneForm::closed(std::shared_ptr<const CollarBasis> basis, const std::array<double, 4>& coefficients) {
  if (!basis) throw DomainError("closed form needs a collar basis");
  OneForm f;
  f.basis_ = std::move(basis);
  f.harmonic_ = coefficients;
  return f;
}

OneForm& OneForm::operator+=(const OneForm& o) {
  if (o.potential_) {
    if (potential_) throw DomainError("one-form already carries an exact part");
    potential_ = o.potential_;
  }
  if (o.basis_) {
    if (basis_ && basis_ != o.basis_) throw DomainError("one-forms use different collar bases");
    basis_ = o.basis_;
    for (std::size_t k = 0; k < 4; ++k) harmonic_[k] += o.harmonic_[k];
  }
  return *this;
}

bool OneForm::is_exact() const {
  return std::all_of(harmonic_.begin(), harmonic_.end(), [](double a) { return a == 0.0; });
}

cplx OneForm::dz(cplx z) const {
  cplx acc = 0.0;
  if (potential_) {
    const ScalarJet j = potential_->jet(z);
    acc += 0.5 * cplx(j.grad[0], -j.grad[1]);
  }
  if (basis_) {
    for (int k = 0; k < 4; ++k) {
      if (harmonic_[static_cast<std::size_t>(k)] != 0.0) acc += harmonic_[static_cast<std::size_t>(k)] * basis_->dz(k, z);
    }
  }
  return acc;
}

double OneForm::on(const SurfaceModel& surface, const Vec3& state) const {
  const cplx z(state[0], state[1]);
  return 2.0 * (dz(z) * std::polar(1.0 / surface.conformal_factor(z), state[2])).real();
}

FourierField OneForm::restriction(std::shared_ptr<const SMGrid> grid) const {
  FourierField f(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const cplx v = grid->inv_factor(i) * dz(grid->node(i));
    f.coeffs()(static_cast<Eigen::Index>(i), grid->column(1)) = v;
    f.coeffs()(static_cast<Eigen::Index>(i), grid->column(-1)) = std::conj(v);
  }
  return f;
}

double OneForm::line_integral(cplx a, cplx b, int panels) const {
  const MobiusMap M = MobiusMap::moving_origin_to(a);
  const cplx e = M.inverse().apply(b);
  const double len = hyperbolic_distance(e, 0.0);
  if (len == 0.0) return 0.0;
  const cplx u = e / std::abs(e);
  // Arclength parametrization of the diameter through e.
  auto integrand = [&](double s) {
    const double t = std::tanh(0.5 * s);
    const cplx w = t * u;
    return 2.0 * (dz(M.apply(w)) * M.derivative(w) * (0.5 * (1.0 - t * t)) * u).real();
  };
  return composite_gauss(integrand, 0.0, len, panels);
}

std::array<double, 4> OneForm::periods(const FuchsianGroup& group, cplx base) const {
  std::array<double, 4> out{};
  for (int k = 0; k < 4; ++k) out[static_cast<std::size_t>(k)] = line_integral(base, group.generator(k).apply(base));
  return out;
}

// ---------------------------------------------------------------- transport solver

double TransportSolution::mode_norm(int n) const {
  if (std::abs(n) > band) return 0.0;
  return profile[static_cast<std::size_t>(n + band)];
}

double TransportSolution::tail(int N) const {
  double acc = 0.0;
  for (int n = -band; n <= band; ++n) {
    if (std::abs(n) >= N) acc += mode_norm(n) * mode_norm(n);
  }
  return std::sqrt(acc);
}

TransportSolution solve_transport(const FourierField& f, double lambda, const TransportSettings& st) {
  const auto gp = f.grid_ptr();
  const SMGrid& grid = *gp;
  const int B = st.band;
  if (B < 0 || B + 1 > grid.max_mode()) throw DomainError("transport band does not fit the fiber resolution");
  for (int n = grid.min_mode(); n <= grid.max_mode(); ++n) {
    if (std::abs(n) > B + 1 && f.mode_energy(n) > 0.0) {
      throw DomainError("right-hand side has content beyond the transport band");
    }
  }
  const auto nodes = static_cast<Eigen::Index>(grid.size());
  const Eigen::Index unknowns = (2 * B + 1) * nodes;
  const Eigen::Index rows = (2 * B + 3) * nodes;
  auto col = [&](int n, std::size_t i) { return (n + B) * nodes + static_cast<Eigen::Index>(i); };
  auto row = [&](int m, std::size_t i) { return (m + B + 1) * nodes + static_cast<Eigen::Index>(i); };

  std::vector<Eigen::Triplet<cplx>> trip;
  const double inv = 0.5 / grid.spacing();
  for (int n = -B; n <= B; ++n) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double sw = std::sqrt(grid.weight(i));
      const double e = grid.inv_factor(i);
      const cplx dP = grid.dPhi(i);
      // Centered differences: d = (Dx - i Dy)/2, dbar = (Dx + i Dy)/2.
      const cplx cx[4] = {inv, -inv, 0.0, 0.0};
      const cplx cy[4] = {0.0, 0.0, inv, -inv};
      for (int dir = 0; dir < 4; ++dir) {
        const auto w = neighbor_weights(grid, grid.neighbor(i, dir), n);
        const cplx dplus = 0.5 * (cx[dir] - kI * cy[dir]);
        const cplx dminus = 0.5 * (cx[dir] + kI * cy[dir]);
        for (const auto& [k, a] : w) {
          const auto c = col(n, static_cast<std::size_t>(k));
          trip.emplace_back(row(n + 1, i), c, sw * e * dplus * a);
          trip.emplace_back(row(n - 1, i), c, sw * e * dminus * a);
        }
      }
      const auto c = col(n, i);
      trip.emplace_back(row(n + 1, i), c, -sw * e * double(n) * dP);
      trip.emplace_back(row(n - 1, i), c, sw * e * double(n) * std::conj(dP));
      if (n != 0) trip.emplace_back(row(n, i), c, sw * kI * double(n) * lambda * grid.magnetic(i));
    }
  }
  Eigen::SparseMatrix<cplx> A(rows, unknowns);
  A.setFromTriplets(trip.begin(), trip.end());

  Eigen::VectorXcd rhs(rows);
  for (int m = -B - 1; m <= B + 1; ++m) {
    for (std::size_t i = 0; i < grid.size(); ++i) rhs[row(m, i)] = std::sqrt(grid.weight(i)) * f.at(i, m);
  }

  Eigen::SparseMatrix<cplx> M = A.adjoint() * A;
  double diag = 0.0;
  for (Eigen::Index k = 0; k < M.rows(); ++k) diag += std::abs(M.coeff(k, k));
  const double shift = st.regularization * diag / static_cast<double>(M.rows());
  for (Eigen::Index k = 0; k < M.rows(); ++k) M.coeffRef(k, k) += shift;
  M.makeCompressed();
  const Eigen::VectorXcd b = A.adjoint() * rhs;

  Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<cplx>> solver;
  solver.compute(M);
  if (solver.info() != Eigen::Success) throw ConvergenceError("transport normal equations could not be factored", {});
  Eigen::VectorXcd x = Eigen::VectorXcd::Zero(unknowns);
  TransportSolution out;
  const double bnorm = std::max(b.norm(), 1e-300);
  for (int sweep = 0; sweep < st.refinement_sweeps; ++sweep) {
    const Eigen::VectorXcd r = b - M * x;
    const double rel = r.norm() / bnorm;
    out.residual_history.push_back(rel);
    if (rel < st.solver_tolerance) break;
    x += solver.solve(r);
    ++out.iterations;
  }
  const double final_rel = (b - M * x).norm() / bnorm;
  out.residual_history.push_back(final_rel);
  if (!(final_rel < st.solver_tolerance)) {
    throw ConvergenceError("transport solve stagnated", out.residual_history);
  }

  out.band = B;
  out.g = FourierField(gp);
  for (int n = -B; n <= B; ++n) {
    for (std::size_t i = 0; i < grid.size(); ++i) out.g.coeffs()(static_cast<Eigen::Index>(i), grid.column(n)) = x[col(n, i)];
  }
  // Constants are exact null vectors of the discrete operator: remove them.
  cplx mean = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) mean += grid.weight(i) * out.g.at(i, 0);
  out.g.mode(0).array() -= mean;
  mean = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) mean += grid.weight(i) * out.g.at(i, 0);
  out.mean = std::abs(mean);

  const FourierField res = apply_X_lambda(out.g, lambda) - f;
  out.residual = res.norm();
  out.relative_residual = out.residual / std::max(f.norm(), 1e-300);
  for (int n = -B; n <= B; ++n) out.profile.push_back(std::sqrt(out.g.mode_energy(n)));
  for (int m = -B - 1; m <= B + 1; ++m) out.residual_profile.push_back(std::sqrt(res.mode_energy(m)));
  return out;
}

SupportCheck fourier_support_check(const TransportSolution& sol, int N, double tau_solve, double c_decay) {
  SupportCheck out;
  out.N = N;
  const double mesh = sol.g.grid().spacing();
  out.bound = std::max(tau_solve, c_decay * sol.g.norm() * mesh * mesh);
  out.profile = sol.profile;
  for (int n = -sol.band; n <= sol.band; ++n) {
    if (std::abs(n) >= N && sol.mode_norm(n) > out.bound) out.offending.push_back(n);
  }
  out.pass = out.offending.empty();
  return out;
}

double aligned_distance(const FourierField& a, const FourierField& b) {
  FourierField d = a - b;
  cplx mean = 0.0;
  for (std::size_t i = 0; i < d.grid().size(); ++i) mean += d.grid().weight(i) * d.at(i, 0);
  d.mode(0).array() -= mean;
  return d.norm();
}

// ---------------------------------------------------------------- synthetic coboundaries

namespace {

// Mode n of X_lambda applied to c u_k e^{ik theta} at z (k may be negative).
void add_transport(const SurfaceModel& s, cplx z, int k, cplx c, const ModeFieldSpec& spec, double lambda,
                   std::map<int, cplx>& modes) {
  const ModeJet j = mode_jet(s, z, k, spec);
  const ScalarJet P = s.conformal_jet(z);
  const cplx dP = 0.5 * cplx(P.grad[0], -P.grad[1]);
  const double e = std::exp(-P.value);
  modes[k + 1] += c * e * (j.du - double(k) * j.u * dP);
  modes[k - 1] += c * e * (j.dbu + double(k) * j.u * std::conj(dP));
  modes[k] += c * kI * double(k) * lambda * s.magnetic_density(z) * j.u;
}

double mode_mean_square(const SurfaceModel& s, int n, const ModeFieldSpec& spec) {
  return s.integrate([&](cplx z) { return std::norm(mode_jet(s, z, n, spec).u); }) / s.area();
}

}  // namespace

double SyntheticCoboundary::evaluate(const SurfaceModel& surface, const Vec3& state) const {
  const cplx z(state[0], state[1]);
  std::map<int, cplx> modes;
  for (int n = 0; n <= band; ++n) {
    const auto& spec = specs[static_cast<std::size_t>(n)];
    add_transport(surface, z, n, coefficients[static_cast<std::size_t>(n)], spec, lambda, modes);
    if (n > 0) add_transport(surface, z, -n, std::conj(coefficients[static_cast<std::size_t>(n)]), spec, lambda, modes);
  }
  double acc = 0.0;
  for (const auto& [m, v] : modes) acc += (v * std::polar(1.0, m * state[2])).real();
  return acc;
}

SyntheticCoboundary synthesize_coboundary(std::shared_ptr<const SMGrid> grid, int band, double lambda,
                                          std::mt19937_64& rng) {
  if (band + 1 > grid->max_mode()) throw DomainError("band too wide for the fiber resolution");
  const SurfaceModel& s = grid->surface();
  SyntheticCoboundary out;
  out.band = band;
  out.lambda = lambda;
  std::normal_distribution<double> N01(0.0, 1.0);
  for (int n = 0; n <= band; ++n) {
    ModeFieldSpec spec = random_mode_spec(s, rng);
    const cplx c(N01(rng), n == 0 ? 0.0 : N01(rng));
    const double scale = std::sqrt(mode_mean_square(s, n, spec));
    out.coefficients.push_back(scale > 0.0 ? c / scale : c);
    out.specs.push_back(std::move(spec));
  }
  out.g_true = FourierField(grid);
  out.f = FourierField(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const cplx z = grid->node(i);
    std::map<int, cplx> modes;
    for (int n = 0; n <= band; ++n) {
      const auto& spec = out.specs[static_cast<std::size_t>(n)];
      const cplx c = out.coefficients[static_cast<std::size_t>(n)];
      out.g_true.coeffs()(r, grid->column(n)) += c * mode_jet(s, z, n, spec).u;
      add_transport(s, z, n, c, spec, lambda, modes);
      if (n > 0) {
        out.g_true.coeffs()(r, grid->column(-n)) += std::conj(c) * mode_jet(s, z, -n, spec).u;
        add_transport(s, z, -n, std::conj(c), spec, lambda, modes);
      }
    }
    for (const auto& [m, v] : modes) out.f.coeffs()(r, grid->column(m)) += v;
  }
  return out;
}

// ---------------------------------------------------------------- recovery experiments

namespace {

std::shared_ptr<const SMGrid> make_grid(std::shared_ptr<const SurfaceModel> s, int base, int fiber) {
  GridSettings gs;
  gs.base = base;
  gs.fiber = fiber;
  return std::make_shared<const SMGrid>(std::move(s), gs);
}

double order_of(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::infinity();
  return std::log2(coarse / fine);
}

nlohmann::json vec_json(const std::vector<double>& v) { return nlohmann::json(v); }

}  // namespace

bool RecoveryReport::pass() const {
  bool orbits = true;
  for (std::size_t k = 0; k < orbit_integrals.size(); ++k) {
    orbits = orbits && std::abs(orbit_integrals[k]) <= std::max(10.0 * orbit_errors[k], 1e-6);
  }
  return margin < 0.0 && tail_below_tau && tail_order >= 1.5 && support.pass && recurrence_ok &&
         recurrence[0].violations.empty() && recurrence[1].violations.empty() && orbits;
}

nlohmann::json RecoveryReport::to_json() const {
  nlohmann::json j;
  j["lambda"] = lambda;
  j["N"] = N;
  j["margin"] = margin;
  for (const auto& r : runs) {
    j["runs"].push_back({{"base", r.base}, {"error", r.error}, {"tail", r.tail}, {"residual", r.residual},
                         {"profile", vec_json(r.profile)}});
  }
  j["tau_solve"] = tau_solve;
  j["tail_order"] = tail_order;
  j["tail_below_tau"] = tail_below_tau;
  j["support"] = {{"pass", support.pass}, {"bound", support.bound}, {"offending", support.offending}};
  j["recurrence"] = {{"ok", recurrence_ok}, {"error", recurrence_error}, {"tau_ineq", tau_ineq}};
  for (const auto& r : recurrence) {
    j["recurrence"]["runs"].push_back({{"mode_equation_residual", r.mode_equation_residual},
                                       {"n", r.n},
                                       {"b", vec_json(r.b)},
                                       {"slack", vec_json(r.slack)},
                                       {"violations", r.violations}});
  }
  j["orbit_integrals"] = vec_json(orbit_integrals);
  j["orbit_errors"] = vec_json(orbit_errors);
  j["pass"] = pass();
  return j;
}

RecoveryReport coboundary_recovery(std::shared_ptr<const SurfaceModel> surface, double lambda, int g_band,
                                   const GridPair& grids, std::uint64_t seed, const std::vector<Word>& words) {
  RecoveryReport rep;
  rep.lambda = lambda;
  rep.N = g_band + 1;
  const double kmax = max_curvature(*surface);
  rep.margin = lambda * lambda * std::max(rep.N + 1, 2) + kmax;
  if (!(rep.margin < 0.0)) {
    throw HypothesisViolation("lambda^2 max(N+1,2) + K(x) < 0 for all x in M",
                              "margin " + std::to_string(rep.margin));
  }
  TransportSettings ts;
  ts.band = rep.N + 3;
  std::array<TransportSolution, 2> sols;
  std::array<std::shared_ptr<const SMGrid>, 2> grid_of;
  SyntheticCoboundary coarse_syn;
  for (int k = 0; k < 2; ++k) {
    const int base = grids.coarse << k;
    grid_of[static_cast<std::size_t>(k)] = make_grid(surface, base, grids.fiber);
    std::mt19937_64 rng(seed);
    SyntheticCoboundary syn = synthesize_coboundary(grid_of[static_cast<std::size_t>(k)], g_band, lambda, rng);
    sols[static_cast<std::size_t>(k)] = solve_transport(syn.f, lambda, ts);
    const auto& sol = sols[static_cast<std::size_t>(k)];
    RecoveryRun& run = rep.runs[static_cast<std::size_t>(k)];
    run.base = base;
    run.error = aligned_distance(sol.g, syn.g_true);
    run.tail = sol.tail(rep.N);
    run.residual = sol.residual;
    run.profile = sol.profile;
    if (k == 0) coarse_syn = std::move(syn);
  }
  // Second-order Richardson bound on the fine error, with a factor 2 of safety.
  rep.tau_solve = 2.0 * std::abs(rep.runs[0].error - rep.runs[1].error) / 3.0;
  rep.tail_order = order_of(rep.runs[0].tail, rep.runs[1].tail);
  rep.tail_below_tau = rep.runs[1].tail < rep.tau_solve;
  rep.support = fourier_support_check(sols[1], rep.N, rep.tau_solve);

  if (surface->constant_magnetic()) {
    const double A = -kmax / 2.0;
    try {
      const double inf = std::numeric_limits<double>::infinity();
      std::array<double, 2> tol{};
      std::array<double, 2> worst{};
      for (std::size_t k = 0; k < 2; ++k) {
        tol[k] = std::max(rep.tau_solve, 10.0 * sols[k].residual);
        const RecurrenceReport probe = recurrence_diagnostics(sols[k].g, rep.N, lambda, A, inf, tol[k]);
        worst[k] = probe.slack.empty() ? 0.0 : *std::min_element(probe.slack.begin(), probe.slack.end());
      }
      rep.tau_ineq = std::max(refinement_tolerance(worst[0], worst[1]), 1e-14);
      for (std::size_t k = 0; k < 2; ++k) {
        rep.recurrence[k] = recurrence_diagnostics(sols[k].g, rep.N, lambda, A, rep.tau_ineq, tol[k]);
      }
      rep.recurrence_ok = true;
    } catch (const HypothesisViolation& e) {
      rep.recurrence_error = e.what();
    }
  } else {
    rep.recurrence_error = "recurrence diagnostics need a constant magnetic density";
  }

  if (!words.empty()) {
    FlowParams params(lambda, surface);
    for (const Word& w : words) {
      const ClosedOrbit orbit = find_closed_orbit(params, w);
      const OrbitIntegral oi =
          orbit_integral([&](const Vec3& s) { return coarse_syn.evaluate(*surface, s); }, orbit);
      rep.orbit_integrals.push_back(oi.value);
      rep.orbit_errors.push_back(oi.error);
    }
  }
  return rep;
}

bool ExactFormReport::pass() const {
  const bool periods_zero =
      std::all_of(periods.begin(), periods.end(), [](double p) { return std::abs(p) < 1e-8; });
  return off_zero[0] < tau_solve && off_zero[1] < off_zero[0] && potential_error[1] < potential_error[0] && periods_zero;
}

nlohmann::json ExactFormReport::to_json() const {
  return {{"lambda", lambda},         {"off_zero", off_zero}, {"potential_error", potential_error},
          {"residual", residual},     {"tau_solve", tau_solve}, {"periods", periods},
          {"pass", pass()}};
}

ExactFormReport exact_form_recovery(std::shared_ptr<const SurfaceModel> surface, double lambda, const GridPair& grids,
                                    std::uint64_t seed) {
  ExactFormReport rep;
  rep.lambda = lambda;
  std::mt19937_64 rng(seed);
  const ModeFieldSpec spec = random_mode_spec(*surface, rng);
  const OneForm omega = OneForm::exact(spec.h);
  rep.periods = omega.periods(surface->group());
  TransportSettings ts;
  ts.band = 4;
  for (int k = 0; k < 2; ++k) {
    const auto grid = make_grid(surface, grids.coarse << k, grids.fiber);
    const TransportSolution sol = solve_transport(omega.restriction(grid), lambda, ts);
    double off = 0.0;
    for (int n = -sol.band; n <= sol.band; ++n) {
      if (n != 0) off += sol.mode_norm(n) * sol.mode_norm(n);
    }
    FourierField h(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) {
      h.coeffs()(static_cast<Eigen::Index>(i), grid->column(0)) = spec.h.value(grid->node(i));
    }
    rep.off_zero[static_cast<std::size_t>(k)] = std::sqrt(off);
    rep.potential_error[static_cast<std::size_t>(k)] = aligned_distance(sol.g, h);
    rep.residual[static_cast<std::size_t>(k)] = sol.residual;
  }
  rep.tau_solve = refinement_tolerance(rep.potential_error[0], rep.potential_error[1]);
  return rep;
}

bool ClosedFormReport::pass() const {
  return floor_change < 0.2 && floor[1] > 10.0 * exact_floor[1] && floor[0] > 0.0;
}

nlohmann::json ClosedFormReport::to_json() const {
  return {{"lambda", lambda},           {"band", band}, {"coefficients", coefficients}, {"periods", periods},
          {"floor", floor},             {"floor_change", floor_change}, {"exact_floor", exact_floor},
          {"pass", pass()}};
}

ClosedFormReport closed_form_floor(std::shared_ptr<const SurfaceModel> surface, double lambda, const GridPair& grids,
                                   int band) {
  ClosedFormReport rep;
  rep.lambda = lambda;
  rep.band = band;
  rep.coefficients = {1.0, -0.5, 0.25, 0.0};
  const auto basis = std::make_shared<const CollarBasis>(surface->group_ptr());
  const OneForm omega = OneForm::closed(basis, rep.coefficients);
  rep.periods = omega.periods(surface->group());
  std::mt19937_64 rng(11);
  const OneForm control = OneForm::exact(random_mode_spec(*surface, rng).h);
  TransportSettings ts;
  ts.band = band;
  for (int k = 0; k < 2; ++k) {
    const auto grid = make_grid(surface, grids.coarse << k, grids.fiber);
    rep.floor[static_cast<std::size_t>(k)] = solve_transport(omega.restriction(grid), lambda, ts).relative_residual;
    rep.exact_floor[static_cast<std::size_t>(k)] =
        solve_transport(control.restriction(grid), lambda, ts).relative_residual;
  }
  rep.floor_change = std::abs(rep.floor[1] - rep.floor[0]) / std::max(rep.floor[0], 1e-300);
  return rep;
}

// ---------------------------------------------------------------- obstructions

nlohmann::json ObstructionRecord::to_json() const {
  return {{"model", model},
          {"word", word},
          {"lambda", lambda},
          {"period", period},
          {"value", value},
          {"error", error},
          {"significant", significant},
          {"refined", refined},
          {"refined_value", refined_value},
          {"refined_error", refined_error},
          {"survives", survives}};
}

ObstructionRecord measure_obstruction(std::shared_ptr<const SurfaceModel> surface, const std::string& model,
                                      double lambda, const Word& word, const ObstructionSettings& st) {
  ObstructionRecord rec;
  rec.model = model;
  rec.word = to_string(word);
  rec.lambda = lambda;
  IntegratorSettings in;
  in.dt = st.dt;
  FlowParams params(lambda, surface, in);
  const ClosedOrbit orbit = find_closed_orbit(params, word);
  const ObstructionSample ob = periodic_obstruction(params, orbit, st.pieces, st.cocycle);
  rec.period = orbit.period;
  rec.value = ob.value;
  rec.error = ob.error;
  rec.significant = ob.significant();
  if (st.refine && rec.significant) {
    IntegratorSettings fine = in;
    fine.dt = 0.5 * st.dt;
    FlowParams pf(lambda, surface, fine);
    CocycleSettings cs = st.cocycle;
    cs.h *= 0.5;
    const ClosedOrbit of = find_closed_orbit(pf, word);
    const ObstructionSample obf = periodic_obstruction(pf, of, st.pieces, cs);
    rec.refined = true;
    rec.refined_value = obf.value;
    rec.refined_error = obf.error;
    rec.survives = obf.significant() && (obf.value > 0.0) == (ob.value > 0.0) &&
                   std::abs(obf.value - ob.value) <= std::max(0.1 * std::abs(ob.value), 3.0 * (ob.error + obf.error));
  }
  return rec;
}

namespace {

std::vector<Word> default_words(const ObstructionSettings& st) {
  if (!st.words.empty()) return st.words;
  return {parse_word("g1"), parse_word("g1 g2")};
}

nlohmann::json records_json(const std::vector<ObstructionRecord>& r) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& x : r) j.push_back(x.to_json());
  return j;
}

}  // namespace

bool TheoremAReport::pass() const {
  return constant_verdict == "coboundary-consistent" && perturbed_verdict == "obstruction found" &&
         geodesic_verdict == "coboundary-consistent" && std::abs(k_identity - k_contact) < 1e-8 &&
         std::abs(flip_average) < 1e-10;
}

nlohmann::json TheoremAReport::to_json() const {
  return {{"lambda", lambda},
          {"margin_constant", margin_constant},
          {"margin_perturbed", margin_perturbed},
          {"contact", {{"value", contact_value}, {"expected", contact_expected}, {"fluctuation", contact_fluctuation}}},
          {"constant_records", records_json(constant_records)},
          {"perturbed_records", records_json(perturbed_records)},
          {"geodesic_records", records_json(geodesic_records)},
          {"flip_average", flip_average},
          {"k_identity", k_identity},
          {"k_contact", k_contact},
          {"constant_verdict", constant_verdict},
          {"perturbed_verdict", perturbed_verdict},
          {"geodesic_verdict", geodesic_verdict},
          {"pass", pass()}};
}

TheoremAReport theorem_a_experiment(std::shared_ptr<const SurfaceModel> constant,
                                    std::shared_ptr<const SurfaceModel> perturbed, double lambda,
                                    const ObstructionSettings& st) {
  if (!constant->constant_curvature() || !constant->constant_magnetic()) {
    throw DomainError("the constant member must have constant K and F");
  }
  if (perturbed->constant_curvature()) throw DomainError("the perturbed member must have non-constant K");
  TheoremAReport rep;
  rep.lambda = lambda;
  rep.margin_constant = 2.0 * lambda * lambda + max_curvature(*constant);
  rep.margin_perturbed = 2.0 * lambda * lambda + max_curvature(*perturbed);
  if (!(rep.margin_constant < 0.0) || !(rep.margin_perturbed < 0.0)) {
    throw HypothesisViolation("2 lambda^2 + K(x) < 0 for all x in M",
                              "margins " + std::to_string(rep.margin_constant) + ", " +
                                  std::to_string(rep.margin_perturbed));
  }
  const auto words = default_words(st);

  // Contact value along a closed orbit of the constant member.
  IntegratorSettings in;
  in.dt = st.dt;
  const FlowParams pc(lambda, constant, in);
  const ClosedOrbit orbit = find_closed_orbit(pc, words.front());
  const ContactProfile prof = contact_check(pc, orbit.samples);
  rep.contact_fluctuation = prof.fluctuation;
  rep.contact_expected = prof.expected.front();
  double mean = 0.0;
  for (double v : prof.values) mean += v;
  rep.contact_value = mean / static_cast<double>(prof.values.size());

  const double c = constant->cohomology_constant();
  rep.k_identity = -1.0 / (1.0 + lambda * lambda * c * constant->mean_magnetic());
  rep.k_contact = 1.0 / rep.contact_value;

  // Liouville mean of a closed form with fiber samples.
  {
    GridSettings gs;
    const SMGrid grid(constant, gs);
    const auto basis = std::make_shared<const CollarBasis>(constant->group_ptr());
    std::mt19937_64 rng(5);
    const OneForm theta = OneForm::closed(basis, {1.0, 0.3, -0.7, 0.2}) + OneForm::exact(random_mode_spec(*constant, rng).h);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double fiber = 0.0;
      for (int j = 0; j < grid.fiber(); ++j) {
        fiber += theta.on(*constant, Vec3(grid.node(i).real(), grid.node(i).imag(), grid.theta(j)));
      }
      acc += grid.weight(i) * fiber / grid.fiber();
    }
    rep.flip_average = acc;
  }

  for (const Word& w : words) rep.constant_records.push_back(measure_obstruction(constant, "constant", lambda, w, st));
  for (const Word& w : words) rep.perturbed_records.push_back(measure_obstruction(perturbed, "perturbed", lambda, w, st));
  for (const Word& w : words) rep.geodesic_records.push_back(measure_obstruction(perturbed, "perturbed", 0.0, w, st));

  auto any_significant = [](const std::vector<ObstructionRecord>& r) {
    return std::any_of(r.begin(), r.end(), [](const ObstructionRecord& x) { return x.significant; });
  };
  auto any_surviving = [](const std::vector<ObstructionRecord>& r) {
    return std::any_of(r.begin(), r.end(), [](const ObstructionRecord& x) { return x.survives; });
  };
  rep.constant_verdict = (rep.contact_fluctuation < 1e-8 && !any_significant(rep.constant_records))
                             ? "coboundary-consistent"
                             : "obstruction found";
  rep.perturbed_verdict = any_surviving(rep.perturbed_records) ? "obstruction found" : "coboundary-consistent";
  rep.geodesic_verdict = any_surviving(rep.geodesic_records) ? "obstruction found" : "coboundary-consistent";
  return rep;
}

// ---------------------------------------------------------------- magnetic direction

std::pair<std::shared_ptr<const SurfaceModel>, double> normalize_curvature(const SurfaceModel& surface) {
  const double kmax = max_curvature(surface);
  if (!(kmax < 0.0)) throw HypothesisViolation("K < 0", "max K = " + std::to_string(kmax));
  const double shift = 0.5 * std::log(-kmax / 2.0);
  const InvariantField& phi = surface.phi();
  InvariantField scaled(phi.constant() + shift, phi.bumps(), surface.group(), phi.max_word());
  InvariantField mag(surface.magnetic().constant(), surface.magnetic().bumps(), surface.group(),
                     surface.magnetic().max_word());
  return {std::make_shared<const SurfaceModel>(std::move(scaled), std::move(mag)), shift};
}

LambdaBound lambda_bound(std::shared_ptr<const SMGrid> grid, int N, int samples, std::uint64_t seed) {
  const SurfaceModel& s = grid->surface();
  LambdaBound out;
  out.N = N;
  out.samples = samples;
  double kmax = -std::numeric_limits<double>::infinity();
  std::vector<double> etaF(grid->size()), F(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) {
    kmax = std::max(kmax, s.curvature(grid->node(i)));
    const ScalarJet j = s.magnetic_jet(grid->node(i));
    etaF[i] = std::norm(grid->inv_factor(i) * 0.5 * cplx(j.grad[0], j.grad[1]));
    F[i] = j.value * j.value;
  }
  out.A = -kmax / 2.0;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> mode(0, 6);
  for (int k = 0; k < samples; ++k) {
    const int n = mode(rng);
    const ModeFieldSpec spec = random_mode_spec(s, rng);
    double g2 = 0.0, a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const double u = std::norm(mode_jet(s, grid->node(i), n, spec).u);
      g2 += grid->weight(i) * u;
      a += grid->weight(i) * etaF[i] * u;
      b += grid->weight(i) * F[i] * u;
    }
    if (g2 > 0.0) out.c = std::max({out.c, a / g2, b / g2});
  }
  const double l1 = std::sqrt(out.A / (4.0 * out.c));
  const double room = (2.0 * out.A - 1.0) * (N + 1);
  const double l2 = room > 0.0 ? std::sqrt(room / (out.c * (N + 1) * (N + 1))) : 0.0;
  out.closed_form = std::min(l1, l2);
  return out;
}

bool TheoremBReport::pass() const {
  return verdict == "obstruction found" && control_verdict == "coboundary-consistent" && decays_to_zero;
}

nlohmann::json TheoremBReport::to_json() const {
  nlohmann::json sw = nlohmann::json::array();
  for (const auto& e : sweep) {
    nlohmann::json j = e.obstruction.to_json();
    j["within_bound"] = e.within_bound;
    sw.push_back(j);
  }
  return {{"scale_shift", scale_shift},
          {"curvature_max", curvature_max},
          {"magnetic_range", {magnetic_range.first, magnetic_range.second}},
          {"bound", {{"A", bound.A}, {"c", bound.c}, {"N", bound.N}, {"closed_form", bound.closed_form},
                     {"samples", bound.samples}}},
          {"lambda0", lambda0},
          {"sweep", sw},
          {"control", control.to_json()},
          {"verdict", verdict},
          {"control_verdict", control_verdict},
          {"decays_to_zero", decays_to_zero},
          {"pass", pass()}};
}

TheoremBReport theorem_b_experiment(const SurfaceModel& surface, const std::vector<double>& lambdas, int N,
                                    const ObstructionSettings& st, int bound_samples, std::uint64_t seed) {
  if (!surface.constant_curvature()) throw HypothesisViolation("K constant", "the curvature must be constant");
  if (surface.constant_magnetic()) throw HypothesisViolation("F non-constant", "the magnetic density must vary");
  if (lambdas.empty()) throw DomainError("lambda sweep is empty");
  TheoremBReport rep;
  auto [model, shift] = normalize_curvature(surface);
  rep.scale_shift = shift;
  rep.curvature_max = max_curvature(*model);
  rep.magnetic_range = model->magnetic_range();
  GridSettings gs;
  rep.bound = lambda_bound(std::make_shared<const SMGrid>(model, gs), N, bound_samples, seed);

  std::vector<double> sorted = lambdas;
  std::sort(sorted.begin(), sorted.end());
  const Word word = default_words(st).front();
  ObstructionSettings quick = st;
  quick.refine = false;
  for (double lam : sorted) {
    SweepEntry e;
    e.lambda = lam;
    e.within_bound = rep.bound.A - 4.0 * rep.bound.c * lam * lam >= 0.0 &&
                     (2.0 * rep.bound.A - 1.0) * (N + 1) - lam * lam * rep.bound.c * (N + 1) * (N + 1) > 0.0;
    if (e.within_bound) rep.lambda0 = lam;
    e.obstruction = measure_obstruction(model, "magnetic", lam, word, e.within_bound ? st : quick);
    rep.sweep.push_back(e);
  }
  const double probe = std::min(0.1, rep.lambda0 > 0.0 ? rep.lambda0 : sorted.front());
  InvariantField flat(1.0, {}, model->group());
  auto control_model = std::make_shared<const SurfaceModel>(model->phi(), std::move(flat));
  rep.control = measure_obstruction(control_model, "magnetic-constant", probe, word, st);

  const bool found = std::any_of(rep.sweep.begin(), rep.sweep.end(),
                                 [](const SweepEntry& e) { return e.within_bound && e.obstruction.survives; });
  rep.verdict = found ? "obstruction found" : "coboundary-consistent";
  rep.control_verdict = rep.control.significant ? "obstruction found" : "coboundary-consistent";
  // Magnitudes shrink towards the geodesic limit.
  bool monotone = true;
  for (std::size_t k = 1; k < rep.sweep.size(); ++k) {
    const auto& a = rep.sweep[k - 1].obstruction;
    const auto& b = rep.sweep[k].obstruction;
    monotone = monotone && std::abs(a.value) <= std::abs(b.value) + 3.0 * (a.error + b.error);
  }
  const double first = std::abs(rep.sweep.front().obstruction.value);
  const double last = std::abs(rep.sweep.back().obstruction.value);
  rep.decays_to_zero = monotone && first < 0.5 * last;
  return rep;
}

}  // namespace maglab
