#include "maglab/suites.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace maglab {

namespace {

constexpr double kPi = std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<Word> words_or(const std::vector<Word>& words, std::initializer_list<const char*> fallback) {
  if (!words.empty()) return words;
  std::vector<Word> out;
  for (const char* w : fallback) out.push_back(parse_word(w));
  return out;
}

// -K - lambda^2 F^2 for constant models.
double constant_rate(const SurfaceModel& s, double lambda) {
  const double K = s.curvature(0.0);
  const double F = s.magnetic_density(0.0);
  return std::sqrt(std::max(-K - lambda * lambda * F * F, 0.0));
}

double refinement_order(double coarse, double fine) {
  if (!(fine > 0.0)) return std::numeric_limits<double>::infinity();
  return std::log2(coarse / fine);
}

}  // namespace

std::string to_string(ToleranceKind kind) {
  switch (kind) {
    case ToleranceKind::kFixed:
      return "fixed";
    case ToleranceKind::kMeshMeasured:
      return "mesh-measured";
    case ToleranceKind::kErrorBudget:
      return "error-budget";
  }
  return "fixed";
}

nlohmann::json CheckRecord::to_json() const {
  nlohmann::json j{{"name", name},          {"statement", statement}, {"value", value},
                   {"tolerance", tolerance}, {"tolerance_kind", to_string(kind)},
                   {"pass", pass},           {"required", required}};
  if (!detail.is_null()) j["detail"] = detail;
  return j;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (k) out += ',';
    out += header[k];
  }
  out += '\n';
  char buf[64];
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", r[k]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

CheckRecord& SuiteResult::below(const std::string& name, const std::string& statement, double value,
                                double tolerance, ToleranceKind kind, bool required) {
  CheckRecord c;
  c.name = name;
  c.statement = statement;
  c.value = value;
  c.tolerance = tolerance;
  c.kind = kind;
  c.pass = std::isfinite(value) && value <= tolerance;
  c.required = required;
  checks.push_back(std::move(c));
  return checks.back();
}

CheckRecord& SuiteResult::flag(const std::string& name, const std::string& statement, bool ok, bool required) {
  CheckRecord c;
  c.name = name;
  c.statement = statement;
  c.value = ok ? 1.0 : 0.0;
  c.tolerance = 1.0;
  c.pass = ok;
  c.required = required;
  checks.push_back(std::move(c));
  return checks.back();
}

void SuiteResult::merge(SuiteResult other, const std::string& prefix) {
  for (auto& c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
  for (auto& t : other.tables) {
    t.name = prefix + t.name;
    tables.push_back(std::move(t));
  }
  for (auto& [k, v] : other.data.items()) data[prefix + k] = v;
}

bool SuiteResult::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckRecord& c) { return c.pass || !c.required; });
}

// ---------------------------------------------------------------- surfaces

SurfaceModel preset_surface(const std::string& name) {
  if (name == "constant") return SurfaceModel::hyperbolic();
  if (name == "perturbed") {
    return SurfaceModel::from_json(
        {{"phi", {{"constant", 0.0}, {"bumps", {{{"center", {0.0, 0.0}}, {"width", 0.4}, {"amplitude", -0.1}}}}}}});
  }
  if (name == "magnetic") {
    return SurfaceModel::from_json(
        {{"magnetic", {{"constant", 1.0}, {"bumps", {{{"center", {0.0, 0.0}}, {"width", 0.5}, {"amplitude", 0.1}}}}}}});
  }
  throw DomainError("unknown surface preset '" + name + "'");
}

SurfaceModel surface_from_config(const nlohmann::json& j) {
  if (j.is_string()) return preset_surface(j.get<std::string>());
  if (j.is_object()) return SurfaceModel::from_json(j);
  throw DomainError("surface must be a preset name or an object");
}

std::vector<SMPoint> random_states(std::size_t count, std::mt19937_64& rng) {
  const double rv = std::abs(FuchsianGroup::vertex(0));
  std::uniform_real_distribution<double> U(-rv, rv), A(0.0, 2.0 * kPi);
  std::vector<SMPoint> out;
  while (out.size() < count) {
    const cplx z(U(rng), U(rng));
    if (std::abs(z) >= rv || !FuchsianGroup::contains(z, 0.0)) continue;
    out.emplace_back(z.real(), z.imag(), A(rng));
  }
  return out;
}

bool is_constant_model(const SurfaceModel& surface) {
  return surface.constant_curvature() && surface.constant_magnetic();
}

SuiteResult surface_suite(const SurfaceModel& surface, const SurfaceSuiteSettings& st) {
  SuiteResult out;
  std::mt19937_64 rng(st.seed);
  const auto pts = random_states(static_cast<std::size_t>(st.samples), rng);
  Table t{"surface_samples", {"x", "y", "K", "F", "Phi"}, {}};
  double defect_k = 0.0, defect_f = 0.0;
  for (const auto& p : pts) {
    const cplx z = p.base().z();
    const double K = surface.curvature(z), F = surface.magnetic_density(z);
    t.rows.push_back({z.real(), z.imag(), K, F, surface.conformal_jet(z).value});
    for (int k = 0; k < FuchsianGroup::kGenerators; ++k) {
      for (const MobiusMap& g : {surface.group().generator(k), surface.group().generator(k).inverse()}) {
        const cplx w = g.apply(z);
        defect_k = std::max(defect_k, std::abs(surface.curvature(w) - K));
        defect_f = std::max(defect_f, std::abs(surface.magnetic_density(w) - F));
      }
    }
  }
  out.tables.push_back(std::move(t));
  out.below("curvature_invariance", "|K(gp) - K(p)| over generators and samples", defect_k, 1e-8);
  out.below("magnetic_invariance", "|F(gp) - F(p)| over generators and samples", defect_f, 1e-8);
  const double total_k = surface.integrate([&](cplx z) { return surface.curvature(z); });
  out.below("gauss_bonnet", "|integral of K dA + 4 pi| (genus 2)", std::abs(total_k + 4.0 * kPi), 1e-6);
  const auto [kmin, kmax] = surface.curvature_range();
  const auto [fmin, fmax] = surface.magnetic_range();
  out.data = {{"area", surface.area()},
              {"cohomology_constant", surface.cohomology_constant()},
              {"mean_magnetic", surface.mean_magnetic()},
              {"curvature_range", {kmin, kmax}},
              {"magnetic_range", {fmin, fmax}},
              {"truncation_bound",
               std::max(surface.phi().truncation_bound(), surface.magnetic().truncation_bound())},
              {"integral_K", total_k}};
  return out;
}

// ---------------------------------------------------------------- flow

SuiteResult orbit_suite(const FlowParams& params, const OrbitSuiteSettings& st) {
  SuiteResult out;
  const SMPoint p0 = SMPoint::from_state(st.start);
  const auto t0 = std::chrono::steady_clock::now();
  const OrbitSegment orbit = integrate(params, p0, st.T);
  const double elapsed = seconds_since(t0);
  const auto kg = geodesic_curvature_along(orbit);
  Table t{"orbit", {"t", "x", "y", "theta", "k_g", "lambda_F"}, {}};
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    const Vec3& s = orbit.states[i];
    t.rows.push_back({orbit.times[i], s[0], s[1], s[2], kg[i],
                      params.lambda * params.surface->magnetic_density(cplx(s[0], s[1]))});
  }
  out.tables.push_back(std::move(t));
  out.below("curvature", "max |k_g - lambda F| along the orbit", magnetic_curvature_residual(orbit),
            st.curvature_tolerance);
  out.below("unit_speed", "max |speed - 1| of the projected curve", unit_speed_residual(orbit), 1e-8);
  const double TL = std::min(st.liouville_time, st.T);
  out.below("liouville", "|det dphi_T - 1| in the (X, H, V) frame",
            std::abs(liouville_jacobian(params, p0, TL) - 1.0), st.liouville_tolerance);
  out.data = {{"samples", orbit.size()}, {"seconds", elapsed}, {"complete", orbit.complete}};
  return out;
}

SuiteResult invariants_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                             const InvariantSuiteSettings& st) {
  SuiteResult out;
  std::mt19937_64 rng(st.seed);
  Table orbits{"curvature", {"lambda", "x", "y", "theta", "residual", "unit_speed"}, {}};
  for (double lambda : st.lambdas) {
    const FlowParams params(lambda, surface, integrator);
    double worst = 0.0, slowest = 0.0;
    for (const SMPoint& p : random_states(static_cast<std::size_t>(st.orbits), rng)) {
      const auto t0 = std::chrono::steady_clock::now();
      const OrbitSegment orbit = integrate(params, p, st.T);
      slowest = std::max(slowest, seconds_since(t0));
      const double r = magnetic_curvature_residual(orbit);
      worst = std::max(worst, r);
      orbits.rows.push_back({lambda, p.base().x(), p.base().y(), p.theta(), r, unit_speed_residual(orbit)});
    }
    char tag[32];
    std::snprintf(tag, sizeof tag, "%.3g", lambda);
    out.below(std::string("curvature_lambda_") + tag, "max |k_g - lambda F| over the orbits", worst,
              st.curvature_tolerance);
    out.below(std::string("orbit_seconds_lambda_") + tag, "slowest orbit integration (s)", slowest, st.orbit_seconds);
  }
  out.tables.push_back(std::move(orbits));

  Table liou{"liouville", {"x", "y", "theta", "det_minus_one"}, {}};
  double worst_det = 0.0;
  const FlowParams lp(st.liouville_lambda, surface, integrator);
  for (const SMPoint& p : random_states(static_cast<std::size_t>(st.liouville_states), rng)) {
    const double d = liouville_jacobian(lp, p, st.liouville_time) - 1.0;
    worst_det = std::max(worst_det, std::abs(d));
    liou.rows.push_back({p.base().x(), p.base().y(), p.theta(), d});
  }
  out.tables.push_back(std::move(liou));
  out.below("liouville", "max |det dphi_T - 1| over random states", worst_det, st.liouville_tolerance);

  Table frame{"frame", {"x", "y", "theta", "duality", "vx_minus_h", "vh_plus_x", "xh_minus_kv"}, {}};
  double worst_dual = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
  const FlowParams fp(0.0, surface, integrator);
  for (const SMPoint& p : random_states(static_cast<std::size_t>(st.frame_points), rng)) {
    const Mat3 E = frame_at(*surface, p.state());
    Mat3 D;
    for (int k = 0; k < 3; ++k) D.col(k) = coframe_on(*surface, p.state(), E.col(k));
    const double dual = (D - Mat3::Identity()).cwiseAbs().maxCoeff();
    const CommutatorResiduals c = commutator_check(fp, p, st.frame_step);
    worst_dual = std::max(worst_dual, dual);
    b1 = std::max(b1, c.vx_minus_h);
    b2 = std::max(b2, c.vh_plus_x);
    b3 = std::max(b3, c.xh_minus_kv);
    frame.rows.push_back({p.base().x(), p.base().y(), p.theta(), dual, c.vx_minus_h, c.vh_plus_x, c.xh_minus_kv});
  }
  out.tables.push_back(std::move(frame));
  out.below("duality", "max |(alpha, beta, psi)(X, H, V) - I|", worst_dual, st.duality_tolerance);
  out.below("bracket_vx", "|[V,X] - H|", b1, st.bracket_tolerance);
  out.below("bracket_vh", "|[V,H] + X|", b2, st.bracket_tolerance);
  out.below("bracket_xh", "|[X,H] - K V|", b3, st.bracket_tolerance);
  return out;
}

// ---------------------------------------------------------------- splitting

SuiteResult splitting_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                            const SplittingSuiteSettings& st) {
  SuiteResult out;
  std::mt19937_64 rng(st.seed);
  const auto pts = random_states(static_cast<std::size_t>(st.points), rng);
  const bool oracle = is_constant_model(*surface);
  Table t{"splitting", {"lambda", "x", "y", "theta", "u_s", "u_u", "growth_rate"}, {}};
  auto mean_gap = [&](double lambda, double* worst_error) {
    const FlowParams params(lambda, surface, integrator);
    require_anosov(params);
    double acc = 0.0;
    for (const SMPoint& p : pts) {
      const SplittingSample s = splitting_sample(params, p, st.horizon);
      t.rows.push_back({lambda, p.base().x(), p.base().y(), p.theta(), s.u_s, s.u_u, s.growth_rate});
      acc += s.u_u - s.u_s;
      if (worst_error) {
        *worst_error = std::max(*worst_error, std::abs(s.u_u - s.u_s - 2.0 * constant_rate(*surface, lambda)));
      }
    }
    return acc / static_cast<double>(pts.size());
  };
  nlohmann::json gaps = nlohmann::json::array();
  for (double lambda : st.lambdas) {
    double err = 0.0;
    const double g = mean_gap(lambda, &err);
    gaps.push_back({{"lambda", lambda}, {"gap", g}, {"oracle_gap", 2.0 * constant_rate(*surface, lambda)}});
    if (oracle) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "%.3g", lambda);
      out.below(std::string("gap_lambda_") + tag, "max |u_u - u_s - 2 sqrt(-K - lambda^2 F^2)|", err,
                st.gap_tolerance);
    }
  }
  std::vector<double> trend;
  for (double lambda : st.trend) trend.push_back(mean_gap(lambda, nullptr));
  bool decreasing = !trend.empty();
  for (std::size_t k = 1; k < trend.size(); ++k) decreasing = decreasing && trend[k] < trend[k - 1];
  if (!trend.empty()) {
    out.flag("degeneration", "u_u - u_s decreases as lambda approaches the horocyclic limit",
             decreasing && trend.back() < 0.5 * trend.front());
  }
  out.tables.push_back(std::move(t));
  out.data = {{"gaps", gaps}, {"trend_lambdas", st.trend}, {"trend_gaps", trend}, {"oracle", oracle}};
  return out;
}

SuiteResult dichotomy_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                            const DichotomySuiteSettings& st) {
  SuiteResult out;
  std::mt19937_64 rng(st.seed);
  const auto pts = random_states(static_cast<std::size_t>(st.points), rng);
  const bool oracle = is_constant_model(*surface);
  Table t{"dichotomy", {"lambda", "C", "eta", "rho", "eta_oracle", "rho_oracle"}, {}};
  nlohmann::json fits = nlohmann::json::array();
  for (double lambda : st.lambdas) {
    const FlowParams params(lambda, surface, integrator);
    require_anosov(params);
    const DichotomyReport r = dichotomy_fit(params, pts, st.fit_time);
    const double k = constant_rate(*surface, lambda);
    t.rows.push_back({lambda, r.C, r.eta, r.rho, std::exp(k), std::exp(-k)});
    fits.push_back({{"lambda", lambda}, {"C", r.C}, {"eta", r.eta}, {"rho", r.rho}, {"samples", r.samples}});
    char tag[32];
    std::snprintf(tag, sizeof tag, "%.3g", lambda);
    out.flag(std::string("anosov_lambda_") + tag, "eta > 1 > rho", r.eta > 1.0 && r.rho < 1.0);
    if (oracle) {
      out.below(std::string("eta_lambda_") + tag, "|eta / e^{sqrt(-K - lambda^2 F^2)} - 1|",
                std::abs(r.eta / std::exp(k) - 1.0), st.rate_tolerance);
      out.below(std::string("rho_lambda_") + tag, "|rho / e^{-sqrt(-K - lambda^2 F^2)} - 1|",
                std::abs(r.rho / std::exp(-k) - 1.0), st.rate_tolerance);
    }
  }
  out.tables.push_back(std::move(t));
  out.data = {{"fits", fits}, {"oracle", oracle}};
  return out;
}

// ---------------------------------------------------------------- cocycle

SuiteResult cocycle_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                          const CocycleSuiteSettings& st) {
  SuiteResult out;
  const FlowParams params(st.lambda, surface, integrator);
  require_anosov(params);
  std::mt19937_64 rng(st.seed);
  const bool constant = is_constant_model(*surface);
  const auto words = words_or(st.words, {"g1", "g1 g2"});

  // Contact value along a closed orbit.
  const ClosedOrbit first = find_closed_orbit(params, words.front());
  const ContactProfile contact = contact_check(params, first.samples);
  out.below("contact", "max |(-alpha - lambda c psi)(X_lambda) - (-1 - lambda^2 F c)|", contact.max_deviation,
            st.contact_tolerance, ToleranceKind::kFixed, constant);

  Table samples{"cocycle_samples", {"x", "y", "theta", "T", "h", "value", "coarse", "fine", "error"}, {}};
  for (const SMPoint& p : random_states(static_cast<std::size_t>(st.samples), rng)) {
    const CocycleSample k = kam_cocycle(params, p, st.T, st.cocycle);
    samples.rows.push_back({p.base().x(), p.base().y(), p.theta(), k.T, k.h, k.value, k.coarse, k.fine, k.error});
  }
  out.tables.push_back(std::move(samples));

  Table obs{"obstructions", {"word_index", "period", "value", "error", "significant"}, {}};
  nlohmann::json words_json = nlohmann::json::array();
  bool any_significant = false;
  for (std::size_t w = 0; w < words.size(); ++w) {
    const ClosedOrbit orbit = find_closed_orbit(params, words[w]);
    const ObstructionSample o = periodic_obstruction(params, orbit, st.pieces, st.cocycle);
    obs.rows.push_back({double(w), o.period, o.value, o.error, o.significant() ? 1.0 : 0.0});
    words_json.push_back(to_string(words[w]));
    any_significant = any_significant || o.significant();
  }
  out.tables.push_back(std::move(obs));
  if (constant) {
    out.flag("obstructions_vanish", "every periodic obstruction is within 10x its error of zero", !any_significant);
  }

  Table add{"additivity", {"x", "y", "theta", "first", "second", "whole", "residual", "budget"}, {}};
  double worst_ratio = 0.0;
  for (const SMPoint& p : random_states(static_cast<std::size_t>(st.triples), rng)) {
    const double T1 = st.split, T2 = st.T - st.split;
    const CocycleSample a = kam_cocycle(params, p, T1, st.cocycle);
    const Vec3 q = chart_successor(params, p.state(), T1);
    const CocycleSample b = kam_cocycle(params, SMPoint::from_state(q), T2, st.cocycle);
    const CocycleSample ab = kam_cocycle(params, p, st.T, st.cocycle);
    const double residual = std::abs(a.value + b.value - ab.value);
    const double budget = a.error + b.error + ab.error + st.cocycle.signal_floor * 1e-3;
    worst_ratio = std::max(worst_ratio, residual / budget);
    add.rows.push_back({p.base().x(), p.base().y(), p.theta(), a.value, b.value, ab.value, residual, budget});
  }
  out.tables.push_back(std::move(add));
  out.below("additivity", "max |K(p,T1) + K(phi_T1 p,T2) - K(p,T1+T2)| / combined error budget", worst_ratio, 1.0,
            ToleranceKind::kErrorBudget);

  // Regularity of the unstable slope along a horizontal segment.
  {
    std::mt19937_64 r2(st.seed + 17);
    const SMPoint c = random_states(1, r2).front();
    const Mat3 E = frame_at(*surface, c.state());
    std::vector<double> vals;
    const int n = st.regularity_points;
    const double dx = st.regularity_span / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double s = -0.5 * st.regularity_span + i * dx;
      Vec3 state = c.state() + s * E.col(1) / E.col(1).norm();
      vals.push_back(unstable_slope(params, SMPoint::from_state(state)));
    }
    const RegularityReport reg = zygmund_lipschitz_scan(vals, dx);
    Table rt{"regularity", {"t", "first", "second"}, {}};
    for (const auto& r : reg.rows) rt.rows.push_back({r.t, r.first, r.second});
    out.tables.push_back(std::move(rt));
    out.data["regularity"] = {{"classification", reg.classification},
                              {"second_slope", reg.second_slope},
                              {"first_growth", reg.first_growth}};
  }
  out.data["words"] = words_json;
  out.data["contact"] = {{"fluctuation", contact.fluctuation},
                         {"expected", contact.expected.empty() ? 0.0 : contact.expected.front()}};
  out.data["constant_model"] = constant;
  return out;
}

// ---------------------------------------------------------------- fiber Fourier

SuiteResult fourier_suite(std::shared_ptr<const SurfaceModel> surface, const FourierSuiteSettings& st) {
  SuiteResult out;
  std::array<std::shared_ptr<const SMGrid>, 3> grids;
  for (int k = 0; k < 3; ++k) {
    GridSettings gs;
    gs.base = st.grids.coarse << k;
    gs.fiber = st.grids.fiber;
    grids[static_cast<std::size_t>(k)] = std::make_shared<const SMGrid>(surface, gs);
  }
  Table grid_table{"grids", {"base", "nodes", "ghosts", "area", "pairing_defect"}, {}};
  for (const auto& g : grids) {
    grid_table.rows.push_back({double(g->settings().base), double(g->size()), double(g->ghosts().size()), g->area(),
                               g->ghost_pairing_defect()});
  }
  out.tables.push_back(std::move(grid_table));
  out.below("area", "|Liouville area of the base grid / surface area - 1|",
            std::abs(grids[1]->area() / surface->area() - 1.0), 1e-3);

  // Adjointness on random band-4 pairs, same seed at every level.
  std::array<double, 3> adj{};
  Table adj_table{"adjointness", {"base", "pair", "residual"}, {}};
  for (std::size_t k = 0; k < 3; ++k) {
    std::mt19937_64 rng(st.seed);
    for (int p = 0; p < st.pair_fields; ++p) {
      const FourierField f = random_band_field(grids[k], 4, rng);
      const FourierField g = random_band_field(grids[k], 4, rng);
      const double r = adjointness_residual(f, g);
      adj[k] = std::max(adj[k], r);
      adj_table.rows.push_back({double(grids[k]->settings().base), double(p), r});
    }
  }
  out.tables.push_back(std::move(adj_table));
  const double tau_grid = refinement_tolerance(adj[0], adj[1]);
  const double tau_next = refinement_tolerance(adj[1], adj[2]);
  const double order = refinement_order(tau_grid, tau_next);
  out.below("adjointness", "|<eta+ f, g> + <f, eta- g>| on the coarse grid", adj[0], tau_grid,
            ToleranceKind::kMeshMeasured);
  auto& ord = out.below("tau_grid_order", "observed order of tau_grid under 2x refinement (negated)", -order,
                        -st.min_order);
  ord.detail = {{"tau_grid", tau_grid}, {"tau_next", tau_next}, {"order", order}};

  // Mode locality and the energy inequality on single-mode fields.
  const double kmax = surface->curvature_range().second;
  const double A = -kmax / 2.0;
  Table energy{"energy", {"field", "n", "slack_base", "slack_coarse", "slack_fine", "tau_ineq", "locality"}, {}};
  double worst_locality = 0.0, worst_energy = -std::numeric_limits<double>::infinity();
  {
    std::mt19937_64 rng(st.seed + 1);
    for (int k = 0; k < st.single_fields; ++k) {
      const int n = k % (st.max_mode + 1);
      const ModeFieldSpec spec = random_mode_spec(*surface, rng);
      std::array<double, 3> slack{};
      double loc = 0.0;
      for (std::size_t l = 0; l < 3; ++l) {
        FourierField f = single_mode_field(grids[l], n, spec);
        f *= 1.0 / f.norm();
        slack[l] = energy_inequality_check(f, n, A).slack;
        if (l == 0) loc = mode_locality_residual(f, n);
      }
      // The base/coarse pair is pre-asymptotic for some low modes, so tau_ineq
      // comes from the two finer grids.
      const double tau = refinement_tolerance(slack[1], slack[2]);
      worst_locality = std::max(worst_locality, loc);
      // Positive when the fine slack falls below -tau_ineq.
      worst_energy = std::max(worst_energy, -slack[2] - tau);
      energy.rows.push_back({double(k), double(n), slack[0], slack[1], slack[2], tau, loc});
    }
  }
  out.tables.push_back(std::move(energy));
  out.below("mode_locality", "energy of (X - iH)/2 f outside mode n+1, relative", worst_locality, tau_grid,
            ToleranceKind::kMeshMeasured);
  out.below("energy_inequality", "max over fields of -(slack + tau_ineq), slack = ||eta+ f||^2 - A n ||f||^2 - ||eta- f||^2",
            worst_energy, 0.0, ToleranceKind::kMeshMeasured);

  // Direct frame transport against the per-mode formula.
  Table transport{"transport", {"lambda", "field", "max_mode_residual"}, {}};
  double worst_transport = 0.0;
  for (double lambda : st.transport_lambdas) {
    std::mt19937_64 rng(st.seed + 2);
    for (int k = 0; k < st.transport_fields; ++k) {
      const FourierField g = random_band_field(grids[0], 4, rng);
      const auto res = mode_transport_residual(g, lambda);
      const double m = res.empty() ? 0.0 : *std::max_element(res.begin(), res.end());
      worst_transport = std::max(worst_transport, m);
      transport.rows.push_back({lambda, double(k), m});
    }
  }
  out.tables.push_back(std::move(transport));
  out.below("mode_transport", "per-mode |direct X_lambda g - (eta+ g + eta- g + i n lambda F g)|", worst_transport,
            tau_grid, ToleranceKind::kMeshMeasured);
  out.data = {{"tau_grid", tau_grid}, {"tau_grid_next", tau_next}, {"tau_grid_order", order},
              {"adjointness", adj},   {"A", A}};
  return out;
}

// ---------------------------------------------------------------- cohomology

SuiteResult closed_orbits_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                                const OrbitsSuiteSettings& st) {
  SuiteResult out;
  const FlowParams params(st.lambda, surface, integrator);
  require_anosov(params);
  const auto words = words_or(st.words, {"g1", "g2", "g1 g2"});
  const bool hyperbolic = surface->constant_curvature() && std::abs(surface->curvature(0.0) + 1.0) < 1e-12 &&
                          surface->constant_magnetic();
  const auto basis = std::make_shared<const CollarBasis>(surface->group_ptr());
  const OneForm omega = OneForm::closed(basis, {1.0, -0.5, 0.25, 0.5});
  Table t{"closed_orbits",
          {"word_index", "period", "closure", "iterations", "oracle_period", "unit_integral", "form_integral",
           "form_period"},
          {}};
  double worst_period = 0.0, worst_unit = 0.0, worst_form = 0.0;
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t w = 0; w < words.size(); ++w) {
    const ClosedOrbit orbit = find_closed_orbit(params, words[w]);
    const double F = surface->magnetic_density(0.0);
    const double oracle = hyperbolic ? surface->group().word_map(words[w]).translation_length() /
                                           std::sqrt(1.0 - st.lambda * st.lambda * F * F)
                                     : std::nan("");
    if (hyperbolic) worst_period = std::max(worst_period, std::abs(orbit.period - oracle));
    const OrbitIntegral unit = orbit_integral([](const Vec3&) { return 1.0; }, orbit);
    worst_unit = std::max(worst_unit, std::abs(unit.value - orbit.period));
    const OrbitIntegral fi = orbit_integral([&](const Vec3& s) { return omega.on(*surface, s); }, orbit);
    const cplx z0 = orbit.seed.base().z();
    const double period = omega.line_integral(z0, orbit.deck.apply(z0));
    worst_form = std::max(worst_form, std::abs(fi.value - period) / std::max(10.0 * fi.error, 1e-6));
    t.rows.push_back({double(w), orbit.period, orbit.closure, double(orbit.iterations), oracle, unit.value, fi.value,
                      period});
    names.push_back(to_string(words[w]));
  }
  out.tables.push_back(std::move(t));
  if (hyperbolic) {
    out.below("period_oracle", "|period - translation length / sqrt(1 - lambda^2 F^2)|", worst_period,
              st.period_tolerance);
  }
  out.below("unit_integral", "|integral of 1 over the orbit - period|", worst_unit, 1e-9);
  out.below("form_period", "|orbit integral of a closed form - its period| over max(10x quadrature error, 1e-6)",
            worst_form, 1.0,
            ToleranceKind::kErrorBudget);
  out.data = {{"words", names}, {"lambda", st.lambda}};
  return out;
}

SuiteResult solve_suite(std::shared_ptr<const SurfaceModel> surface, const SolveSuiteSettings& st) {
  SuiteResult out;
  const auto words = words_or(st.words, {"g1", "g1 g2"});
  const RecoveryReport rec = coboundary_recovery(surface, st.lambda, st.g_band, st.grids, st.seed, words);
  Table profile{"recovery_profile", {"n", "norm_coarse", "norm_fine"}, {}};
  const int rows = static_cast<int>(rec.runs[0].profile.size());
  for (int k = 0, n = -rows / 2; k < rows; ++n, ++k) {
    profile.rows.push_back({double(n), rec.runs[0].profile[std::size_t(k)], rec.runs[1].profile[std::size_t(k)]});
  }
  out.tables.push_back(std::move(profile));
  Table recur{"recurrence", {"run", "n", "b", "slack"}, {}};
  for (std::size_t r = 0; r < 2; ++r) {
    const auto& R = rec.recurrence[r];
    for (std::size_t k = 0; k < R.n.size(); ++k) {
      const int n = R.n[k];
      const std::size_t s = static_cast<std::size_t>(n - rec.N - 3);
      const double slack = (n > rec.N + 2 && s < R.slack.size()) ? R.slack[s] : std::nan("");
      recur.rows.push_back({double(r), double(n), R.b[k], slack});
    }
  }
  out.tables.push_back(std::move(recur));
  out.below("recovery_error", "mean-aligned ||g - g_true|| on the fine grid", rec.runs[1].error,
            rec.runs[0].error, ToleranceKind::kMeshMeasured);
  out.below("tail", "sqrt(sum_{|n| >= N} ||g_n||^2) on the fine grid", rec.runs[1].tail, rec.tau_solve,
            ToleranceKind::kMeshMeasured);
  out.below("tail_order", "observed order of the tail under refinement (negated)", -rec.tail_order, -1.5);
  out.flag("support", "||g_n|| <= max(tau_solve, ||g|| mesh^2) for |n| >= N", rec.support.pass);
  out.flag("recurrence", "b_{n+1} >= b_{n-1} + r_n - tau_ineq for n > N+2 on both runs",
           rec.recurrence_ok && rec.recurrence[0].violations.empty() && rec.recurrence[1].violations.empty());
  double worst_orbit = 0.0;
  for (std::size_t k = 0; k < rec.orbit_integrals.size(); ++k) {
    worst_orbit = std::max(worst_orbit, std::abs(rec.orbit_integrals[k]) / std::max(10.0 * rec.orbit_errors[k], 1e-6));
  }
  out.below("orbit_integrals", "periodic-orbit integrals of the coboundary over 10x their quadrature error",
            worst_orbit, 1.0, ToleranceKind::kErrorBudget);

  const ExactFormReport ex = exact_form_recovery(surface, st.exact_lambda, st.grids, st.seed);
  out.below("exact_form_support", "energy outside H_0 for an exact form (coarse grid)", ex.off_zero[0], ex.tau_solve,
            ToleranceKind::kMeshMeasured);
  out.flag("exact_form_convergence", "off-H_0 energy and potential error shrink under refinement",
           ex.off_zero[1] < ex.off_zero[0] && ex.potential_error[1] < ex.potential_error[0]);
  double max_period = 0.0;
  for (double p : ex.periods) max_period = std::max(max_period, std::abs(p));
  out.below("exact_form_periods", "periods of dh", max_period, 1e-8);

  const ClosedFormReport cf = closed_form_floor(surface, st.floor_lambda, st.grids);
  out.below("harmonic_floor_change", "relative change of the non-exact residual floor under refinement",
            cf.floor_change, 0.2);
  out.flag("harmonic_floor_positive", "non-exact residual floor exceeds 10x the exact-form floor",
           cf.floor[1] > 10.0 * cf.exact_floor[1]);
  out.data = {{"recovery", rec.to_json()}, {"exact_form", ex.to_json()}, {"closed_form", cf.to_json()}};
  return out;
}

SuiteResult theorem_a_suite(std::shared_ptr<const SurfaceModel> constant, std::shared_ptr<const SurfaceModel> perturbed,
                            double lambda, const ObstructionSettings& settings) {
  SuiteResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const TheoremAReport r = theorem_a_experiment(constant, perturbed, lambda, settings);
  Table t{"obstructions", {"model", "word_index", "lambda", "period", "value", "error", "refined_value",
                           "refined_error", "significant", "survives"}, {}};
  auto rows = [&](const std::vector<ObstructionRecord>& recs, double model) {
    for (std::size_t k = 0; k < recs.size(); ++k) {
      const auto& x = recs[k];
      t.rows.push_back({model, double(k), x.lambda, x.period, x.value, x.error, x.refined_value, x.refined_error,
                        x.significant ? 1.0 : 0.0, x.survives ? 1.0 : 0.0});
    }
  };
  rows(r.constant_records, 0);
  rows(r.perturbed_records, 1);
  rows(r.geodesic_records, 2);
  out.tables.push_back(std::move(t));
  out.below("contact", "fluctuation of the contact value along a closed orbit (constant model)",
            r.contact_fluctuation, 1e-8);
  out.flag("constant_verdict", "constant model is coboundary-consistent", r.constant_verdict == "coboundary-consistent");
  out.flag("perturbed_verdict", "perturbed model shows a surviving obstruction", r.perturbed_verdict == "obstruction found");
  out.flag("geodesic_verdict", "lambda = 0 on the perturbed model is coboundary-consistent",
           r.geodesic_verdict == "coboundary-consistent");
  out.below("k_identity", "|k from 1 + k + lambda^2 k c mean(F) = 0 minus k from the contact value|",
            std::abs(r.k_identity - r.k_contact), 1e-8);
  out.below("flip_average", "|Liouville mean of a 1-form|", std::abs(r.flip_average), 1e-10);
  out.data = r.to_json();
  out.data["seconds"] = seconds_since(t0);
  return out;
}

SuiteResult theorem_b_suite(const SurfaceModel& surface, const std::vector<double>& lambdas, int N,
                            const ObstructionSettings& settings, std::uint64_t seed) {
  SuiteResult out;
  const TheoremBReport r = theorem_b_experiment(surface, lambdas, N, settings, 100, seed);
  Table t{"sweep", {"lambda", "within_bound", "period", "value", "error", "refined_value", "survives"}, {}};
  for (const auto& e : r.sweep) {
    t.rows.push_back({e.lambda, e.within_bound ? 1.0 : 0.0, e.obstruction.period, e.obstruction.value,
                      e.obstruction.error, e.obstruction.refined_value, e.obstruction.survives ? 1.0 : 0.0});
  }
  out.tables.push_back(std::move(t));
  out.below("normalization", "|max K + 2| after rescaling", std::abs(r.curvature_max + 2.0), 1e-6);
  out.flag("verdict", "non-constant F shows a surviving obstruction below lambda_0", r.verdict == "obstruction found");
  out.flag("control", "constant F is coboundary-consistent", r.control_verdict == "coboundary-consistent");
  out.flag("geodesic_limit", "obstruction magnitude shrinks towards lambda = 0", r.decays_to_zero);
  out.data = r.to_json();
  return out;
}

}  // namespace maglab
