// Acceptance run: one line per criterion, exit status 1 if any fails.
//
//   acceptance            all criteria
//   acceptance 4 7        selected criteria

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maglab/suites.hpp"

#ifndef MAGLAB_CLI
#define MAGLAB_CLI "maglab"
#endif

using namespace maglab;

namespace {

struct Outcome {
  bool pass = true;
  std::string summary;
  std::vector<std::string> failures;
};

// Fold named records of a suite into an outcome. Every name must be present.
void require(Outcome& o, const SuiteResult& r, const std::vector<std::string>& names, const std::string& prefix = "") {
  for (const std::string& n : names) {
    bool found = false;
    for (const CheckRecord& c : r.checks) {
      if (c.name != prefix + n) continue;
      found = true;
      if (!c.pass) {
        o.pass = false;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s = %.4g > %.4g (%s)", c.name.c_str(), c.value, c.tolerance,
                      to_string(c.kind).c_str());
        o.failures.push_back(buf);
      }
    }
    if (!found) {
      o.pass = false;
      o.failures.push_back("missing record " + prefix + n);
    }
  }
}

// All records whose name starts with `stem`.
std::vector<std::string> with_stem(const SuiteResult& r, const std::string& stem) {
  std::vector<std::string> out;
  for (const CheckRecord& c : r.checks) {
    if (c.name.rfind(stem, 0) == 0) out.push_back(c.name);
  }
  return out;
}

const CheckRecord* record(const SuiteResult& r, const std::string& name) {
  for (const CheckRecord& c : r.checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double worst(const SuiteResult& r, const std::vector<std::string>& names) {
  double w = 0.0;
  for (const auto& n : names) {
    if (const CheckRecord* c = record(r, n)) w = std::max(w, c->value);
  }
  return w;
}

std::shared_ptr<const SurfaceModel> surface(const std::string& name) {
  return std::make_shared<const SurfaceModel>(preset_surface(name));
}

// Shared runs, computed on first use.
struct Runs {
  std::unique_ptr<SuiteResult> inv_constant, inv_perturbed, four_constant, four_perturbed, solve;
  const SuiteResult& invariants(bool perturbed) {
    auto& slot = perturbed ? inv_perturbed : inv_constant;
    if (!slot) {
      InvariantSuiteSettings st;
      if (perturbed) st.lambdas.clear();
      slot = std::make_unique<SuiteResult>(
          invariants_suite(surface(perturbed ? "perturbed" : "constant"), IntegratorSettings{}, st));
    }
    return *slot;
  }
  const SuiteResult& fourier(bool perturbed) {
    auto& slot = perturbed ? four_perturbed : four_constant;
    if (!slot) slot = std::make_unique<SuiteResult>(fourier_suite(surface(perturbed ? "perturbed" : "constant")));
    return *slot;
  }
  const SuiteResult& solved() {
    if (!solve) solve = std::make_unique<SuiteResult>(solve_suite(surface("constant")));
    return *solve;
  }
};

Runs runs;

Outcome criterion1() {
  Outcome o;
  const SuiteResult& r = runs.invariants(false);
  const auto curv = with_stem(r, "curvature_lambda_");
  const auto secs = with_stem(r, "orbit_seconds_lambda_");
  if (curv.size() != 4) o.pass = false, o.failures.push_back("expected four lambda values");
  require(o, r, curv);
  require(o, r, secs);
  o.summary = fmt("max |k_g - lambda| = %.2e (tol 1e-6), slowest orbit %.2f s (tol 10 s)", worst(r, curv), worst(r, secs));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const SuiteResult& a = runs.invariants(false);
  const SuiteResult& b = runs.invariants(true);
  require(o, a, {"liouville"});
  require(o, b, {"liouville"});
  o.summary = fmt("|det - 1| constant %.2e, perturbed %.2e (tol 1e-5)", record(a, "liouville")->value,
                  record(b, "liouville")->value);
  return o;
}

Outcome criterion3() {
  Outcome o;
  const std::vector<std::string> names{"duality", "bracket_vx", "bracket_vh", "bracket_xh"};
  const SuiteResult& a = runs.invariants(false);
  const SuiteResult& b = runs.invariants(true);
  require(o, a, names);
  require(o, b, names);
  o.summary = fmt("duality %.2e (tol 1e-9), brackets %.2e (tol 1e-5)",
                  std::max(record(a, "duality")->value, record(b, "duality")->value),
                  std::max(worst(a, {"bracket_vx", "bracket_vh", "bracket_xh"}),
                           worst(b, {"bracket_vx", "bracket_vh", "bracket_xh"})));
  return o;
}

Outcome criterion4() {
  Outcome o;
  const auto s = surface("constant");
  const SuiteResult sp = splitting_suite(s, IntegratorSettings{});
  const SuiteResult di = dichotomy_suite(s, IntegratorSettings{});
  const auto gaps = with_stem(sp, "gap_lambda_");
  require(o, sp, gaps);
  require(o, sp, {"degeneration"});
  auto rates = with_stem(di, "eta_lambda_");
  for (const auto& n : with_stem(di, "rho_lambda_")) rates.push_back(n);
  require(o, di, rates);
  if (gaps.size() != 3) o.pass = false, o.failures.push_back("expected three lambda values");
  o.summary = fmt("gap error %.2e (tol 1e-3), rate error %.2e (tol 2%%), degeneration trend %.0f", worst(sp, gaps),
                  worst(di, rates), record(sp, "degeneration") ? record(sp, "degeneration")->value : 0.0);
  return o;
}

Outcome criterion5() {
  Outcome o;
  const SuiteResult r = cocycle_suite(surface("constant"), IntegratorSettings{});
  require(o, r, {"contact", "obstructions_vanish", "additivity"});
  o.summary = fmt("contact %.2e (tol 1e-8), additivity %.3f of budget, obstructions vanish %.0f",
                  record(r, "contact")->value, record(r, "additivity")->value, record(r, "obstructions_vanish")->value);
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const SuiteResult r = theorem_a_suite(surface("constant"), surface("perturbed"), 0.15);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(o, r, {"perturbed_verdict", "geodesic_verdict", "constant_verdict"});
  if (secs >= 600.0) o.pass = false, o.failures.push_back(fmt("runtime %.0f s >= 600 s", secs));
  double best = 0.0;
  for (const auto& rec : r.data["perturbed_records"]) {
    if (rec["survives"].get<bool>()) {
      best = std::max(best, std::abs(rec["value"].get<double>()) / rec["error"].get<double>());
    }
  }
  o.summary = fmt("surviving obstruction at %.0fx its error (need > 10x), margin 2l^2+maxK = %.3f, %.0f s", best,
                  r.data["margin_perturbed"].get<double>(), secs);
  return o;
}

Outcome criterion7() {
  Outcome o;
  const std::vector<std::string> names{"adjointness", "tau_grid_order", "mode_locality", "energy_inequality"};
  const SuiteResult& a = runs.fourier(false);
  const SuiteResult& b = runs.fourier(true);
  require(o, a, names);
  require(o, b, names);
  o.summary = fmt("tau_grid order %.2f / %.2f (need >= 1.8), perturbed A = %.3f", a.data["tau_grid_order"].get<double>(),
                  b.data["tau_grid_order"].get<double>(), b.data["A"].get<double>());
  return o;
}

Outcome criterion8() {
  Outcome o;
  const SuiteResult& a = runs.fourier(false);
  const SuiteResult& b = runs.fourier(true);
  require(o, a, {"mode_transport"});
  require(o, b, {"mode_transport"});
  o.summary = fmt("max per-mode difference %.2e (tau_grid %.2e)",
                  std::max(record(a, "mode_transport")->value, record(b, "mode_transport")->value),
                  std::min(record(a, "mode_transport")->tolerance, record(b, "mode_transport")->tolerance));
  return o;
}

Outcome criterion9() {
  Outcome o;
  const SuiteResult& r = runs.solved();
  require(o, r,
          {"tail", "tail_order", "support", "exact_form_support", "exact_form_convergence", "harmonic_floor_change",
           "harmonic_floor_positive"});
  o.summary = fmt("tail order %.2f (need >= 1.5), floor change %.3f (need < 0.2), exact off-H0 %.2e",
                  -record(r, "tail_order")->value, record(r, "harmonic_floor_change")->value,
                  record(r, "exact_form_support")->value);
  return o;
}

Outcome criterion10() {
  Outcome o;
  const SuiteResult& r = runs.solved();
  require(o, r, {"recurrence"});
  const auto& rec = r.data["recovery"];
  o.summary = "tau_ineq " + fmt("%.3g", rec["recurrence"]["tau_ineq"].get<double>()) + ", both refinement levels checked";
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome criterion11() {
  Outcome o;
  const auto root = std::filesystem::temp_directory_path() / "maglab_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::size_t compared = 0;
  const std::vector<std::string> commands{"invariants --set lambdas=[0.5] --set orbits=3 --set liouville_states=3",
                                          "cohomology solve"};
  for (std::size_t k = 0; k < commands.size(); ++k) {
    std::array<std::filesystem::path, 2> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      dirs[static_cast<std::size_t>(rep)] = root / (std::to_string(k) + "_" + std::to_string(rep));
      const std::string cmd = std::string("\"") + MAGLAB_CLI + "\" " + commands[k] + " --out \"" +
                              dirs[static_cast<std::size_t>(rep)].string() + "\" > /dev/null";
      if (std::system(cmd.c_str()) != 0) {
        o.pass = false;
        o.failures.push_back("command failed: " + cmd);
      }
    }
    for (const auto& e : std::filesystem::directory_iterator(dirs[0])) {
      if (e.path().extension() != ".csv") continue;
      ++compared;
      if (slurp(e.path()) != slurp(dirs[1] / e.path().filename())) {
        o.pass = false;
        o.failures.push_back("differs: " + e.path().filename().string());
      }
    }
  }
  if (compared == 0) o.pass = false, o.failures.push_back("no CSV outputs to compare");
  o.summary = std::to_string(compared) + " CSV files byte-identical across repeated runs";
  std::filesystem::remove_all(root);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"magnetic-geodesic invariant", criterion1},   {"Liouville preservation", criterion2},
      {"frame algebra", criterion3},                 {"splitting oracle and dichotomy", criterion4},
      {"contact and cocycle, constant case", criterion5}, {"rigidity witness", criterion6},
      {"fiber Fourier adjointness and energy", criterion7}, {"mode transport identity", criterion8},
      {"synthetic coboundary recovery", criterion9}, {"recurrence inequality", criterion10},
      {"determinism", criterion11}};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %-38s %s [%.0f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.summary.c_str(), secs);
    for (const auto& f : o.failures) std::printf("             - %s\n", f.c_str());
    std::fflush(stdout);
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
