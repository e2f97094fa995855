#include "maglab/runner.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <thread>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cholmod.h>

namespace maglab {

namespace {

using nlohmann::json;

const std::string kTheoremA = "2 lambda^2 + K(x) < 0 for all x in M";
const std::string kTheoremB = "lambda^2 max(N+1,2) + K(x) < 0 for all x in M";
const std::string kAnosov = "lambda^2 F(x)^2 + K(x) < 0 for all x in M";

json common(json extra) {
  json j{{"surface", "constant"}, {"seed", 1}, {"dt", 1e-3}, {"method", "rk4"}};
  j.update(extra);
  return j;
}

bool compatible(const json& def, const json& v) {
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_array()) return v.is_array();
  return v.is_string() || v.is_object();
}

std::shared_ptr<const SurfaceModel> make_surface(const json& j) {
  return std::make_shared<const SurfaceModel>(surface_from_config(j));
}

double max_curvature(const SurfaceModel& s) { return s.curvature_range().second; }

void require_anosov_all(const SurfaceModel& s, const std::vector<double>& lambdas) {
  const double kmax = max_curvature(s);
  const auto [fmin, fmax] = s.magnetic_range();
  const double f2 = std::max(fmin * fmin, fmax * fmax);
  for (double lam : lambdas) {
    const double margin = lam * lam * f2 + kmax;
    if (margin >= 0.0) {
      throw HypothesisViolation(kAnosov, "lambda = " + std::to_string(lam) + ", margin " + std::to_string(margin));
    }
  }
}

ObstructionSettings obstruction_settings(const ExperimentConfig& c) {
  ObstructionSettings s;
  s.words = c.words("words");
  s.pieces = c.integer("pieces");
  s.cocycle.h = c.number("h");
  s.dt = c.number("dt");
  s.refine = c.fields.at("refine").get<bool>();
  return s;
}

SuiteResult dispatch(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  const auto surface = make_surface(c.fields.at("surface"));
  const IntegratorSettings in = c.integrator();
  if (e == "surface") {
    SurfaceSuiteSettings s;
    s.samples = c.integer("samples");
    s.seed = c.seed();
    return surface_suite(*surface, s);
  }
  if (e == "orbit") {
    OrbitSuiteSettings s;
    const auto p0 = c.numbers("p0");
    if (p0.size() != 3) throw DomainError("p0 must be [x, y, theta]");
    s.start = Vec3(p0[0], p0[1], p0[2]);
    s.T = c.number("T");
    s.liouville_time = c.number("liouville_time");
    return orbit_suite(FlowParams(c.number("lambda"), surface, in), s);
  }
  if (e == "invariants") {
    InvariantSuiteSettings s;
    s.lambdas = c.numbers("lambdas");
    s.orbits = c.integer("orbits");
    s.T = c.number("T");
    s.liouville_states = c.integer("liouville_states");
    s.liouville_time = c.number("liouville_time");
    s.liouville_lambda = c.number("liouville_lambda");
    s.frame_points = c.integer("frame_points");
    s.frame_step = c.number("frame_step");
    s.seed = c.seed();
    return invariants_suite(surface, in, s);
  }
  if (e == "splitting") {
    SplittingSuiteSettings s;
    s.lambdas = c.numbers("lambdas");
    s.trend = c.numbers("trend");
    s.points = c.integer("points");
    s.horizon = c.number("horizon");
    s.seed = c.seed();
    return splitting_suite(surface, in, s);
  }
  if (e == "dichotomy") {
    DichotomySuiteSettings s;
    s.lambdas = c.numbers("lambdas");
    s.points = c.integer("points");
    s.fit_time = c.number("fit_time");
    s.seed = c.seed();
    return dichotomy_suite(surface, in, s);
  }
  if (e == "cocycle") {
    CocycleSuiteSettings s;
    s.lambda = c.number("lambda");
    s.samples = c.integer("samples");
    s.T = c.number("T");
    s.words = c.words("words");
    s.pieces = c.integer("pieces");
    s.triples = c.integer("triples");
    s.split = c.number("split");
    s.regularity_points = c.integer("regularity_points");
    s.regularity_span = c.number("regularity_span");
    s.cocycle.h = c.number("h");
    s.seed = c.seed();
    return cocycle_suite(surface, in, s);
  }
  if (e == "fourier-check") {
    FourierSuiteSettings s;
    s.grids = c.grids();
    s.pair_fields = c.integer("pair_fields");
    s.single_fields = c.integer("single_fields");
    s.max_mode = c.integer("max_mode");
    s.transport_fields = c.integer("transport_fields");
    s.transport_lambdas = c.numbers("lambdas");
    s.seed = c.seed();
    return fourier_suite(surface, s);
  }
  if (e == "cohomology-orbits") {
    OrbitsSuiteSettings s;
    s.lambda = c.number("lambda");
    s.words = c.words("words");
    return closed_orbits_suite(surface, in, s);
  }
  if (e == "cohomology-solve") {
    SolveSuiteSettings s;
    s.lambda = c.number("lambda");
    s.g_band = c.integer("g_band");
    s.grids = c.grids();
    s.words = c.words("words");
    s.exact_lambda = c.number("exact_lambda");
    s.floor_lambda = c.number("floor_lambda");
    s.seed = c.seed();
    return solve_suite(surface, s);
  }
  if (e == "cohomology-theorem-a") {
    return theorem_a_suite(surface, make_surface(c.fields.at("perturbed")), c.number("lambda"),
                           obstruction_settings(c));
  }
  if (e == "cohomology-theorem-b") {
    return theorem_b_suite(*surface, c.numbers("lambdas"), c.integer("N"), obstruction_settings(c), c.seed());
  }
  throw DomainError("unknown experiment '" + e + "'");
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"surface",           "orbit",           "invariants",
                                              "splitting",         "dichotomy",       "cocycle",
                                              "fourier-check",     "cohomology-orbits", "cohomology-solve",
                                              "cohomology-theorem-a", "cohomology-theorem-b"};
  return names;
}

json default_config(const std::string& e) {
  const json obstruction{{"words", {"g1", "g1 g2"}}, {"pieces", 10}, {"h", 2e-2}, {"refine", true}};
  if (e == "surface") return common({{"samples", 200}});
  if (e == "orbit") {
    return common({{"lambda", 0.5}, {"p0", {0.1, 0.05, 0.3}}, {"T", 20.0}, {"liouville_time", 10.0}});
  }
  if (e == "invariants") {
    return common({{"lambdas", {0.0, 0.3, 0.5, 0.9}},
                   {"orbits", 20},
                   {"T", 20.0},
                   {"liouville_states", 20},
                   {"liouville_time", 10.0},
                   {"liouville_lambda", 0.3},
                   {"frame_points", 50},
                   {"frame_step", 1e-4}});
  }
  if (e == "splitting") {
    return common(
        {{"lambdas", {0.0, 0.3, 0.6}}, {"trend", {0.9, 0.97, 0.995}}, {"points", 6}, {"horizon", 30.0}});
  }
  if (e == "dichotomy") return common({{"lambdas", {0.0, 0.3, 0.6}}, {"points", 4}, {"fit_time", 6.0}});
  if (e == "cocycle") {
    return common({{"lambda", 0.5},
                   {"samples", 4},
                   {"T", 1.0},
                   {"words", {"g1", "g1 g2"}},
                   {"pieces", 10},
                   {"triples", 10},
                   {"split", 0.5},
                   {"regularity_points", 129},
                   {"regularity_span", 0.02},
                   {"h", 2e-2}});
  }
  if (e == "fourier-check") {
    return common({{"base", 24},
                   {"fiber", 32},
                   {"pair_fields", 3},
                   {"single_fields", 100},
                   {"max_mode", 6},
                   {"transport_fields", 20},
                   {"lambdas", {0.0, 0.2}}});
  }
  if (e == "cohomology-orbits") return common({{"lambda", 0.3}, {"words", {"g1", "g2", "g1 g2"}}});
  if (e == "cohomology-solve") {
    return common({{"lambda", 0.3},
                   {"g_band", 2},
                   {"base", 24},
                   {"fiber", 32},
                   {"words", {"g1", "g1 g2"}},
                   {"exact_lambda", 0.2},
                   {"floor_lambda", 0.2}});
  }
  if (e == "cohomology-theorem-a") {
    json j = common({{"perturbed", "perturbed"}, {"lambda", 0.15}});
    j.update(obstruction);
    return j;
  }
  if (e == "cohomology-theorem-b") {
    json j = common({{"lambdas", {0.02, 0.05, 0.1, 0.2, 0.3}}, {"N", 1}});
    j["surface"] = "magnetic";
    j.update(obstruction);
    return j;
  }
  throw DomainError("unknown experiment '" + e + "'");
}

ExperimentConfig ExperimentConfig::from_json(const std::string& experiment, const json& user) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.fields = default_config(experiment);
  if (user.is_null()) return c;
  if (!user.is_object()) throw DomainError("configuration must be a JSON object");
  for (const auto& [key, value] : user.items()) {
    if (key == "experiment") {
      if (!value.is_string() || value.get<std::string>() != experiment) {
        throw DomainError("configuration is for experiment " + value.dump() + ", not '" + experiment + "'");
      }
      continue;
    }
    if (!c.fields.contains(key)) throw DomainError("unknown field '" + key + "' for experiment '" + experiment + "'");
    if (!compatible(c.fields[key], value)) {
      throw DomainError("field '" + key + "' has the wrong type (" + value.dump() + ")");
    }
    c.fields[key] = value;
  }
  if (!(c.number("dt") > 0.0)) throw DomainError("dt must be positive");
  const std::string method = c.fields.at("method").get<std::string>();
  if (method != "rk4" && method != "adaptive") throw DomainError("method must be 'rk4' or 'adaptive'");
  return c;
}

json ExperimentConfig::to_json() const {
  json j = fields;
  j["experiment"] = experiment;
  return j;
}

double ExperimentConfig::number(const std::string& key) const { return fields.at(key).get<double>(); }

int ExperimentConfig::integer(const std::string& key) const {
  const double v = number(key);
  if (v != std::floor(v)) throw DomainError("field '" + key + "' must be an integer");
  return static_cast<int>(v);
}

std::vector<double> ExperimentConfig::numbers(const std::string& key) const {
  return fields.at(key).get<std::vector<double>>();
}

std::vector<Word> ExperimentConfig::words(const std::string& key) const {
  std::vector<Word> out;
  for (const auto& w : fields.at(key)) out.push_back(parse_word(w.get<std::string>()));
  return out;
}

IntegratorSettings ExperimentConfig::integrator() const {
  IntegratorSettings s;
  s.dt = number("dt");
  s.method = fields.at("method").get<std::string>() == "adaptive" ? Method::kAdaptive : Method::kRK4;
  return s;
}

GridPair ExperimentConfig::grids() const {
  GridPair g;
  g.coarse = integer("base");
  g.fiber = integer("fiber");
  return g;
}

std::uint64_t ExperimentConfig::seed() const { return static_cast<std::uint64_t>(integer("seed")); }

void check_hypotheses(const ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (e == "splitting") {
    auto all = c.numbers("lambdas");
    for (double t : c.numbers("trend")) all.push_back(t);
    require_anosov_all(surface_from_config(c.fields.at("surface")), all);
  } else if (e == "dichotomy") {
    require_anosov_all(surface_from_config(c.fields.at("surface")), c.numbers("lambdas"));
  } else if (e == "cocycle" || e == "cohomology-orbits") {
    require_anosov_all(surface_from_config(c.fields.at("surface")), {c.number("lambda")});
  } else if (e == "cohomology-theorem-a") {
    const double lam = c.number("lambda");
    for (const char* key : {"surface", "perturbed"}) {
      const double margin = 2.0 * lam * lam + max_curvature(surface_from_config(c.fields.at(key)));
      if (margin >= 0.0) {
        throw HypothesisViolation(kTheoremA, std::string(key) + " model, margin " + std::to_string(margin));
      }
    }
  } else if (e == "cohomology-solve") {
    const double lam = c.number("lambda");
    const int N = c.integer("g_band") + 1;
    const double margin = lam * lam * std::max(N + 1, 2) + max_curvature(surface_from_config(c.fields.at("surface")));
    if (margin >= 0.0) throw HypothesisViolation(kTheoremB, "N = " + std::to_string(N) + ", margin " + std::to_string(margin));
  } else if (e == "cohomology-theorem-b") {
    const int N = c.integer("N");
    const auto normalized = normalize_curvature(surface_from_config(c.fields.at("surface"))).first;
    const double kmax = max_curvature(*normalized);
    for (double lam : c.numbers("lambdas")) {
      const double margin = lam * lam * std::max(N + 1, 2) + kmax;
      if (margin >= 0.0) {
        throw HypothesisViolation(kTheoremB, "lambda = " + std::to_string(lam) + ", margin " + std::to_string(margin));
      }
    }
  }
}

json RunReport::to_json() const {
  json checks = json::array();
  for (const auto& c : result.checks) checks.push_back(c.to_json());
  json tables = json::array();
  for (const auto& t : result.tables) tables.push_back(t.name + ".csv");
  return {{"experiment", experiment}, {"pass", pass()},           {"checks", checks},
          {"data", result.data},      {"tables", tables},         {"config", config},
          {"environment", environment}, {"timings", {{"total_seconds", seconds}}}};
}

json environment_fingerprint() {
  utsname u{};
  uname(&u);
  return {{"compiler", __VERSION__},
          {"cplusplus", __cplusplus},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"cholmod", std::to_string(CHOLMOD_MAIN_VERSION) + "." + std::to_string(CHOLMOD_SUB_VERSION) + "." +
                          std::to_string(CHOLMOD_SUBSUB_VERSION)},
          {"system", std::string(u.sysname) + " " + u.release + " " + u.machine},
          {"hardware_threads", std::thread::hardware_concurrency()}};
}

RunReport run(const ExperimentConfig& config) {
  check_hypotheses(config);
  RunReport r;
  r.experiment = config.experiment;
  r.config = config.to_json();
  r.environment = environment_fingerprint();
  const auto t0 = std::chrono::steady_clock::now();
  r.result = dispatch(config);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

void write_outputs(const RunReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw DomainError("cannot write " + (dir / name).string());
    f << text;
  };
  put("report.json", report.to_json().dump(2) + "\n");
  put("config.json", report.config.dump(2) + "\n");
  for (const auto& t : report.result.tables) put(t.name + ".csv", t.to_csv());
}

}  // namespace maglab
