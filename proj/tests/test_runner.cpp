#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "maglab/runner.hpp"

using namespace maglab;
using nlohmann::json;

namespace {

std::string read(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::string refusal(const std::string& experiment, const json& user) {
  try {
    check_hypotheses(ExperimentConfig::from_json(experiment, user));
  } catch (const HypothesisViolation& e) {
    return e.hypothesis;
  }
  return "";
}

}  // namespace

TEST_SUITE("runner") {

TEST_CASE("every experiment has defaults that validate") {
  for (const std::string& e : experiment_names()) {
    const ExperimentConfig c = ExperimentConfig::from_json(e, json::object());
    CHECK(c.to_json()["experiment"] == e);
    CHECK(c.fields.contains("surface"));
    CHECK(c.fields.contains("seed"));
  }
  CHECK_THROWS_AS(default_config("nope"), DomainError);
}

TEST_CASE("user fields override defaults, unknown or mistyped fields are rejected") {
  const ExperimentConfig c = ExperimentConfig::from_json("orbit", {{"lambda", 0.25}, {"dt", 5e-4}});
  CHECK(c.number("lambda") == 0.25);
  CHECK(c.integrator().dt == 5e-4);
  CHECK_THROWS_AS(ExperimentConfig::from_json("orbit", {{"lambdaa", 0.1}}), DomainError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("orbit", {{"lambda", "big"}}), DomainError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("orbit", {{"dt", -1.0}}), DomainError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("orbit", {{"experiment", "surface"}}), DomainError);
  CHECK_THROWS_AS(ExperimentConfig::from_json("orbit", {{"seed", 1.5}}).seed(), DomainError);
}

TEST_CASE("gating refuses outside the hypotheses and names them") {
  CHECK(refusal("cohomology-theorem-a", {{"lambda", 0.8}}) == "2 lambda^2 + K(x) < 0 for all x in M");
  CHECK(refusal("cohomology-theorem-a", {{"lambda", 0.5}}).empty());
  // Both models are checked; the perturbed one has max K = -0.847, so the
  // threshold is sqrt(0.847 / 2) = 0.651.
  CHECK(refusal("cohomology-theorem-a", {{"lambda", 0.64}}).empty());
  CHECK(refusal("cohomology-theorem-a", {{"lambda", 0.66}}) == "2 lambda^2 + K(x) < 0 for all x in M");
  CHECK(refusal("cohomology-theorem-a", {{"lambda", 0.66}, {"perturbed", "constant"}}).empty());
  // g_band 2 gives N = 3: 4 lambda^2 - 1 < 0 needs lambda < 0.5.
  CHECK(refusal("cohomology-solve", {{"lambda", 0.49}}).empty());
  CHECK(refusal("cohomology-solve", {{"lambda", 0.51}}) == "lambda^2 max(N+1,2) + K(x) < 0 for all x in M");
  // After rescaling to max K = -2 with N = 1: 2 lambda^2 - 2 < 0 needs lambda < 1.
  CHECK(refusal("cohomology-theorem-b", {{"lambdas", {0.1, 0.99}}}).empty());
  CHECK(refusal("cohomology-theorem-b", {{"lambdas", {0.1, 1.01}}}) ==
        "lambda^2 max(N+1,2) + K(x) < 0 for all x in M");
  CHECK(refusal("splitting", {{"trend", {0.9, 1.0}}}) == "lambda^2 F(x)^2 + K(x) < 0 for all x in M");
  CHECK(refusal("cocycle", {{"lambda", 1.2}}) == "lambda^2 F(x)^2 + K(x) < 0 for all x in M");
  CHECK(refusal("invariants", {{"lambdas", {0.9, 1.5}}}).empty());
}

TEST_CASE("run produces records with tolerance provenance and writes outputs") {
  const ExperimentConfig c = ExperimentConfig::from_json("orbit", {{"T", 2.0}, {"liouville_time", 1.0}});
  const RunReport r = run(c);
  CHECK(r.pass());
  const json j = r.to_json();
  for (const auto& rec : j["checks"]) {
    CHECK(rec.contains("statement"));
    const std::string kind = rec["tolerance_kind"];
    CHECK((kind == "fixed" || kind == "mesh-measured" || kind == "error-budget"));
  }
  CHECK(j["environment"].contains("compiler"));
  CHECK(j["timings"].contains("total_seconds"));

  const auto dir = std::filesystem::temp_directory_path() / "maglab_runner_test";
  std::filesystem::remove_all(dir);
  write_outputs(r, dir);
  CHECK(json::parse(read(dir / "config.json")) == c.to_json());
  CHECK(json::parse(read(dir / "report.json"))["pass"] == true);
  const std::string first = read(dir / "orbit.csv");
  write_outputs(run(c), dir);
  CHECK(read(dir / "orbit.csv") == first);
  std::filesystem::remove_all(dir);
}

TEST_CASE("CSV formatting round-trips doubles") {
  Table t{"t", {"a", "b"}, {{0.1, 1.0 / 3.0}, {-2.5e-300, 7.0}}};
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("a,b\n", 0) == 0);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  const auto comma = line.find(',');
  CHECK(std::stod(line.substr(0, comma)) == 0.1);
  CHECK(std::stod(line.substr(comma + 1)) == 1.0 / 3.0);
}

TEST_CASE("suite records: pass semantics") {
  SuiteResult s;
  s.below("a", "x", 1.0, 2.0);
  s.below("b", "x", std::nan(""), 2.0);
  CHECK(s.checks[0].pass);
  CHECK(!s.checks[1].pass);
  CHECK(!s.pass());
  s.checks[1].required = false;
  CHECK(s.pass());
}

}  // TEST_SUITE
