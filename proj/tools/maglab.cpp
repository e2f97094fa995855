// maglab: configuration-driven runs of the magnetic-flow experiments.
//
//   maglab invariants --surface perturbed --out runs/inv
//   maglab cohomology theorem-a --config configs/theorem_a.json
//
// Exit status: 0 all required checks pass, 1 a required check failed,
// 2 refused (hypothesis violated), 3 bad configuration, 4 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "maglab/runner.hpp"

namespace {

using nlohmann::json;

struct Options {
  std::string config_path;
  std::string out;
  std::string surface;
  std::vector<double> lambdas;
  std::vector<std::string> sets;
  std::map<std::string, double> numbers;
};

json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw maglab::DomainError("cannot read " + path);
  return json::parse(f);
}

json surface_argument(const std::string& text) {
  if (!text.empty() && text.front() == '{') return json::parse(text);
  if (std::filesystem::exists(text)) return load_json(text);
  return text;
}

json value_argument(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

json merged_config(const Options& o) {
  json j = o.config_path.empty() ? json::object() : load_json(o.config_path);
  if (!o.surface.empty()) j["surface"] = surface_argument(o.surface);
  for (const auto& [key, value] : o.numbers) j[key] = value;
  for (const std::string& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw maglab::DomainError("--set expects key=value, got '" + s + "'");
    j[s.substr(0, eq)] = value_argument(s.substr(eq + 1));
  }
  return j;
}

void print_report(const maglab::RunReport& r) {
  for (const auto& c : r.result.checks) {
    std::printf("%-6s %-34s %12.4g <= %-12.4g %s%s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.value,
                c.tolerance, maglab::to_string(c.kind).c_str(), c.required ? "" : " (info)");
  }
  std::printf("%s: %s in %.1f s\n", r.experiment.c_str(), r.pass() ? "pass" : "FAIL", r.seconds);
}

int execute(const std::string& experiment, Options o) {
  json user;
  try {
    json raw = merged_config(o);
    if (!o.lambdas.empty() && !maglab::default_config(experiment).contains("lambdas")) {
      if (o.lambdas.size() != 1) throw maglab::DomainError("this experiment takes a single --lambda");
      raw["lambda"] = o.lambdas.front();
    } else if (!o.lambdas.empty()) {
      raw["lambdas"] = o.lambdas;
    }
    user = std::move(raw);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 3;
  }
  const std::filesystem::path out = o.out.empty() ? std::filesystem::path("runs") / experiment : std::filesystem::path(o.out);
  maglab::ExperimentConfig config;
  try {
    config = maglab::ExperimentConfig::from_json(experiment, user);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 3;
  }
  try {
    const maglab::RunReport r = maglab::run(config);
    maglab::write_outputs(r, out);
    print_report(r);
    return r.pass() ? 0 : 1;
  } catch (const maglab::HypothesisViolation& e) {
    std::filesystem::create_directories(out);
    const json refusal{{"experiment", experiment}, {"pass", false},   {"refused", true},
                       {"hypothesis", e.hypothesis}, {"detail", e.what()}, {"config", config.to_json()}};
    std::ofstream(out / "report.json") << refusal.dump(2) << "\n";
    std::ofstream(out / "config.json") << config.to_json().dump(2) << "\n";
    std::fprintf(stderr, "refused: %s\n", e.what());
    return 2;
  } catch (const maglab::DomainError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

void add_options(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON configuration file");
  cmd->add_option("-o,--out", o.out, "output directory (default runs/<experiment>)");
  cmd->add_option("--surface", o.surface, "preset (constant, perturbed, magnetic), JSON file or inline JSON");
  cmd->add_option("--lambda,--lambdas", o.lambdas, "magnetic strength(s)")->delimiter(',');
  cmd->add_option("--set", o.sets, "override any field: key=value (value parsed as JSON when possible)");
  for (const char* key : {"seed", "dt", "T", "N", "base", "fiber"}) {
    cmd->add_option_function<double>(std::string("--") + key, [&o, key](double v) { o.numbers[key] = v; },
                                     std::string("override field '") + key + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic flows on a genus-2 surface: experiments and checks"};
  app.require_subcommand(1);
  std::map<std::string, Options> options;
  std::string selected;

  auto add = [&](CLI::App* parent, const std::string& name, const std::string& experiment, const std::string& help) {
    CLI::App* cmd = parent->add_subcommand(name, help);
    add_options(cmd, options[experiment]);
    cmd->callback([&selected, experiment] { selected = experiment; });
  };
  add(&app, "surface", "surface", "curvature, magnetic density and Gauss-Bonnet checks");
  add(&app, "orbit", "orbit", "one magnetic orbit: samples and invariant residuals");
  add(&app, "invariants", "invariants", "curvature, Liouville and frame-algebra suites");
  add(&app, "splitting", "splitting", "stable/unstable slopes and the constant-curvature gap");
  add(&app, "dichotomy", "dichotomy", "fitted hyperbolicity constants (C, eta, rho)");
  add(&app, "cocycle", "cocycle", "contact value, cocycle samples, obstructions, regularity");
  add(&app, "fourier-check", "fourier-check", "fiber Fourier adjointness, locality, energy and transport");
  CLI::App* coh = app.add_subcommand("cohomology", "cohomological equation experiments");
  coh->require_subcommand(1);
  add(coh, "orbits", "cohomology-orbits", "closed orbits and orbit integrals");
  add(coh, "solve", "cohomology-solve", "synthetic coboundary, exact and non-exact forms");
  add(coh, "theorem-a", "cohomology-theorem-a", "rigidity witness on constant and perturbed curvature");
  add(coh, "theorem-b", "cohomology-theorem-b", "non-constant magnetic density below the lambda bound");

  CLI11_PARSE(app, argc, argv);
  return execute(selected, options[selected]);
}
