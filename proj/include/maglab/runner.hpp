#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maglab/suites.hpp"

namespace maglab {

// Experiment names accepted by run().
const std::vector<std::string>& experiment_names();

// Defaults for one experiment. Every field run() reads appears here.
nlohmann::json default_config(const std::string& experiment);

// Validated configuration: defaults merged with the user's fields.
struct ExperimentConfig {
  std::string experiment;
  nlohmann::json fields;

  // Unknown keys and mistyped values raise DomainError.
  static ExperimentConfig from_json(const std::string& experiment, const nlohmann::json& user);
  nlohmann::json to_json() const;

  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::vector<Word> words(const std::string& key) const;
  IntegratorSettings integrator() const;
  GridPair grids() const;
  std::uint64_t seed() const;
};

// Throws HypothesisViolation, naming the hypothesis, when the configuration
// lies outside the range the experiment is stated for. Nothing is computed.
void check_hypotheses(const ExperimentConfig& config);

struct RunReport {
  std::string experiment;
  SuiteResult result;
  nlohmann::json config;
  nlohmann::json environment;
  double seconds = 0.0;
  bool pass() const { return result.pass(); }
  nlohmann::json to_json() const;
};

nlohmann::json environment_fingerprint();

// check_hypotheses, then the experiment.
RunReport run(const ExperimentConfig& config);

// report.json, config.json and one <table>.csv per table.
void write_outputs(const RunReport& report, const std::filesystem::path& dir);

}  // namespace maglab
