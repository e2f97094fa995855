#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maglab/cohomology.hpp"

namespace maglab {

enum class ToleranceKind { kFixed, kMeshMeasured, kErrorBudget };
std::string to_string(ToleranceKind kind);

// One verified property: value against tolerance.
struct CheckRecord {
  std::string name;
  std::string statement;  // the property, in words
  double value = 0.0;
  double tolerance = 0.0;
  ToleranceKind kind = ToleranceKind::kFixed;
  bool pass = false;
  bool required = true;
  nlohmann::json detail;
  nlohmann::json to_json() const;
};

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
  // Fixed 17-digit formatting, so equal data gives equal bytes.
  std::string to_csv() const;
};

struct SuiteResult {
  std::vector<CheckRecord> checks;
  std::vector<Table> tables;
  nlohmann::json data = nlohmann::json::object();

  // value <= tolerance passes.
  CheckRecord& below(const std::string& name, const std::string& statement, double value, double tolerance,
                     ToleranceKind kind = ToleranceKind::kFixed, bool required = true);
  CheckRecord& flag(const std::string& name, const std::string& statement, bool ok, bool required = true);
  void merge(SuiteResult other, const std::string& prefix = "");
  bool pass() const;  // all required checks pass
};

// Named surfaces: "constant" (K = -1, F = 1), "perturbed" (conformal bump of
// amplitude -0.1, width 0.4 at the origin), "magnetic" (K = -1, F = 1 + 0.1 bump).
SurfaceModel preset_surface(const std::string& name);
// A preset name or a surface object.
SurfaceModel surface_from_config(const nlohmann::json& j);

// Uniform states over the octagon (rejection sampling in its bounding disk).
std::vector<SMPoint> random_states(std::size_t count, std::mt19937_64& rng);

// True when K and F are both constant.
bool is_constant_model(const SurfaceModel& surface);

struct SurfaceSuiteSettings {
  int samples = 200;
  std::uint64_t seed = 1;
};
SuiteResult surface_suite(const SurfaceModel& surface, const SurfaceSuiteSettings& settings = {});

struct OrbitSuiteSettings {
  Vec3 start{0.1, 0.05, 0.3};
  double T = 20.0;
  double curvature_tolerance = 1e-6;
  double liouville_time = 10.0;
  double liouville_tolerance = 1e-5;
};
SuiteResult orbit_suite(const FlowParams& params, const OrbitSuiteSettings& settings = {});

struct InvariantSuiteSettings {
  std::vector<double> lambdas{0.0, 0.3, 0.5, 0.9};
  int orbits = 20;
  double T = 20.0;
  double curvature_tolerance = 1e-6;
  double orbit_seconds = 10.0;
  int liouville_states = 20;
  double liouville_time = 10.0;
  double liouville_tolerance = 1e-5;
  double liouville_lambda = 0.3;
  int frame_points = 50;
  double frame_step = 1e-4;
  double duality_tolerance = 1e-9;
  double bracket_tolerance = 1e-5;
  std::uint64_t seed = 1;
};
SuiteResult invariants_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                             const InvariantSuiteSettings& settings = {});

struct SplittingSuiteSettings {
  std::vector<double> lambdas{0.0, 0.3, 0.6};
  std::vector<double> trend{0.9, 0.97, 0.995};  // lambdas approaching the horocyclic limit
  int points = 6;
  double gap_tolerance = 1e-3;
  double horizon = 30.0;
  std::uint64_t seed = 1;
};
SuiteResult splitting_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                            const SplittingSuiteSettings& settings = {});

struct DichotomySuiteSettings {
  std::vector<double> lambdas{0.0, 0.3, 0.6};
  int points = 4;
  double fit_time = 6.0;
  double rate_tolerance = 0.02;  // relative
  std::uint64_t seed = 1;
};
SuiteResult dichotomy_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                            const DichotomySuiteSettings& settings = {});

struct CocycleSuiteSettings {
  double lambda = 0.5;
  int samples = 4;
  double T = 1.0;
  std::vector<Word> words;  // default g1, g1 g2
  int pieces = 10;
  int triples = 10;
  double split = 0.5;  // additivity over T1 = split, T2 = T - split
  double contact_tolerance = 1e-8;
  int regularity_points = 129;
  double regularity_span = 0.02;
  CocycleSettings cocycle;
  std::uint64_t seed = 1;
};
SuiteResult cocycle_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                          const CocycleSuiteSettings& settings = {});

struct FourierSuiteSettings {
  GridPair grids;         // base, 2 base, 4 base are used
  int pair_fields = 3;    // random band-4 pairs per refinement level
  int single_fields = 100;
  int max_mode = 6;
  int transport_fields = 20;
  std::vector<double> transport_lambdas{0.0, 0.2};
  double min_order = 1.8;
  std::uint64_t seed = 1;
};
SuiteResult fourier_suite(std::shared_ptr<const SurfaceModel> surface, const FourierSuiteSettings& settings = {});

struct OrbitsSuiteSettings {
  double lambda = 0.3;
  std::vector<Word> words;  // default g1, g2, g1 g2
  double period_tolerance = 1e-6;
};
SuiteResult closed_orbits_suite(std::shared_ptr<const SurfaceModel> surface, const IntegratorSettings& integrator,
                                const OrbitsSuiteSettings& settings = {});

struct SolveSuiteSettings {
  double lambda = 0.3;
  int g_band = 2;
  GridPair grids;
  std::vector<Word> words;  // default g1, g1 g2
  double exact_lambda = 0.2;
  double floor_lambda = 0.2;
  std::uint64_t seed = 1;
};
SuiteResult solve_suite(std::shared_ptr<const SurfaceModel> surface, const SolveSuiteSettings& settings = {});

SuiteResult theorem_a_suite(std::shared_ptr<const SurfaceModel> constant, std::shared_ptr<const SurfaceModel> perturbed,
                            double lambda, const ObstructionSettings& settings = {});
SuiteResult theorem_b_suite(const SurfaceModel& surface, const std::vector<double>& lambdas, int N,
                            const ObstructionSettings& settings = {}, std::uint64_t seed = 1);

}  // namespace maglab
