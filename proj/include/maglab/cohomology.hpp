#pragma once

#include <array>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "maglab/cocycle.hpp"
#include "maglab/fiber_fourier.hpp"
#include "maglab/periodic.hpp"

namespace maglab {

// Closed forms dual to the closed geodesics of the four generators: each is
// b(d) dd, with d the signed distance to a lift of the geodesic and b a unit
// mass bump of half-width `width`, summed over the lifts.
class CollarBasis {
 public:
  CollarBasis(std::shared_ptr<const FuchsianGroup> group, double width = 0.4);

  double width() const { return width_; }
  const FuchsianGroup& group() const { return *group_; }
  // dz-component of form k at z (any disk point).
  cplx dz(int k, cplx z) const;
  std::size_t lift_count(int k) const { return lifts_[static_cast<std::size_t>(k)].size(); }

 private:
  struct Lift {
    cplx center;     // closest point to the origin
    cplx direction;  // unit tangent there, towards the attracting end
  };
  cplx dz_near(int k, cplx z) const;

  std::shared_ptr<const FuchsianGroup> group_;
  double width_;
  double bump_norm_ = 1.0;
  std::array<std::vector<Lift>, FuchsianGroup::kGenerators> lifts_;
};

// omega = dh + sum_k a_k collar_k. Its restriction to SM lies in modes +-1:
// (omega)_1 = e^{-Phi} omega_z and (omega)_{-1} its conjugate.
class OneForm {
 public:
  OneForm() = default;
  static OneForm exact(InvariantField potential);
  static OneForm closed(std::shared_ptr<const CollarBasis> basis, const std::array<double, 4>& coefficients);

  OneForm& operator+=(const OneForm& o);
  friend OneForm operator+(OneForm a, const OneForm& b) { return a += b; }

  bool is_exact() const;
  const std::optional<InvariantField>& potential() const { return potential_; }
  const std::array<double, 4>& harmonic() const { return harmonic_; }

  // omega = omega_z dz + conj(omega_z) dzbar.
  cplx dz(cplx z) const;
  // omega_x(v) for the unit vector of a chart state.
  double on(const SurfaceModel& surface, const Vec3& state) const;
  FourierField restriction(std::shared_ptr<const SMGrid> grid) const;
  // Integral along the hyperbolic geodesic from a to b.
  double line_integral(cplx a, cplx b, int panels = 96) const;
  // Integrals over the loops base -> g_k(base), k = 1..4.
  std::array<double, 4> periods(const FuchsianGroup& group, cplx base = {0.13, 0.07}) const;

 private:
  std::optional<InvariantField> potential_;
  std::shared_ptr<const CollarBasis> basis_;
  std::array<double, 4> harmonic_{0.0, 0.0, 0.0, 0.0};
};

// ---------------------------------------------------------------- transport

struct TransportSettings {
  int band = 6;                  // unknown modes |n| <= band
  double regularization = 1e-12;  // relative Tikhonov shift
  double mean_penalty = 1.0;     // weight of the zero-mean row
  int refinement_sweeps = 4;
  double solver_tolerance = 1e-10;  // relative normal-equation residual
};

struct TransportSolution {
  FourierField g;
  int band = 0;
  double residual = 0.0;           // ||X_lambda g - f||
  double relative_residual = 0.0;  // residual / ||f||
  std::vector<double> profile;     // ||g_n||, n = -band..band
  std::vector<double> residual_profile;  // ||(X_lambda g - f)_n||, n = -band-1..band+1
  double mean = 0.0;               // <g, 1>
  int iterations = 0;              // refinement sweeps of the direct solve
  std::vector<double> residual_history;

  double mode_norm(int n) const;
  double tail(int N) const;  // sqrt(sum_{|n| >= N} ||g_n||^2)
};

// Weighted least squares for X_lambda g = f over |n| <= band with <g, 1> = 0.
TransportSolution solve_transport(const FourierField& f, double lambda, const TransportSettings& settings = {});

struct SupportCheck {
  bool pass = true;
  int N = 0;
  double bound = 0.0;
  std::vector<int> offending;
  std::vector<double> profile;
};
// ||g_n|| <= max(tau_solve, c_decay ||g|| mesh^2) for |n| >= N.
SupportCheck fourier_support_check(const TransportSolution& sol, int N, double tau_solve, double c_decay = 1.0);

// g_true = sum_{|n| <= band} g_n (real) and f = X_lambda g_true from exact jets.
struct SyntheticCoboundary {
  FourierField g_true;
  FourierField f;
  int band = 0;
  double lambda = 0.0;
  std::vector<ModeFieldSpec> specs;
  std::vector<cplx> coefficients;
  // Pointwise f at a chart state.
  double evaluate(const SurfaceModel& surface, const Vec3& state) const;
};
SyntheticCoboundary synthesize_coboundary(std::shared_ptr<const SMGrid> grid, int band, double lambda,
                                          std::mt19937_64& rng);

// Mean-aligned Liouville distance between two fields.
double aligned_distance(const FourierField& a, const FourierField& b);

// ---------------------------------------------------------------- experiments

struct GridPair {
  int coarse = 24;
  int fiber = 32;
};

struct RecoveryRun {
  int base = 0;
  double error = 0.0;     // mean-aligned ||g - g_true||
  double tail = 0.0;      // sqrt(sum_{|n| >= N} ||g_n||^2)
  double residual = 0.0;
  std::vector<double> profile;
};

// Synthetic coboundary recovery on a refinement pair.
struct RecoveryReport {
  double lambda = 0.0;
  int N = 0;               // band of f
  double margin = 0.0;     // lambda^2 max(N+1, 2) + max K
  std::array<RecoveryRun, 2> runs;
  double tau_solve = 0.0;  // error bound for the fine run
  double tail_order = 0.0;
  bool tail_below_tau = false;
  SupportCheck support;     // on the fine run
  double tau_ineq = 0.0;
  std::array<RecurrenceReport, 2> recurrence;
  bool recurrence_ok = false;
  std::string recurrence_error;
  std::vector<double> orbit_integrals;  // of f over closed orbits
  std::vector<double> orbit_errors;
  bool pass() const;
  nlohmann::json to_json() const;
};
RecoveryReport coboundary_recovery(std::shared_ptr<const SurfaceModel> surface, double lambda, int g_band,
                                   const GridPair& grids, std::uint64_t seed, const std::vector<Word>& words = {});

// Exact form dh: the solution lies in mode 0 and matches h.
struct ExactFormReport {
  double lambda = 0.0;
  std::array<double, 2> off_zero{0.0, 0.0};   // sqrt(sum_{n != 0} ||g_n||^2)
  std::array<double, 2> potential_error{0.0, 0.0};
  std::array<double, 2> residual{0.0, 0.0};
  double tau_solve = 0.0;
  std::array<double, 4> periods{};
  bool pass() const;
  nlohmann::json to_json() const;
};
ExactFormReport exact_form_recovery(std::shared_ptr<const SurfaceModel> surface, double lambda, const GridPair& grids,
                                    std::uint64_t seed);

// Closed non-exact form: least-squares floor under refinement.
struct ClosedFormReport {
  double lambda = 0.0;
  int band = 0;
  std::array<double, 4> coefficients{};
  std::array<double, 4> periods{};
  std::array<double, 2> floor{0.0, 0.0};           // residual / ||f||
  double floor_change = 0.0;                       // relative change under refinement
  std::array<double, 2> exact_floor{0.0, 0.0};     // same for an exact form (control)
  bool pass() const;
  nlohmann::json to_json() const;
};
ClosedFormReport closed_form_floor(std::shared_ptr<const SurfaceModel> surface, double lambda, const GridPair& grids,
                                   int band = 2);

struct ObstructionRecord {
  std::string model;
  std::string word;
  double lambda = 0.0;
  double period = 0.0;
  double value = 0.0;
  double error = 0.0;
  bool significant = false;
  bool refined = false;
  double refined_value = 0.0;
  double refined_error = 0.0;
  bool survives = false;  // significant at both resolutions with consistent values
  nlohmann::json to_json() const;
};

struct ObstructionSettings {
  std::vector<Word> words;  // default: g1 and g1 g2
  int pieces = 10;
  CocycleSettings cocycle;
  double dt = 1e-3;
  bool refine = true;  // repeat significant cases at dt/2, h/2
};
ObstructionRecord measure_obstruction(std::shared_ptr<const SurfaceModel> surface, const std::string& model,
                                      double lambda, const Word& word, const ObstructionSettings& settings);

struct TheoremAReport {
  double lambda = 0.0;
  double margin_constant = 0.0;   // 2 lambda^2 + max K
  double margin_perturbed = 0.0;
  double contact_fluctuation = 0.0;
  double contact_expected = 0.0;
  double contact_value = 0.0;
  std::vector<ObstructionRecord> constant_records;
  std::vector<ObstructionRecord> perturbed_records;
  std::vector<ObstructionRecord> geodesic_records;  // perturbed model at lambda = 0
  double flip_average = 0.0;  // Liouville mean of a 1-form
  double k_identity = 0.0;    // from 1 + k + lambda^2 k c int F = 0
  double k_contact = 0.0;     // from the contact value
  std::string constant_verdict;
  std::string perturbed_verdict;
  std::string geodesic_verdict;
  bool pass() const;
  nlohmann::json to_json() const;
};
TheoremAReport theorem_a_experiment(std::shared_ptr<const SurfaceModel> constant,
                                    std::shared_ptr<const SurfaceModel> perturbed, double lambda,
                                    const ObstructionSettings& settings = {});

// Rescale the metric so that max K = -2. Returns the shift s (phi -> phi + s).
std::pair<std::shared_ptr<const SurfaceModel>, double> normalize_curvature(const SurfaceModel& surface);

struct LambdaBound {
  double A = 0.0;
  double c = 0.0;  // max ratio over random fields
  int N = 1;
  double closed_form = 0.0;  // largest lambda allowed by both inequalities
  int samples = 0;
};
// Estimate c with ||eta-(F) g||^2 <= c ||g||^2 and ||F g||^2 <= c ||g||^2.
LambdaBound lambda_bound(std::shared_ptr<const SMGrid> grid, int N, int samples, std::uint64_t seed);

struct SweepEntry {
  double lambda = 0.0;
  bool within_bound = false;
  ObstructionRecord obstruction;
};
struct TheoremBReport {
  double scale_shift = 0.0;
  double curvature_max = 0.0;
  std::pair<double, double> magnetic_range{0.0, 0.0};
  LambdaBound bound;
  double lambda0 = 0.0;  // largest tested lambda satisfying the inequalities
  std::vector<SweepEntry> sweep;
  ObstructionRecord control;  // F constant
  std::string verdict;
  std::string control_verdict;
  bool decays_to_zero = false;
  bool pass() const;
  nlohmann::json to_json() const;
};
TheoremBReport theorem_b_experiment(const SurfaceModel& surface, const std::vector<double>& lambdas, int N,
                                    const ObstructionSettings& settings = {}, int bound_samples = 100,
                                    std::uint64_t seed = 1);

}  // namespace maglab
