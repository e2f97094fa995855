#pragma once

#include <functional>
#include <string>
#include <vector>

#include "maglab/periodic.hpp"
#include "maglab/splitting.hpp"

namespace maglab {

// Smooth curve in chart coordinates, interpolated on Chebyshev-Lobatto nodes.
class ChebyshevCurve {
 public:
  ChebyshevCurve() = default;
  // `values[k]` sampled at nodes(lo, hi, n)[k].
  ChebyshevCurve(double lo, double hi, const std::vector<Vec3>& values);
  static std::vector<double> nodes(double lo, double hi, int n);

  Vec3 value(double x) const;
  Vec3 derivative(double x) const;
  void translate(const Vec3& offset) { coeffs_[0] += offset; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

 private:
  double lo_ = -1.0, hi_ = 1.0;
  std::vector<Vec3> coeffs_;
};

struct ChartSettings {
  double graph_growth = 8.5;        // log expansion over which a short segment is pushed onto the leaf
  double graph_time = 0.0;          // fixed push time; 0 picks it from graph_growth
  double direction_horizon = 25.0;  // power-iteration horizon for the seed direction
  double direction_dt = 1e-2;       // integrator step for the seed direction
  int nodes = 17;                   // Chebyshev nodes per curve
  int transversal_steps = 8;        // RK4 steps of the u-translation
};

// Local strong unstable (unstable = true) or strong stable curve through a
// state, parametrized so that its tangent at the base point has the requested
// frame coefficients' norm (`speed`) times a unit vector.
class StrongCurve {
 public:
  StrongCurve() = default;
  StrongCurve(const FlowParams& params, const Vec3& base, double radius, bool unstable,
              const ChartSettings& settings = {});

  Vec3 at(double u) const { return curve_.value(sigma0_ + u * scale_); }
  Vec3 tangent(double u) const { return scale_ * curve_.derivative(sigma0_ + u * scale_); }
  double radius() const { return radius_; }
  // Multiply the parameter speed by `factor`.
  void rescale(double factor);
  // Distance from the base point to the interpolated curve before the curve
  // was translated to pass through it.
  double anchor_error() const { return anchor_error_; }

 private:
  ChebyshevCurve curve_;
  double sigma0_ = 0.0;
  double scale_ = 1.0;
  double radius_ = 0.0;
  double sigma_max_ = 0.0;
  double anchor_error_ = 0.0;
};

// Adapted coordinates psi_p(u, s) = A_u(b(s)): b is the strong stable curve of
// p, A_u translates along the frame coefficients of the strong unstable curve a.
// Normalized so that det[a'(0), b'(0), X_lambda] = 1 in the frame.
class AdaptedChart {
 public:
  AdaptedChart() = default;
  AdaptedChart(const FlowParams& params, const Vec3& p, double epsilon, const ChartSettings& settings = {});

  const Vec3& base() const { return p_; }
  double epsilon() const { return epsilon_; }
  const StrongCurve& unstable_curve() const { return a_; }
  const StrongCurve& stable_curve() const { return b_; }

  // Chart state of psi_p(u, s).
  Vec3 operator()(double u, double s) const;
  // Frame coefficients of a'(0) and b'(0).
  Vec3 unstable_tangent() const;
  Vec3 stable_tangent() const;
  // Angle (radians) between a'(0), b'(0) and independently computed strong directions.
  double tangency_error(double horizon = 25.0) const;

 private:
  FlowParams params_;
  Vec3 p_ = Vec3::Zero();
  double epsilon_ = 0.0;
  int steps_ = 8;
  StrongCurve a_;
  StrongCurve b_;
};

inline AdaptedChart build_adapted_chart(const FlowParams& params, const SMPoint& p, double epsilon = 1e-2,
                                       const ChartSettings& settings = {}) {
  return AdaptedChart(params, p.state(), epsilon, settings);
}

// f_T(u, s): time length between Delta_q and phi_T(Delta_p). chart_q must be
// built at the state reached by flow_bundle from chart_p's base over T.
double return_time(const FlowParams& params, const AdaptedChart& chart_p, const AdaptedChart& chart_q, double T,
                   double u, double s, double time_cap = 1e-2);

struct CocycleSample {
  SMPoint p;
  double T = 0.0;
  double h = 0.0;
  double value = 0.0;        // mixed difference at h/2
  double coarse = 0.0;       // mixed difference at h
  double fine = 0.0;         // mixed difference at h/4
  double error = 0.0;        // Richardson estimate plus noise floor
  double noise_floor = 0.0;  // departure of the three differences from h^2 scaling
};

struct CocycleSettings {
  double h = 2e-2;
  double signal_floor = 1e-6;  // below this, a noise-dominated sample is accepted as zero
  ChartSettings chart;
};

// State reached from `p` by the bundle flow over T (chart of the reference).
Vec3 chart_successor(const FlowParams& params, const Vec3& p, double T);
// Expansion of a unit strong unstable vector over T.
double unstable_expansion(const FlowParams& params, const AdaptedChart& chart, double T);

CocycleSample kam_cocycle(const FlowParams& params, const AdaptedChart& chart_p, const AdaptedChart& chart_q,
                          double T, const CocycleSettings& settings = {});
CocycleSample kam_cocycle(const FlowParams& params, const SMPoint& p, double T,
                          const CocycleSettings& settings = {});

struct ObstructionSample {
  double value = 0.0;
  double error = 0.0;
  double period = 0.0;
  std::vector<CocycleSample> pieces;
  bool significant() const { return std::abs(value) > 10.0 * error; }
};

// Sum of K(p_i, dt) over a partition of a closed orbit of the given period.
ObstructionSample periodic_obstruction(const FlowParams& params, const SMPoint& seed, double period,
                                       int pieces = 10, const CocycleSettings& settings = {});
// Same for a sampled orbit; its end must match its start within 1e-6.
ObstructionSample periodic_obstruction(const FlowParams& params, const OrbitSegment& orbit, int pieces = 10,
                                       const CocycleSettings& settings = {});
ObstructionSample periodic_obstruction(const FlowParams& params, const ClosedOrbit& orbit, int pieces = 10,
                                       const CocycleSettings& settings = {});

// Evaluation of (-alpha - lambda c psi + lambda theta)(X_lambda) along an orbit.
// `theta` returns the 1-form theta at a chart state applied to the unit vector.
struct ContactProfile {
  std::vector<double> values;
  std::vector<double> expected;  // -1 - lambda^2 F c (+ lambda theta when supplied)
  double max_deviation = 0.0;    // max |value - expected|
  double fluctuation = 0.0;      // max - min of values
  bool theta_included = false;
};
using ThetaForm = std::function<double(const Vec3& state)>;
ContactProfile contact_check(const FlowParams& params, const OrbitSegment& orbit, const ThetaForm& theta = {});

struct RegularityRow {
  double t = 0.0;
  double first = 0.0;   // sup |f(x+t) - f(x)| / t
  double second = 0.0;  // sup |f(x+t) + f(x-t) - 2 f(x)| / t
};
struct RegularityReport {
  std::vector<RegularityRow> rows;  // scales strictly decreasing
  double second_slope = 0.0;        // log-log slope of the second quotient
  double first_growth = 0.0;        // first quotient at the finest over the coarsest scale
  std::string classification;
};

// Difference-quotient tables over dyadic scales t in [t_min, t_max] for samples
// spaced dx apart.
RegularityReport zygmund_lipschitz_scan(const std::vector<double>& samples, double dx, double t_min = 0.0,
                                        double t_max = 0.0);

}  // namespace maglab
