#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "maglab/errors.hpp"
#include "maglab/surface.hpp"

namespace maglab {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Unit tangent vector (x, v): base point and the angle of v against the chart's
// horizontal direction, normalized to [0, 2 pi).
class SMPoint {
 public:
  SMPoint() = default;
  SMPoint(DiskPoint base, double theta);
  SMPoint(double x, double y, double theta) : SMPoint(DiskPoint(x, y), theta) {}
  static SMPoint from_state(const Vec3& s) { return SMPoint(s[0], s[1], s[2]); }

  const DiskPoint& base() const { return base_; }
  double theta() const { return theta_; }
  Vec3 state() const { return {base_.x(), base_.y(), theta_}; }

 private:
  DiskPoint base_;
  double theta_ = 0.0;
};

enum class Method { kRK4, kAdaptive };

struct IntegratorSettings {
  double dt = 1e-3;
  Method method = Method::kRK4;
  double tolerance = 1e-11;  // adaptive mode
  double min_step = 1e-12;   // adaptive mode underflow threshold
  int sample_every = 1;      // store every n-th step (fixed step mode)
};

struct FlowParams {
  double lambda = 0.0;
  std::shared_ptr<const SurfaceModel> surface = std::make_shared<const SurfaceModel>();
  IntegratorSettings integrator;

  FlowParams() = default;
  FlowParams(double lam, std::shared_ptr<const SurfaceModel> s, IntegratorSettings in = {})
      : lambda(lam), surface(std::move(s)), integrator(in) {}
};

// Chart components (x, y, theta) of the frame fields X, H, V as columns.
Mat3 frame_at(const SurfaceModel& surface, const Vec3& state);
inline Mat3 frame_at(const FlowParams& params, const SMPoint& p) { return frame_at(*params.surface, p.state()); }

// Chart components of X_lambda = X + lambda F V.
Vec3 magnetic_field(const FlowParams& params, const Vec3& state);
// Jacobian of magnetic_field with respect to (x, y, theta).
Mat3 magnetic_field_jacobian(const FlowParams& params, const Vec3& state);

// The forms alpha, beta, psi evaluated on a chart vector xi, computed from their
// definitions (metric pairing, covariant derivative via Christoffel symbols and a
// finite-difference pushforward). Row order alpha, beta, psi.
Vec3 coframe_on(const SurfaceModel& surface, const Vec3& state, const Vec3& xi, double fd_step = 1e-5);

// Move a state into the closed octagon; returns the transition applied
// (identity when already inside).
MobiusMap reduce_state(const FuchsianGroup& group, Vec3& state);
// Act on a state by a disk automorphism (z -> g z, theta -> theta + arg g').
Vec3 transport_state(const MobiusMap& g, const Vec3& state);
// Jacobian of transport_state at the state.
Mat3 transport_jacobian(const MobiusMap& g, const Vec3& state);

struct OrbitSegment {
  std::vector<double> times;
  std::vector<Vec3> states;                // reduced to the octagon
  std::vector<MobiusMap> transitions;      // states[i] = transitions[i](unreduced state in chart i-1)
  std::vector<std::string> words;          // accumulated deck word at each sample
  FlowParams params;
  bool complete = true;                    // false when adaptive integration underflowed
  std::string failure;

  std::size_t size() const { return states.size(); }
  SMPoint point(std::size_t i) const { return SMPoint::from_state(states[i]); }
  SMPoint back() const { return point(states.size() - 1); }
  // Base point of sample j expressed in the chart of sample i.
  cplx base_in_chart(std::size_t j, std::size_t i) const;
};

// Flow p0 for time T (negative allowed). Samples are reduced to the octagon.
// With `reduce = false` the orbit is followed in the universal cover.
OrbitSegment integrate(const FlowParams& params, const SMPoint& p0, double T, bool reduce = true);

// End state of the flow plus the chart derivative of the time-T map, composed
// with the deck transitions applied on the way.
struct FlowDerivative {
  Vec3 start;
  Vec3 end;
  Mat3 chart_jacobian;  // d(end)/d(start)
  MobiusMap deck;       // unreduced end = deck(end)
};
FlowDerivative flow_derivative(const FlowParams& params, const Vec3& start, double T, bool reduce = true);

// Endpoint only (fixed-step RK4 regardless of method; deterministic).
Vec3 flow_state(const FlowParams& params, const Vec3& start, double T, bool reduce = true);

// Signed geodesic curvature of the projected curve at each sample, from
// finite differences of the sampled base path.
std::vector<double> geodesic_curvature_along(const OrbitSegment& orbit);
// max_t |k_g(t) - lambda F(gamma(t))|.
double magnetic_curvature_residual(const OrbitSegment& orbit);
// max_t |speed - 1| of the sampled base path (metric norm).
double unit_speed_residual(const OrbitSegment& orbit);

// Determinant of the derivative of the time-T map in the (X, H, V) frame.
double liouville_jacobian(const FlowParams& params, const SMPoint& p0, double T, double max_T = 20.0);

struct CommutatorResiduals {
  double vx_minus_h = 0.0;      // |[V,X] - H|
  double vh_plus_x = 0.0;       // |[V,H] + X|
  double xh_minus_kv = 0.0;     // |[X,H] - K V|
  double xh_v_coefficient = 0.0;
  double curvature = 0.0;
};
// Finite-difference Lie brackets of the frame fields, expressed in the frame.
CommutatorResiduals commutator_check(const FlowParams& params, const SMPoint& p, double h = 1e-4);

// Adaptive integration underflow. Carries the orbit computed so far.
class OrbitIntegrationError : public IntegrationError {
 public:
  OrbitIntegrationError(const std::string& what, OrbitSegment partial)
      : IntegrationError(what), partial_orbit(std::move(partial)) {}
  OrbitSegment partial_orbit;
};

// Flow states[0] (the reference) together with nearby companions by fixed-step
// RK4. Every reduction of the reference is applied to all states, so they stay
// in the reference's chart. Returns the accumulated deck map: the unreduced
// image in the starting chart is deck(state).
MobiusMap flow_bundle(const FlowParams& params, std::vector<Vec3>& states, double T);

// Angle of `s` shifted by a multiple of 2 pi to lie within pi of `reference`.
Vec3 unwrap_angle(const Vec3& s, double reference);

// Finite-difference weights (Fornberg) for derivatives 0..order at x0 on nodes.
std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& nodes, int order);

}  // namespace maglab
