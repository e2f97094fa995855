#pragma once

#include <vector>

#include "maglab/flow.hpp"

namespace maglab {

// Sufficient Anosov margin -(lambda^2 max F^2 + max K); positive inside the range.
double anosov_margin(const FlowParams& params);
// Throws HypothesisViolation when the margin is not positive.
void require_anosov(const FlowParams& params);

// Derivative of the time-T map in the (X, H, V) frame (columns: images of X, H, V).
Mat3 variational_transport(const FlowParams& params, const SMPoint& p, double T, double max_T = 40.0);
// Same map written in the adapted frame (X_lambda, H, V); its first column is e_1.
Mat3 magnetic_frame_transport(const FlowParams& params, const SMPoint& p, double T, double max_T = 40.0);

// Frame coefficients (X, H, V) of X_lambda at a state.
Vec3 magnetic_direction(const FlowParams& params, const Vec3& state);

// V-over-H slope of a frame vector after removing its X_lambda component.
double transverse_slope(const FlowParams& params, const Vec3& state, const Vec3& frame_vector);

// Strong unstable (forward = true) or strong stable direction at a state, as a
// unit frame vector, by pushing a generic vector along the orbit over `horizon`
// and renormalizing at every step. `log_growth` receives the accumulated log
// expansion (contraction for the stable case, measured backward).
Vec3 strong_direction(const FlowParams& params, const Vec3& state, double horizon, bool unstable,
                      double* log_growth = nullptr);

// Converged slopes: horizon doubled until successive results agree within tol.
double unstable_slope(const FlowParams& params, const SMPoint& p, double horizon = 30.0, double tol = 1e-6);
double stable_slope(const FlowParams& params, const SMPoint& p, double horizon = 30.0, double tol = 1e-6);

struct SplittingSample {
  SMPoint p;
  double u_s = 0.0;
  double u_u = 0.0;
  double growth_rate = 0.0;  // log expansion per unit time along E^u
  double horizon = 0.0;
};
SplittingSample splitting_sample(const FlowParams& params, const SMPoint& p, double horizon = 30.0,
                                 double tol = 1e-6);

struct DichotomyReport {
  double C = 1.0;
  double eta = 1.0;
  double rho = 1.0;
  double eta_margin = 0.0;  // eta - 1
  double rho_margin = 0.0;  // 1 - rho
  std::size_t samples = 0;
  double fit_time = 0.0;
};

// Least-squares fit of log |dphi_{-t}|E^u| and log |dphi_t|E^s| against t over
// the sample points, t in [0, fit_time].
DichotomyReport dichotomy_fit(const FlowParams& params, const std::vector<SMPoint>& points,
                              double fit_time = 6.0, int fit_samples = 13, double horizon = 30.0);

}  // namespace maglab
