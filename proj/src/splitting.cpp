#include "maglab/splitting.hpp"

#include <cmath>

namespace maglab {

namespace {

Mat3 adapted_basis(const FlowParams& params, const Vec3& s) {
  Mat3 B = Mat3::Identity();
  B(2, 0) = params.lambda * params.surface->magnetic_density(cplx(s[0], s[1]));
  return B;
}

// Frame matrix of one integrator step of length h starting at s; s is advanced.
Mat3 frame_step(const FlowParams& params, Vec3& s, double h) {
  const FlowDerivative d = flow_derivative(params, s, h);
  const auto& surf = *params.surface;
  const Mat3 M = frame_at(surf, d.end).inverse() * d.chart_jacobian * frame_at(surf, d.start);
  s = d.end;
  return M;
}

// States along the orbit of s sampled every dt for `steps` steps in direction dir.
std::vector<Vec3> sampled_orbit(const FlowParams& params, const Vec3& s, double dt, int steps, double dir) {
  std::vector<Vec3> out{s};
  out.reserve(static_cast<std::size_t>(steps) + 1);
  Vec3 x = s;
  for (int k = 0; k < steps; ++k) {
    x = flow_state(params, x, dir * dt);
    out.push_back(x);
  }
  return out;
}

// Push a generic vector from the far end of `orbit` back to orbit[0], one step
// at a time (each step re-integrated from the stored sample, so round-off does
// not accumulate along the orbit).
Vec3 power_iterate(const FlowParams& params, const std::vector<Vec3>& orbit, std::size_t from, double step,
                   double* log_growth) {
  Vec3 xi(0.37, 1.0, 0.61);
  xi.normalize();
  double acc = 0.0;
  for (std::size_t k = from; k > 0; --k) {
    Vec3 s = orbit[k];
    xi = frame_step(params, s, step) * xi;
    const double n = xi.norm();
    acc += std::log(n);
    xi /= n;
  }
  if (log_growth) *log_growth = acc;
  return xi;
}

int horizon_steps(double horizon, double dt) { return std::max(1, static_cast<int>(std::ceil(horizon / dt - 1e-9))); }

double converged_slope(const FlowParams& params, const SMPoint& p, double horizon, double tol, bool unstable,
                       double* growth, double* used_horizon) {
  require_anosov(params);
  const double dt = params.integrator.dt;
  const Vec3 s = p.state();
  double H = horizon;
  double prev = 0.0;
  for (int attempt = 0; attempt < 5; ++attempt) {
    const int n = horizon_steps(H, dt);
    const double h = H / n;
    // Orbit to 2H in the opposite time direction; iterate from H and from 2H.
    const auto orbit = sampled_orbit(params, s, h, 2 * n, unstable ? -1.0 : 1.0);
    double g1 = 0.0, g2 = 0.0;
    const Vec3 a = power_iterate(params, orbit, static_cast<std::size_t>(n), unstable ? h : -h, &g1);
    const Vec3 b = power_iterate(params, orbit, static_cast<std::size_t>(2 * n), unstable ? h : -h, &g2);
    const double ua = transverse_slope(params, s, a);
    const double ub = transverse_slope(params, s, b);
    if (std::abs(ua - ub) < tol) {
      if (growth) *growth = g1 / H;
      if (used_horizon) *used_horizon = 2.0 * H;
      return ub;
    }
    prev = ub;
    H *= 2.0;
    if (attempt == 4) {
      throw ConvergenceError("splitting slope did not converge; Anosov margin too small?", {ua, ub});
    }
  }
  throw ConvergenceError("splitting slope did not converge", {prev});
}

}  // namespace

double anosov_margin(const FlowParams& params) {
  const auto [kmin, kmax] = params.surface->curvature_range();
  const auto [fmin, fmax] = params.surface->magnetic_range();
  const double f2 = std::max(fmin * fmin, fmax * fmax);
  (void)kmin;
  return -(params.lambda * params.lambda * f2 + kmax);
}

void require_anosov(const FlowParams& params) {
  const double m = anosov_margin(params);
  if (!(m > 0.0)) {
    throw HypothesisViolation("lambda^2 F(x)^2 + K(x) < 0 for all x in M", "lambda^2 max F^2 + max K = " + std::to_string(-m));
  }
}

Mat3 variational_transport(const FlowParams& params, const SMPoint& p, double T, double max_T) {
  if (std::abs(T) > max_T) throw IntegrationError("variational transport beyond the horizon cap");
  if (T == 0.0) return Mat3::Identity();
  const FlowDerivative d = flow_derivative(params, p.state(), T);
  const auto& surf = *params.surface;
  return frame_at(surf, d.end).inverse() * d.chart_jacobian * frame_at(surf, d.start);
}

Mat3 magnetic_frame_transport(const FlowParams& params, const SMPoint& p, double T, double max_T) {
  if (std::abs(T) > max_T) throw IntegrationError("variational transport beyond the horizon cap");
  const Vec3 s = p.state();
  if (T == 0.0) return Mat3::Identity();
  const FlowDerivative d = flow_derivative(params, s, T);
  const auto& surf = *params.surface;
  const Mat3 M = frame_at(surf, d.end).inverse() * d.chart_jacobian * frame_at(surf, d.start);
  return adapted_basis(params, d.end).inverse() * M * adapted_basis(params, s);
}

Vec3 magnetic_direction(const FlowParams& params, const Vec3& s) {
  return {1.0, 0.0, params.lambda * params.surface->magnetic_density(cplx(s[0], s[1]))};
}

double transverse_slope(const FlowParams& params, const Vec3& s, const Vec3& xi) {
  const double lf = params.lambda * params.surface->magnetic_density(cplx(s[0], s[1]));
  return (xi[2] - xi[0] * lf) / xi[1];
}

Vec3 strong_direction(const FlowParams& params, const Vec3& s, double horizon, bool unstable, double* log_growth) {
  const int n = horizon_steps(horizon, params.integrator.dt);
  const double h = horizon / n;
  const auto orbit = sampled_orbit(params, s, h, n, unstable ? -1.0 : 1.0);
  return power_iterate(params, orbit, static_cast<std::size_t>(n), unstable ? h : -h, log_growth);
}

double unstable_slope(const FlowParams& params, const SMPoint& p, double horizon, double tol) {
  return converged_slope(params, p, horizon, tol, true, nullptr, nullptr);
}

double stable_slope(const FlowParams& params, const SMPoint& p, double horizon, double tol) {
  return converged_slope(params, p, horizon, tol, false, nullptr, nullptr);
}

SplittingSample splitting_sample(const FlowParams& params, const SMPoint& p, double horizon, double tol) {
  SplittingSample out;
  out.p = p;
  out.u_u = converged_slope(params, p, horizon, tol, true, &out.growth_rate, &out.horizon);
  out.u_s = converged_slope(params, p, horizon, tol, false, nullptr, nullptr);
  return out;
}

DichotomyReport dichotomy_fit(const FlowParams& params, const std::vector<SMPoint>& points, double fit_time,
                              int fit_samples, double horizon) {
  require_anosov(params);
  if (points.empty()) throw DomainError("dichotomy fit needs sample points");
  if (fit_samples < 2) throw DomainError("dichotomy fit needs at least two times");
  const double dt = params.integrator.dt;
  const int n = horizon_steps(fit_time, dt);
  const double h = fit_time / n;
  const int stride = std::max(1, n / (fit_samples - 1));

  // Rows (t, log norm) for the unstable (backward) and stable (forward) fits.
  std::vector<std::pair<double, double>> un, st;
  for (const auto& p : points) {
    for (int kind = 0; kind < 2; ++kind) {
      const bool unstable = kind == 0;
      Vec3 xi = strong_direction(params, p.state(), horizon, unstable);
      Vec3 s = p.state();
      double acc = 0.0;
      auto& rows = unstable ? un : st;
      rows.emplace_back(0.0, 0.0);
      for (int k = 1; k <= n; ++k) {
        xi = frame_step(params, s, unstable ? -h : h) * xi;
        const double nn = xi.norm();
        acc += std::log(nn);
        xi /= nn;
        if (k % stride == 0) rows.emplace_back(k * h, acc);
      }
    }
  }
  auto fit = [](const std::vector<std::pair<double, double>>& rows) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (const auto& [t, y] : rows) {
      st += t;
      sy += y;
      stt += t * t;
      sty += t * y;
    }
    const double m = static_cast<double>(rows.size());
    const double slope = (m * sty - st * sy) / (m * stt - st * st);
    return slope;
  };
  DichotomyReport r;
  r.samples = points.size();
  r.fit_time = fit_time;
  const double su = fit(un);  // log norm ~ -t log eta
  const double ss = fit(st);  // log norm ~ t log rho
  r.eta = std::exp(-su);
  r.rho = std::exp(ss);
  double logC = 0.0;
  for (const auto& [t, y] : un) logC = std::max(logC, y + t * std::log(r.eta));
  for (const auto& [t, y] : st) logC = std::max(logC, y - t * std::log(r.rho));
  r.C = std::exp(logC);
  r.eta_margin = r.eta - 1.0;
  r.rho_margin = 1.0 - r.rho;
  if (!(r.rho < 1.0) || !(r.eta > 1.0)) {
    throw HypothesisViolation("0<rho<1<eta", "fitted eta = " + std::to_string(r.eta) +
                                                 ", rho = " + std::to_string(r.rho));
  }
  return r;
}

}  // namespace maglab
