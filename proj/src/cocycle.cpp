#include "maglab/cocycle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace maglab {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 angle_difference(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], std::remainder(a[2] - b[2], 2.0 * kPi)};
}

FlowParams with_dt(const FlowParams& p, double dt) {
  FlowParams q = p;
  q.integrator.dt = dt;
  q.integrator.method = Method::kRK4;
  return q;
}

}  // namespace

std::vector<double> ChebyshevCurve::nodes(double lo, double hi, int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
  for (int k = 0; k < n; ++k) x[static_cast<std::size_t>(k)] = mid + half * std::cos(kPi * k / (n - 1));
  return x;
}

ChebyshevCurve::ChebyshevCurve(double lo, double hi, const std::vector<Vec3>& values) : lo_(lo), hi_(hi) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw DomainError("Chebyshev curve needs at least two nodes");
  coeffs_.assign(static_cast<std::size_t>(n), Vec3::Zero());
  const int m = n - 1;
  for (int j = 0; j < n; ++j) {
    Vec3 acc = Vec3::Zero();
    for (int k = 0; k < n; ++k) {
      const double w = (k == 0 || k == m) ? 0.5 : 1.0;
      acc += w * values[static_cast<std::size_t>(k)] * std::cos(kPi * j * k / m);
    }
    acc *= 2.0 / m;
    if (j == 0 || j == m) acc *= 0.5;
    coeffs_[static_cast<std::size_t>(j)] = acc;
  }
}

Vec3 ChebyshevCurve::value(double x) const {
  const double t = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
  Vec3 b1 = Vec3::Zero(), b2 = Vec3::Zero();
  for (std::size_t j = coeffs_.size(); j-- > 1;) {
    const Vec3 b0 = 2.0 * t * b1 - b2 + coeffs_[j];
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + coeffs_[0];
}

Vec3 ChebyshevCurve::derivative(double x) const {
  const std::size_t n = coeffs_.size();
  std::vector<Vec3> d(n + 1, Vec3::Zero());
  for (std::size_t j = n - 1; j-- > 0;) {
    d[j] = d[j + 2] + 2.0 * static_cast<double>(j + 1) * coeffs_[j + 1];
  }
  d[0] *= 0.5;
  const double t = (2.0 * x - lo_ - hi_) / (hi_ - lo_);
  Vec3 b1 = Vec3::Zero(), b2 = Vec3::Zero();
  for (std::size_t j = n - 1; j-- > 1;) {
    const Vec3 b0 = 2.0 * t * b1 - b2 + d[j];
    b2 = b1;
    b1 = b0;
  }
  return (t * b1 - b2 + d[0]) * (2.0 / (hi_ - lo_));
}

StrongCurve::StrongCurve(const FlowParams& params, const Vec3& base, double radius, bool unstable,
                         const ChartSettings& st)
    : radius_(radius) {
  if (!(radius > 0.0)) throw DomainError("strong curve radius must be positive");
  const double dir = unstable ? 1.0 : -1.0;
  const auto& surf = *params.surface;

  const FlowParams coarse = with_dt(params, st.direction_dt);
  double push = st.graph_time;
  if (push <= 0.0) {
    double log_growth = 0.0;
    strong_direction(coarse, base, st.direction_horizon, unstable, &log_growth);
    const double rate = std::abs(log_growth) / st.direction_horizon;
    push = std::clamp(st.graph_growth / std::max(rate, 1e-3), 4.0, 40.0);
  }

  // Seed point far back along the orbit (forward for the stable curve).
  std::vector<Vec3> ref{base};
  const MobiusMap back = flow_bundle(params, ref, -dir * push);
  const Vec3 q0 = ref[0];
  const Vec3 e = strong_direction(coarse, q0, st.direction_horizon, unstable);
  const Vec3 v = frame_at(surf, q0) * e;
  const FlowDerivative d = flow_derivative(params, q0, dir * push);
  const double growth = (frame_at(surf, d.end).inverse() * d.chart_jacobian * v).norm();
  sigma_max_ = 1.25 * radius / growth;

  const auto sig = ChebyshevCurve::nodes(-sigma_max_, sigma_max_, st.nodes);
  std::vector<Vec3> states{q0};
  for (double s : sig) states.push_back(q0 + s * v);
  const MobiusMap fwd = flow_bundle(params, states, dir * push);
  const MobiusMap to_base = back * fwd;
  std::vector<Vec3> values;
  values.reserve(sig.size());
  for (std::size_t k = 1; k < states.size(); ++k) {
    values.push_back(unwrap_angle(transport_state(to_base, states[k]), base[2]));
  }
  curve_ = ChebyshevCurve(-sigma_max_, sigma_max_, values);

  // Anchor the parameter at the point of the curve closest to the base.
  double s = 0.0;
  for (int it = 0; it < 8; ++it) {
    const Vec3 g = curve_.derivative(s);
    const double step = angle_difference(curve_.value(s), base).dot(g) / g.squaredNorm();
    s -= step;
    if (std::abs(step) < 1e-18) break;
  }
  sigma0_ = s;
  const Vec3 miss = angle_difference(base, curve_.value(s));
  anchor_error_ = miss.norm();
  curve_.translate(miss);
  const Vec3 c = frame_at(surf, base).inverse() * curve_.derivative(s);
  scale_ = 1.0 / c.norm();
  if (std::abs(sigma0_) + radius_ * scale_ > sigma_max_) {
    throw DomainError("strong curve leaves its sampled range; reduce the chart radius");
  }
}

void StrongCurve::rescale(double factor) {
  scale_ *= factor;
  radius_ /= std::abs(factor);
}

AdaptedChart::AdaptedChart(const FlowParams& params, const Vec3& p, double epsilon, const ChartSettings& st)
    : params_(params), p_(p), epsilon_(epsilon), steps_(st.transversal_steps) {
  a_ = StrongCurve(params, p, epsilon, true, st);
  const Mat3 Fi = frame_at(*params.surface, p).inverse();
  const Vec3 cu = Fi * a_.tangent(0.0);
  double b_radius = epsilon;
  for (int attempt = 0; attempt < 2; ++attempt) {
    b_ = StrongCurve(params, p, b_radius, false, st);
    const Vec3 cs = Fi * b_.tangent(0.0);
    Mat3 D;
    D.col(0) = cu;
    D.col(1) = cs;
    D.col(2) = magnetic_direction(params, p);
    const double det = D.determinant();
    if (!(std::abs(det) > 1e-3)) throw DomainError("strong directions are degenerate at the chart base");
    if (std::abs(det) >= 1.0 || attempt == 1) {
      b_.rescale(1.0 / det);
      break;
    }
    b_radius = 1.01 * epsilon / std::abs(det);
  }
}

Vec3 AdaptedChart::operator()(double u, double s) const {
  const auto& surf = *params_.surface;
  Vec3 x = b_.at(s);
  if (u == 0.0) return x;
  auto coeff = [&](double tau) { return Vec3(frame_at(surf, a_.at(tau)).inverse() * a_.tangent(tau)); };
  auto field = [&](double tau, const Vec3& y) { return Vec3(frame_at(surf, y) * coeff(tau)); };
  const double h = u / steps_;
  for (int k = 0; k < steps_; ++k) {
    const double t = k * h;
    const Vec3 k1 = field(t, x);
    const Vec3 k2 = field(t + 0.5 * h, x + 0.5 * h * k1);
    const Vec3 k3 = field(t + 0.5 * h, x + 0.5 * h * k2);
    const Vec3 k4 = field(t + h, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

Vec3 AdaptedChart::unstable_tangent() const {
  return frame_at(*params_.surface, p_).inverse() * a_.tangent(0.0);
}

Vec3 AdaptedChart::stable_tangent() const { return frame_at(*params_.surface, p_).inverse() * b_.tangent(0.0); }

double AdaptedChart::tangency_error(double horizon) const {
  const FlowParams coarse = with_dt(params_, 1e-2);
  auto angle = [](const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
  };
  const Vec3 eu = strong_direction(coarse, p_, horizon, true);
  const Vec3 es = strong_direction(coarse, p_, horizon, false);
  return std::max(angle(unstable_tangent(), eu), angle(stable_tangent(), es));
}

Vec3 chart_successor(const FlowParams& params, const Vec3& p, double T) {
  std::vector<Vec3> s{p};
  flow_bundle(params, s, T);
  return s[0];
}

double unstable_expansion(const FlowParams& params, const AdaptedChart& chart, double T) {
  const auto& surf = *params.surface;
  const FlowDerivative d = flow_derivative(params, chart.base(), T);
  const Vec3 v = frame_at(surf, chart.base()) * chart.unstable_tangent();
  return (frame_at(surf, d.end).inverse() * d.chart_jacobian * v).norm();
}

namespace {

// Return times for a batch of (u, s) pairs; all companions share one flow.
std::vector<double> return_times(const FlowParams& params, const AdaptedChart& cp, const AdaptedChart& cq, double T,
                                 const std::vector<std::pair<double, double>>& us, double time_cap) {
  std::vector<Vec3> states{cp.base()};
  for (const auto& [u, s] : us) states.push_back(cp(u, s));
  flow_bundle(params, states, T);
  const Vec3 q = cq.base();
  if (angle_difference(states[0], q).norm() > 1e-8) {
    throw ChartMismatch("target chart is not based at the image of the source chart");
  }
  const Mat3 Fq = frame_at(*params.surface, q);
  const Vec3 tu = Fq * cq.unstable_tangent();
  const Vec3 ts = Fq * cq.stable_tangent();

  std::vector<double> out;
  out.reserve(us.size());
  for (std::size_t i = 1; i < states.size(); ++i) {
    const Vec3 y = unwrap_angle(states[i], q[2]);
    auto back = [&](double f) { return f == 0.0 ? y : flow_state(params, y, -f, false); };
    auto residual = [&](const Vec3& w) { return angle_difference(cq(w[0], w[1]), back(w[2])); };
    Mat3 A;
    A.col(0) = tu;
    A.col(1) = ts;
    A.col(2) = magnetic_field(params, y);
    Vec3 w = A.partialPivLu().solve(angle_difference(y, q));
    bool done = false;
    for (int it = 0; it < 30 && !done; ++it) {
      const Vec3 r = residual(w);
      const double du = 1e-6 * std::max(1.0, cq.epsilon() * 100.0);
      Mat3 J;
      J.col(0) = (angle_difference(cq(w[0] + du, w[1]), cq(w[0] - du, w[1]))) / (2.0 * du);
      J.col(1) = (angle_difference(cq(w[0], w[1] + du), cq(w[0], w[1] - du))) / (2.0 * du);
      J.col(2) = magnetic_field(params, back(w[2]));
      const Vec3 step = J.partialPivLu().solve(r);
      w -= step;
      if (step.cwiseAbs().maxCoeff() < 1e-12) done = true;
    }
    if (!done || !w.allFinite()) throw ChartMismatch("return-time Newton iteration did not converge");
    if (std::abs(w[2]) > time_cap) throw ChartMismatch("no transversal intersection within the time cap");
    if (std::abs(w[0]) > cq.epsilon() || std::abs(w[1]) > cq.epsilon()) {
      throw ChartMismatch("image point falls outside the target chart; enlarge its radius");
    }
    out.push_back(w[2]);
  }
  return out;
}

}  // namespace

double return_time(const FlowParams& params, const AdaptedChart& chart_p, const AdaptedChart& chart_q, double T,
                   double u, double s, double time_cap) {
  if (u == 0.0 && s == 0.0) return 0.0;
  return return_times(params, chart_p, chart_q, T, {{u, s}}, time_cap)[0];
}

CocycleSample kam_cocycle(const FlowParams& params, const AdaptedChart& cp, const AdaptedChart& cq, double T,
                          const CocycleSettings& st) {
  const double h = st.h;
  std::vector<std::pair<double, double>> pts;
  for (double r : {h, 0.5 * h, 0.25 * h}) {
    for (auto [a, b] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) pts.emplace_back(a * r, b * r);
  }
  const auto f = return_times(params, cp, cq, T, pts, 1e-2);
  auto mixed = [&](std::size_t k, double r) { return (f[k] - f[k + 1] - f[k + 2] + f[k + 3]) / (4.0 * r * r); };
  CocycleSample out;
  out.p = SMPoint::from_state(cp.base());
  out.T = T;
  out.h = h;
  out.coarse = mixed(0, h);
  out.value = mixed(4, 0.5 * h);
  out.fine = mixed(8, 0.25 * h);
  out.noise_floor = std::abs((out.fine - out.value) - 0.25 * (out.value - out.coarse));
  out.error = std::abs(out.coarse - out.value) / 3.0 + out.noise_floor;
  if (out.noise_floor > std::max(std::abs(out.value), st.signal_floor)) {
    throw UnreliableSample("cocycle sample dominated by noise (floor " + std::to_string(out.noise_floor) + ")",
                           out.coarse, out.value);
  }
  return out;
}

CocycleSample kam_cocycle(const FlowParams& params, const SMPoint& p, double T, const CocycleSettings& st) {
  require_anosov(params);
  const Vec3 s = p.state();
  const AdaptedChart cp(params, s, 1.25 * st.h, st.chart);
  const double G = unstable_expansion(params, cp, T);
  const AdaptedChart cq(params, chart_successor(params, s, T), 1.25 * st.h * std::max(G, 1.0 / G), st.chart);
  return kam_cocycle(params, cp, cq, T, st);
}

ObstructionSample periodic_obstruction(const FlowParams& params, const SMPoint& seed, double period, int pieces,
                                       const CocycleSettings& st) {
  require_anosov(params);
  if (!(period > 0.0) || pieces < 1) throw DomainError("periodic obstruction needs a positive period");
  const double dt = period / pieces;
  std::vector<Vec3> base{seed.state()};
  for (int i = 0; i < pieces; ++i) base.push_back(chart_successor(params, base.back(), dt));

  // One chart radius that covers every piece's image.
  const FlowParams coarse = with_dt(params, st.chart.direction_dt);
  double spread = 1.0;
  for (int i = 0; i < pieces; ++i) {
    const Vec3 e = strong_direction(coarse, base[static_cast<std::size_t>(i)], st.chart.direction_horizon, true);
    const auto& surf = *params.surface;
    const FlowDerivative d = flow_derivative(params, base[static_cast<std::size_t>(i)], dt);
    const double G =
        (frame_at(surf, d.end).inverse() * d.chart_jacobian * frame_at(surf, d.start) * e).norm();
    spread = std::max({spread, G, 1.0 / G});
  }
  const double eps = 1.3 * st.h * spread;
  std::vector<AdaptedChart> charts;
  charts.reserve(base.size());
  for (const auto& b : base) charts.emplace_back(params, b, eps, st.chart);

  ObstructionSample out;
  out.period = period;
  for (int i = 0; i < pieces; ++i) {
    out.pieces.push_back(
        kam_cocycle(params, charts[static_cast<std::size_t>(i)], charts[static_cast<std::size_t>(i) + 1], dt, st));
    out.value += out.pieces.back().value;
    out.error += out.pieces.back().error;
  }
  return out;
}

ObstructionSample periodic_obstruction(const FlowParams& params, const OrbitSegment& orbit, int pieces,
                                       const CocycleSettings& st) {
  if (orbit.size() < 2) throw DomainError("periodic obstruction needs a sampled orbit");
  if (angle_difference(orbit.states.back(), orbit.states.front()).norm() > 1e-6) {
    throw DomainError("orbit does not close within 1e-6");
  }
  return periodic_obstruction(params, orbit.point(0), orbit.times.back() - orbit.times.front(), pieces, st);
}

ObstructionSample periodic_obstruction(const FlowParams& params, const ClosedOrbit& orbit, int pieces,
                                       const CocycleSettings& st) {
  return periodic_obstruction(params, orbit.seed, orbit.period, pieces, st);
}

ContactProfile contact_check(const FlowParams& params, const OrbitSegment& orbit, const ThetaForm& theta) {
  const auto& surf = *params.surface;
  const double c = surf.cohomology_constant();
  const double lam = params.lambda;
  const bool exact_zero = surf.constant_curvature() && surf.constant_magnetic();
  ContactProfile out;
  out.theta_included = exact_zero || static_cast<bool>(theta);
  double lo = 1e300, hi = -1e300;
  for (const auto& s : orbit.states) {
    const Vec3 xi = magnetic_field(params, s);
    const Vec3 cf = coframe_on(surf, s, xi);
    const double th = (!exact_zero && theta) ? theta(s) : 0.0;
    const double F = surf.magnetic_density(cplx(s[0], s[1]));
    const double v = -cf[0] - lam * c * cf[2] + lam * th;
    const double e = -1.0 - lam * lam * F * c + lam * th;
    out.values.push_back(v);
    out.expected.push_back(e);
    out.max_deviation = std::max(out.max_deviation, std::abs(v - e));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  out.fluctuation = out.values.empty() ? 0.0 : hi - lo;
  return out;
}

RegularityReport zygmund_lipschitz_scan(const std::vector<double>& f, double dx, double t_min, double t_max) {
  const std::size_t n = f.size();
  if (n < 64) throw DomainError("regularity scan needs at least 64 samples");
  if (!(dx > 0.0)) throw DomainError("sample spacing must be positive");
  if (t_min <= 0.0) t_min = dx;
  if (t_max <= 0.0) t_max = dx * static_cast<double>(n - 1) / 4.0;
  RegularityReport rep;
  std::vector<std::size_t> shifts;
  for (std::size_t m = 1; 2 * m < n; m *= 2) {
    const double t = dx * static_cast<double>(m);
    if (t >= t_min * (1 - 1e-12) && t <= t_max * (1 + 1e-12)) shifts.push_back(m);
  }
  std::reverse(shifts.begin(), shifts.end());
  for (std::size_t m : shifts) {
    RegularityRow row;
    row.t = dx * static_cast<double>(m);
    for (std::size_t i = 0; i + m < n; ++i) row.first = std::max(row.first, std::abs(f[i + m] - f[i]) / row.t);
    for (std::size_t i = m; i + m < n; ++i) {
      row.second = std::max(row.second, std::abs(f[i + m] + f[i - m] - 2.0 * f[i]) / row.t);
    }
    rep.rows.push_back(row);
  }
  if (rep.rows.size() < 2) throw DomainError("regularity scan needs at least two scales");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : rep.rows) {
    const double x = std::log(r.t), y = std::log(std::max(r.second, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(rep.rows.size());
  rep.second_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.first_growth = rep.rows.back().first / std::max(rep.rows.front().first, 1e-300);
  if (rep.second_slope > 0.5) {
    rep.classification = "smooth";
  } else if (rep.second_slope < -0.3) {
    rep.classification = "not-zygmund";
  } else if (rep.first_growth > 1.5) {
    rep.classification = "zygmund-not-lipschitz";
  } else {
    rep.classification = "lipschitz-not-little-zygmund";
  }
  return rep;
}

}  // namespace maglab
