#include "maglab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace maglab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Points this far outside a side are moved back into the octagon.
constexpr double kReduceSlack = 1e-10;

int step_count(double T, double dt) {
  if (!(dt > 0.0)) throw DomainError("integrator step must be positive");
  return std::max(1, static_cast<int>(std::ceil(std::abs(T) / dt - 1e-9)));
}

Vec3 rk4_step(const FlowParams& params, const Vec3& s, double h) {
  const Vec3 k1 = magnetic_field(params, s);
  const Vec3 k2 = magnetic_field(params, s + 0.5 * h * k1);
  const Vec3 k3 = magnetic_field(params, s + 0.5 * h * k2);
  const Vec3 k4 = magnetic_field(params, s + h * k3);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// RK4 applied to the state together with its variational equation; the matrix
// returned is the exact derivative of the discrete step.
void rk4_var_step(const FlowParams& params, Vec3& s, Mat3& J, double h) {
  const Vec3 s1 = s;
  const Vec3 k1 = magnetic_field(params, s1);
  const Mat3 L1 = magnetic_field_jacobian(params, s1) * J;
  const Vec3 s2 = s + 0.5 * h * k1;
  const Vec3 k2 = magnetic_field(params, s2);
  const Mat3 L2 = magnetic_field_jacobian(params, s2) * (J + 0.5 * h * L1);
  const Vec3 s3 = s + 0.5 * h * k2;
  const Vec3 k3 = magnetic_field(params, s3);
  const Mat3 L3 = magnetic_field_jacobian(params, s3) * (J + 0.5 * h * L2);
  const Vec3 s4 = s + h * k3;
  const Vec3 k4 = magnetic_field(params, s4);
  const Mat3 L4 = magnetic_field_jacobian(params, s4) * (J + h * L3);
  s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  J += (h / 6.0) * (L1 + 2.0 * L2 + 2.0 * L3 + L4);
}

bool needs_reduction(const Vec3& s) { return !FuchsianGroup::contains(cplx(s[0], s[1]), kReduceSlack); }

void append_free(Word& acc, const Word& w) {
  for (const auto& l : w) {
    if (!acc.empty() && acc.back().generator == l.generator && acc.back().inverse != l.inverse) {
      acc.pop_back();
    } else {
      acc.push_back(l);
    }
  }
}

struct Cursor {
  Vec3 state;
  MobiusMap pending;  // transition since the last stored sample
  MobiusMap deck;
  Word word;
};

void reduce_cursor(const FuchsianGroup& group, Cursor& c) {
  if (!needs_reduction(c.state)) return;
  const Reduction r = group.reduce(cplx(c.state[0], c.state[1]), 64);
  const MobiusMap undo = r.map.inverse();
  c.state = transport_state(undo, c.state);
  c.pending = undo * c.pending;
  c.deck = c.deck * r.map;
  append_free(c.word, r.word);
}

void store(OrbitSegment& orbit, double t, Cursor& c) {
  orbit.times.push_back(t);
  orbit.states.push_back(c.state);
  orbit.transitions.push_back(c.pending);
  orbit.words.push_back(to_string(c.word));
  c.pending = MobiusMap::identity();
}

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600, 0.0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100,
                           1.0 / 40};

}  // namespace

SMPoint::SMPoint(DiskPoint base, double theta) : base_(base) {
  if (!std::isfinite(theta)) throw DomainError("SMPoint: non-finite angle");
  theta_ = std::fmod(theta, kTwoPi);
  if (theta_ < 0.0) theta_ += kTwoPi;
  if (theta_ >= kTwoPi) theta_ = 0.0;
}

Mat3 frame_at(const SurfaceModel& surface, const Vec3& s) {
  const ScalarJet P = surface.conformal_jet(cplx(s[0], s[1]));
  const double E = std::exp(-P.value);
  const double c = std::cos(s[2]), sn = std::sin(s[2]);
  Mat3 F;
  F.col(0) = Vec3(E * c, E * sn, E * (P.grad[1] * c - P.grad[0] * sn));
  F.col(1) = Vec3(-E * sn, E * c, -E * (P.grad[0] * c + P.grad[1] * sn));
  F.col(2) = Vec3(0.0, 0.0, 1.0);
  return F;
}

Vec3 magnetic_field(const FlowParams& params, const Vec3& s) {
  const cplx z(s[0], s[1]);
  const ScalarJet P = params.surface->conformal_jet(z);
  const double E = std::exp(-P.value);
  const double c = std::cos(s[2]), sn = std::sin(s[2]);
  const double F = params.lambda == 0.0 ? 0.0 : params.surface->magnetic_density(z);
  return {E * c, E * sn, E * (P.grad[1] * c - P.grad[0] * sn) + params.lambda * F};
}

Mat3 magnetic_field_jacobian(const FlowParams& params, const Vec3& s) {
  const cplx z(s[0], s[1]);
  const ScalarJet P = params.surface->conformal_jet(z);
  const double E = std::exp(-P.value);
  const double c = std::cos(s[2]), sn = std::sin(s[2]);
  const double px = P.grad[0], py = P.grad[1];
  const double pxx = P.hess[0], pxy = P.hess[1], pyy = P.hess[2];
  std::array<double, 2> dF{0.0, 0.0};
  if (params.lambda != 0.0 && !params.surface->constant_magnetic()) dF = params.surface->magnetic_jet(z).grad;
  const double w = py * c - px * sn;
  Mat3 J;
  J(0, 0) = -E * px * c;
  J(0, 1) = -E * py * c;
  J(0, 2) = -E * sn;
  J(1, 0) = -E * px * sn;
  J(1, 1) = -E * py * sn;
  J(1, 2) = E * c;
  J(2, 0) = -px * E * w + E * (pxy * c - pxx * sn) + params.lambda * dF[0];
  J(2, 1) = -py * E * w + E * (pyy * c - pxy * sn) + params.lambda * dF[1];
  J(2, 2) = E * (-py * sn - px * c);
  return J;
}

Vec3 coframe_on(const SurfaceModel& surface, const Vec3& s, const Vec3& xi, double h) {
  const cplx z(s[0], s[1]);
  const double e2 = std::exp(2.0 * surface.conformal_jet(z).value);
  auto velocity = [&](double t) {
    const Vec3 st = s + t * xi;
    const double E = std::exp(-surface.conformal_jet(cplx(st[0], st[1])).value);
    return Eigen::Vector2d(E * std::cos(st[2]), E * std::sin(st[2]));
  };
  const Eigen::Vector2d v = velocity(0.0);
  const Eigen::Vector2d iv(-v[1], v[0]);
  const Eigen::Vector2d dx(xi[0], xi[1]);
  // Fourth-order central difference of v along the curve.
  const Eigen::Vector2d dv =
      (8.0 * (velocity(h) - velocity(-h)) - (velocity(2.0 * h) - velocity(-2.0 * h))) / (12.0 * h);
  const Christoffel G = christoffel_at(surface, DiskPoint(z));
  Eigen::Vector2d cov = dv;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) cov[k] += G.gamma[k][i][j] * dx[i] * v[j];
    }
  }
  return {e2 * dx.dot(v), e2 * dx.dot(iv), e2 * cov.dot(iv)};
}

Vec3 transport_state(const MobiusMap& g, const Vec3& s) {
  const cplx z(s[0], s[1]);
  const cplx w = g.apply(z);
  return {w.real(), w.imag(), s[2] + g.frame_rotation(z)};
}

Mat3 transport_jacobian(const MobiusMap& g, const Vec3& s) {
  const cplx z(s[0], s[1]);
  const cplx d = g.derivative(z);
  const cplx L = g.log_derivative_slope(z);
  Mat3 J;
  J << d.real(), -d.imag(), 0.0, d.imag(), d.real(), 0.0, L.imag(), L.real(), 1.0;
  return J;
}

MobiusMap reduce_state(const FuchsianGroup& group, Vec3& s) {
  if (!needs_reduction(s)) return MobiusMap::identity();
  const Reduction r = group.reduce(cplx(s[0], s[1]), 64);
  const MobiusMap undo = r.map.inverse();
  s = transport_state(undo, s);
  return undo;
}

cplx OrbitSegment::base_in_chart(std::size_t j, std::size_t i) const {
  cplx z(states[j][0], states[j][1]);
  if (j < i) {
    for (std::size_t k = j + 1; k <= i; ++k) z = transitions[k].apply(z);
  } else {
    for (std::size_t k = j; k > i; --k) z = transitions[k].inverse().apply(z);
  }
  return z;
}

OrbitSegment integrate(const FlowParams& params, const SMPoint& p0, double T, bool reduce) {
  const auto& group = params.surface->group();
  const auto& in = params.integrator;
  OrbitSegment orbit;
  orbit.params = params;
  Cursor cur{p0.state(), MobiusMap::identity(), MobiusMap::identity(), {}};
  if (reduce) reduce_cursor(group, cur);
  store(orbit, 0.0, cur);
  if (T == 0.0) return orbit;

  if (in.method == Method::kRK4) {
    const int n = step_count(T, in.dt);
    const double h = T / n;
    const int every = std::max(1, in.sample_every);
    for (int k = 1; k <= n; ++k) {
      cur.state = rk4_step(params, cur.state, h);
      if (reduce) reduce_cursor(group, cur);
      if (k % every == 0 || k == n) store(orbit, k * h, cur);
    }
    if (T < 0.0) {
      // Keep sample times increasing: a backward orbit is stored in reverse.
      std::reverse(orbit.times.begin(), orbit.times.end());
      std::reverse(orbit.states.begin(), orbit.states.end());
      std::reverse(orbit.words.begin(), orbit.words.end());
      std::vector<MobiusMap> tr(orbit.transitions.size());
      tr[0] = MobiusMap::identity();
      for (std::size_t i = 1; i < tr.size(); ++i) tr[i] = orbit.transitions[tr.size() - i].inverse();
      orbit.transitions = std::move(tr);
    }
    return orbit;
  }

  // Adaptive Dormand-Prince, samples at accepted steps.
  const double dir = T > 0.0 ? 1.0 : -1.0;
  double t = 0.0;
  double h = dir * std::min(std::abs(T), in.dt);
  while (dir * (T - t) > 1e-14 * std::abs(T)) {
    if (dir * (t + h - T) > 0.0) h = T - t;
    std::array<Vec3, 7> k;
    k[0] = magnetic_field(params, cur.state);
    for (int st = 1; st < 7; ++st) {
      Vec3 y = cur.state;
      for (int j = 0; j < st; ++j) y += h * kA[st][j] * k[j];
      k[st] = magnetic_field(params, y);
    }
    Vec3 y5 = cur.state, y4 = cur.state;
    for (int st = 0; st < 7; ++st) {
      y5 += h * kB5[st] * k[st];
      y4 += h * kB4[st] * k[st];
    }
    double err = 0.0;
    for (int c = 0; c < 3; ++c) {
      err = std::max(err, std::abs(y5[c] - y4[c]) / (in.tolerance * (1.0 + std::abs(cur.state[c]))));
    }
    if (err <= 1.0) {
      t += h;
      cur.state = y5;
      if (reduce) reduce_cursor(group, cur);
      store(orbit, dir > 0 ? t : -t, cur);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (std::abs(h) < in.min_step) {
      orbit.complete = false;
      orbit.failure = "step size underflow at t = " + std::to_string(t);
      throw OrbitIntegrationError(orbit.failure, orbit);
    }
  }
  if (T < 0.0) {
    std::reverse(orbit.times.begin(), orbit.times.end());
    std::reverse(orbit.states.begin(), orbit.states.end());
    std::reverse(orbit.words.begin(), orbit.words.end());
    std::vector<MobiusMap> tr(orbit.transitions.size());
    tr[0] = MobiusMap::identity();
    for (std::size_t i = 1; i < tr.size(); ++i) tr[i] = orbit.transitions[tr.size() - i].inverse();
    orbit.transitions = std::move(tr);
  }
  return orbit;
}

FlowDerivative flow_derivative(const FlowParams& params, const Vec3& start, double T, bool reduce) {
  const auto& group = params.surface->group();
  FlowDerivative out{start, start, Mat3::Identity(), MobiusMap::identity()};
  if (T == 0.0) return out;
  const int n = step_count(T, params.integrator.dt);
  const double h = T / n;
  Vec3 s = start;
  Mat3 J = Mat3::Identity();
  for (int k = 0; k < n; ++k) {
    rk4_var_step(params, s, J, h);
    if (reduce && needs_reduction(s)) {
      const Reduction r = group.reduce(cplx(s[0], s[1]), 64);
      const MobiusMap undo = r.map.inverse();
      J = transport_jacobian(undo, s) * J;
      s = transport_state(undo, s);
      out.deck = out.deck * r.map;
    }
    if (!J.allFinite() || J.cwiseAbs().maxCoeff() > 1e150) {
      throw IntegrationError("linearization overflow; use a shorter time");
    }
  }
  out.end = s;
  out.chart_jacobian = J;
  return out;
}

Vec3 flow_state(const FlowParams& params, const Vec3& start, double T, bool reduce) {
  if (T == 0.0) return start;
  const auto& group = params.surface->group();
  const int n = step_count(T, params.integrator.dt);
  const double h = T / n;
  Vec3 s = start;
  for (int k = 0; k < n; ++k) {
    s = rk4_step(params, s, h);
    if (reduce) reduce_state(group, s);
  }
  return s;
}

MobiusMap flow_bundle(const FlowParams& params, std::vector<Vec3>& states, double T) {
  MobiusMap deck;
  if (T == 0.0 || states.empty()) return deck;
  const auto& group = params.surface->group();
  const int n = step_count(T, params.integrator.dt);
  const double h = T / n;
  for (int k = 0; k < n; ++k) {
    for (auto& s : states) s = rk4_step(params, s, h);
    if (needs_reduction(states[0])) {
      const Reduction r = group.reduce(cplx(states[0][0], states[0][1]), 64);
      const MobiusMap undo = r.map.inverse();
      for (auto& s : states) s = transport_state(undo, s);
      deck = deck * r.map;
    }
  }
  return deck;
}

Vec3 unwrap_angle(const Vec3& s, double reference) {
  return {s[0], s[1], reference + std::remainder(s[2] - reference, kTwoPi)};
}

std::vector<std::vector<double>> fd_weights(double x0, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n + 1, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0;
  double c4 = x[0] - x0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - x0;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

namespace {

struct BaseDerivatives {
  cplx z, d1, d2;
};

BaseDerivatives base_derivatives(const OrbitSegment& orbit, std::size_t i) {
  const std::size_t n = orbit.size();
  const std::size_t width = std::min<std::size_t>(5, n);
  std::size_t lo = i >= 2 ? i - 2 : 0;
  if (lo + width > n) lo = n - width;
  std::vector<double> t;
  std::vector<cplx> z;
  for (std::size_t j = lo; j < lo + width; ++j) {
    t.push_back(orbit.times[j]);
    z.push_back(orbit.base_in_chart(j, i));
  }
  const auto w = fd_weights(orbit.times[i], t, 2);
  BaseDerivatives out{z[i - lo], 0.0, 0.0};
  for (std::size_t j = 0; j < width; ++j) {
    out.d1 += w[1][j] * z[j];
    out.d2 += w[2][j] * z[j];
  }
  return out;
}

}  // namespace

std::vector<double> geodesic_curvature_along(const OrbitSegment& orbit) {
  if (orbit.size() < 3) throw DomainError("geodesic curvature needs at least 3 samples");
  const auto& surface = *orbit.params.surface;
  std::vector<double> out(orbit.size());
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    const BaseDerivatives d = base_derivatives(orbit, i);
    const double speed = std::abs(d.d1);
    if (!(speed > 1e-300)) throw DomainError("zero-speed sample in geodesic curvature");
    const double kE = (std::conj(d.d1) * d.d2).imag() / (speed * speed * speed);
    const cplx n = cplx(0.0, 1.0) * d.d1 / speed;
    const ScalarJet P = surface.conformal_jet(d.z);
    const double dn = P.grad[0] * n.real() + P.grad[1] * n.imag();
    out[i] = std::exp(-P.value) * (kE - dn);
  }
  return out;
}

double magnetic_curvature_residual(const OrbitSegment& orbit) {
  const auto kg = geodesic_curvature_along(orbit);
  const auto& p = orbit.params;
  double worst = 0.0;
  for (std::size_t i = 0; i < kg.size(); ++i) {
    const cplx z(orbit.states[i][0], orbit.states[i][1]);
    worst = std::max(worst, std::abs(kg[i] - p.lambda * p.surface->magnetic_density(z)));
  }
  return worst;
}

double unit_speed_residual(const OrbitSegment& orbit) {
  if (orbit.size() < 3) throw DomainError("speed check needs at least 3 samples");
  double worst = 0.0;
  for (std::size_t i = 0; i < orbit.size(); ++i) {
    const BaseDerivatives d = base_derivatives(orbit, i);
    const double speed = std::abs(d.d1) * orbit.params.surface->conformal_factor(d.z);
    worst = std::max(worst, std::abs(speed - 1.0));
  }
  return worst;
}

double liouville_jacobian(const FlowParams& params, const SMPoint& p0, double T, double max_T) {
  if (std::abs(T) > max_T) throw IntegrationError("Liouville check beyond the conditioning cap; use a smaller T");
  if (T == 0.0) return 1.0;
  // Product over unit-time pieces: each piece is well conditioned, the whole
  // map is not (its singular values grow like exp(+-sqrt(-K) T)).
  const int pieces = static_cast<int>(std::ceil(std::abs(T)));
  Vec3 s = p0.state();
  double det = 1.0;
  for (int k = 0; k < pieces; ++k) {
    const FlowDerivative d = flow_derivative(params, s, T / pieces);
    const Mat3 M = frame_at(*params.surface, d.end).inverse() * d.chart_jacobian * frame_at(*params.surface, d.start);
    det *= M.determinant();
    s = d.end;
  }
  return det;
}

CommutatorResiduals commutator_check(const FlowParams& params, const SMPoint& p, double h) {
  const auto& surface = *params.surface;
  const Vec3 s = p.state();
  auto field = [&](int which, const Vec3& x) -> Vec3 { return frame_at(surface, x).col(which); };
  auto jac = [&](int which) {
    Mat3 D;
    for (int k = 0; k < 3; ++k) {
      Vec3 e = Vec3::Zero();
      e[k] = h;
      D.col(k) = (field(which, s + e) - field(which, s - e)) / (2.0 * h);
    }
    return D;
  };
  const Mat3 Fr = frame_at(surface, s);
  const Mat3 DX = jac(0), DH = jac(1), DV = jac(2);
  auto bracket = [&](int a, const Mat3& Da, int b, const Mat3& Db) {
    return Vec3(Fr.partialPivLu().solve(Db * Fr.col(a) - Da * Fr.col(b)));
  };
  const Vec3 vx = bracket(2, DV, 0, DX);
  const Vec3 vh = bracket(2, DV, 1, DH);
  const Vec3 xh = bracket(0, DX, 1, DH);
  CommutatorResiduals r;
  r.curvature = surface.curvature(p.base().z());
  r.vx_minus_h = (vx - Vec3(0, 1, 0)).norm();
  r.vh_plus_x = (vh - Vec3(-1, 0, 0)).norm();
  r.xh_minus_kv = (xh - Vec3(0, 0, r.curvature)).norm();
  r.xh_v_coefficient = xh[2];
  return r;
}

}  // namespace maglab
