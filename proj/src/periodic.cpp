#include "maglab/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace maglab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec3 wrapped(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], std::remainder(a[2] - b[2], kTwoPi)};
}

}  // namespace

Axis hyperbolic_axis(const MobiusMap& g) {
  const cplx a = g.a(), b = g.b();
  if (std::abs(a.real()) <= 1.0 + 1e-12) throw DomainError("axis requested for a non-hyperbolic element");
  if (std::abs(b) < 1e-300) throw DomainError("axis requested for a rotation");
  // conj(b) z^2 + (conj(a) - a) z - b = 0
  const cplx qa = std::conj(b), qb = std::conj(a) - a, qc = -b;
  const cplx disc = std::sqrt(qb * qb - 4.0 * qa * qc);
  cplx z1 = (-qb + disc) / (2.0 * qa), z2 = (-qb - disc) / (2.0 * qa);
  z1 /= std::abs(z1);
  z2 /= std::abs(z2);
  Axis ax;
  if (std::abs(g.derivative(z1)) < 1.0) {
    ax.attracting = z1;
    ax.repelling = z2;
  } else {
    ax.attracting = z2;
    ax.repelling = z1;
  }
  ax.translation_length = g.translation_length();
  const cplx sum = ax.repelling + ax.attracting;
  if (std::abs(sum) < 1e-14) {
    ax.nearest = 0.0;
    ax.direction = ax.attracting;
    return ax;
  }
  const cplx u = sum / std::abs(sum);
  const double half = 0.5 * std::abs(std::arg(ax.attracting / ax.repelling));
  ax.nearest = u * (1.0 - std::sin(half)) / std::cos(half);
  const cplx t = cplx(0.0, 1.0) * u;
  ax.direction = (std::conj(t) * (ax.attracting - ax.repelling)).real() > 0.0 ? t : -t;
  return ax;
}

Vec3 hypercycle_seed(const MobiusMap& g, double d) {
  const Axis ax = hyperbolic_axis(g);
  const cplx right = cplx(0.0, -1.0) * ax.direction;
  const cplx z0 = std::tanh(0.5 * d) * right;
  const Vec3 local(z0.real(), z0.imag(), std::arg(ax.direction));
  return transport_state(MobiusMap::moving_origin_to(ax.nearest), local);
}

ClosedOrbit find_closed_orbit(const FlowParams& params, const Word& word, const ClosedOrbitSettings& st) {
  const auto& group = params.surface->group();
  const MobiusMap g = group.word_map(word);
  if (!(g.translation_length() > 0.0)) throw DomainError("closed orbit needs a hyperbolic word");
  double d = st.initial_offset;
  if (d < 0.0) d = std::atanh(std::min(std::abs(params.lambda), 0.76));
  Vec3 p = hypercycle_seed(g, d);
  double tau = g.translation_length() * std::cosh(d);
  const Vec3 p0 = p;
  const Vec3 phase = magnetic_field(params, p0);

  using Vec4 = Eigen::Vector4d;
  auto residual = [&](const Vec3& q, double t, FlowDerivative* out) {
    FlowDerivative fd = flow_derivative(params, q, t, false);
    Vec4 r;
    r.head<3>() = wrapped(fd.end, transport_state(g, q));
    r[3] = phase.dot(q - p0);
    if (out) *out = std::move(fd);
    return r;
  };

  FlowDerivative fd;
  Vec4 r = residual(p, tau, &fd);
  int it = 0;
  for (; it < st.max_iterations && r.norm() > st.tolerance; ++it) {
    Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
    J.topLeftCorner<3, 3>() = fd.chart_jacobian - transport_jacobian(g, p);
    J.topRightCorner<3, 1>() = magnetic_field(params, fd.end);
    J.bottomLeftCorner<1, 3>() = phase.transpose();
    const Vec4 step = J.fullPivLu().solve(r);
    double damping = 1.0;
    bool accepted = false;
    for (int k = 0; k < 12; ++k, damping *= 0.5) {
      const Vec3 q = p - damping * step.head<3>();
      const double t = tau - damping * step[3];
      if (!(t > 0.0) || std::norm(cplx(q[0], q[1])) >= 1.0) continue;
      FlowDerivative trial;
      Vec4 rt;
      try {
        rt = residual(q, t, &trial);
      } catch (const Error&) {
        continue;
      }
      if (rt.norm() < r.norm()) {
        p = q;
        tau = t;
        r = rt;
        fd = std::move(trial);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(r.norm() <= st.tolerance)) {
    throw ConvergenceError("closed-orbit Newton iteration diverged for word " + to_string(word),
                           {p[0], p[1], p[2], tau, r.norm()});
  }

  ClosedOrbit out;
  out.word = word;
  out.period = tau;
  out.iterations = it;
  out.closure = r.head<3>().norm();
  const Reduction red = group.reduce(cplx(p[0], p[1]), 64);
  const MobiusMap to_domain = red.map.inverse();
  Vec3 s = transport_state(to_domain, p);
  s[2] = std::remainder(s[2], kTwoPi);
  out.seed = SMPoint::from_state(s);
  out.deck = to_domain * g * red.map;
  out.samples = integrate(params, out.seed, tau);
  return out;
}

OrbitIntegral orbit_integral(const StateFunction& f, const ClosedOrbit& orbit) {
  const auto& times = orbit.samples.times;
  const auto& states = orbit.samples.states;
  const std::size_t n = states.size();
  if (n < 5) throw DomainError("orbit integral needs at least five samples");
  // Periodic trapezoid: the last sample coincides with the first.
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = f(states[i]);
  auto rule = [&](std::size_t stride) {
    double acc = 0.0;
    std::size_t i = 0;
    for (; i + stride < n; i += stride) acc += 0.5 * (times[i + stride] - times[i]) * (v[i] + v[i + stride]);
    if (i + 1 < n) acc += 0.5 * (times[n - 1] - times[i]) * (v[i] + v[n - 1]);
    return acc;
  };
  OrbitIntegral out;
  out.value = rule(1);
  out.error = std::abs(out.value - rule(2));
  return out;
}

}  // namespace maglab
