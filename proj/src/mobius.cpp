#include "maglab/mobius.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maglab/errors.hpp"

namespace maglab {

DiskPoint::DiskPoint(cplx z) : z_(z) {
  if (!(std::abs(z) < 1.0 - kBoundaryMargin)) {
    throw DomainError("point outside the unit disk: |z| = " + std::to_string(std::abs(z)));
  }
}

double hyperbolic_distance(cplx z, cplx w) {
  const double num = 2.0 * std::norm(z - w);
  const double den = (1.0 - std::norm(z)) * (1.0 - std::norm(w));
  return std::acosh(1.0 + num / den);
}

MobiusMap::MobiusMap(cplx a, cplx b) : a_(a), b_(b) {
  const double det = std::norm(a) - std::norm(b);
  if (!(det > 0.0)) throw DomainError("Mobius coefficients do not preserve the disk");
  const double s = 1.0 / std::sqrt(det);
  a_ *= s;
  b_ *= s;
}

MobiusMap MobiusMap::translation(double distance, double angle) {
  return {cplx(std::cosh(0.5 * distance), 0.0), std::sinh(0.5 * distance) * std::polar(1.0, angle)};
}

MobiusMap MobiusMap::rotation(double angle) { return {std::polar(1.0, 0.5 * angle), 0.0}; }

MobiusMap MobiusMap::moving_origin_to(cplx p) {
  if (std::abs(p) >= 1.0) throw DomainError("moving_origin_to: point outside disk");
  return {cplx(1.0, 0.0), p};
}

cplx MobiusMap::apply(cplx z) const { return (a_ * z + b_) / (std::conj(b_) * z + std::conj(a_)); }

cplx MobiusMap::derivative(cplx z) const {
  const cplx d = std::conj(b_) * z + std::conj(a_);
  return 1.0 / (d * d);
}

cplx MobiusMap::log_derivative_slope(cplx z) const {
  return -2.0 * std::conj(b_) / (std::conj(b_) * z + std::conj(a_));
}

double MobiusMap::frame_rotation(cplx z) const { return std::arg(derivative(z)); }

MobiusMap MobiusMap::inverse() const { return {std::conj(a_), -b_}; }

MobiusMap MobiusMap::compose(const MobiusMap& in) const {
  // [a b; conj(b) conj(a)] * [c d; conj(d) conj(c)]
  const cplx a = a_ * in.a_ + b_ * std::conj(in.b_);
  const cplx b = a_ * in.b_ + b_ * std::conj(in.a_);
  return {a, b};
}

double MobiusMap::determinant_defect() const { return std::norm(a_) - std::norm(b_) - 1.0; }

double MobiusMap::translation_length() const {
  const double t = std::abs(a_.real());
  return t > 1.0 ? 2.0 * std::acosh(t) : 0.0;
}

double MobiusMap::distance_to_identity() const {
  const double plus = std::max(std::abs(a_ - 1.0), std::abs(b_));
  const double minus = std::max(std::abs(a_ + 1.0), std::abs(b_));
  return std::min(plus, minus);
}

}  // namespace maglab
