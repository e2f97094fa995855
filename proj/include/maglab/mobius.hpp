#pragma once

#include <complex>

namespace maglab {

using cplx = std::complex<double>;

// Point of the open unit disk. Construction rejects |z| >= 1 - 1e-12.
class DiskPoint {
 public:
  static constexpr double kBoundaryMargin = 1e-12;

  DiskPoint() = default;
  explicit DiskPoint(cplx z);
  DiskPoint(double x, double y) : DiskPoint(cplx(x, y)) {}

  cplx z() const { return z_; }
  double x() const { return z_.real(); }
  double y() const { return z_.imag(); }

 private:
  cplx z_{0.0, 0.0};
};

// Hyperbolic distance between two points of the disk.
double hyperbolic_distance(cplx z, cplx w);

// Disk automorphism z -> (a z + b) / (conj(b) z + conj(a)), |a|^2 - |b|^2 = 1.
class MobiusMap {
 public:
  MobiusMap() = default;
  MobiusMap(cplx a, cplx b);

  static MobiusMap identity() { return {}; }
  // Hyperbolic translation of length `distance` along the diameter at `angle`.
  static MobiusMap translation(double distance, double angle);
  static MobiusMap rotation(double angle);
  // The map sending 0 to p that fixes the diameter direction through p.
  static MobiusMap moving_origin_to(cplx p);

  cplx a() const { return a_; }
  cplx b() const { return b_; }

  cplx apply(cplx z) const;
  // Complex derivative at z.
  cplx derivative(cplx z) const;
  // Ratio gamma''(z) / gamma'(z).
  cplx log_derivative_slope(cplx z) const;
  // Rotation of the chart frame at z induced by the map: arg gamma'(z).
  double frame_rotation(cplx z) const;

  MobiusMap inverse() const;
  MobiusMap compose(const MobiusMap& inner) const;  // this o inner
  MobiusMap operator*(const MobiusMap& inner) const { return compose(inner); }

  // |a|^2 - |b|^2 - 1.
  double determinant_defect() const;
  // 2 arccosh |Re a| for hyperbolic maps, 0 otherwise.
  double translation_length() const;
  // Max coefficient distance to +-identity (maps are projective).
  double distance_to_identity() const;

 private:
  cplx a_{1.0, 0.0};
  cplx b_{0.0, 0.0};
};

}  // namespace maglab
