#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "maglab/fuchsian.hpp"
#include "maglab/mobius.hpp"

namespace maglab {

// Value, Euclidean gradient and Hessian (xx, xy, yy) of a function in the chart.
struct ScalarJet {
  double value = 0.0;
  std::array<double, 2> grad{0.0, 0.0};
  std::array<double, 3> hess{0.0, 0.0, 0.0};

  double laplacian() const { return hess[0] + hess[2]; }
  ScalarJet& operator+=(const ScalarJet& o);
};

// Jet of f(z) = f0(w(z)) where w is a disk automorphism; `inner` is the jet of
// f0 at w(z).
ScalarJet pull_back(const ScalarJet& inner, const MobiusMap& w, cplx z);

// Radial bump a * exp(-(cosh d(z, center) - 1) / width^2).
struct Bump {
  cplx center{0.0, 0.0};
  double width = 0.3;
  double amplitude = 0.0;
};

// Bump jet at z (no symmetrization).
ScalarJet bump_jet(const Bump& b, cplx z);

// Group-invariant function: constant + sum of bumps symmetrized over the group
// orbit (truncated at word length L and a distance cutoff).
class InvariantField {
 public:
  InvariantField() = default;
  InvariantField(double constant, std::vector<Bump> bumps, const FuchsianGroup& group,
                 int max_word = FuchsianGroup::kDefaultMaxWord);

  double constant() const { return constant_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  bool is_constant() const { return bumps_.empty(); }
  int max_word() const { return max_word_; }

  // Jet at any point of the disk (reduces to the octagon when needed).
  ScalarJet jet(cplx z) const;
  double value(cplx z) const { return jet(z).value; }

  // Upper bound for the contribution of the bump translates left out.
  double truncation_bound() const { return truncation_bound_; }
  std::size_t translate_count() const { return centers_.size(); }

 private:
  ScalarJet jet_direct(cplx z) const;
  void build_bins();

  double constant_ = 0.0;
  std::vector<Bump> bumps_;
  std::vector<Bump> centers_;  // translated bumps covering the octagon neighbourhood
  // Uniform Euclidean bins over the direct region listing the translates that
  // can reach each bin.
  std::vector<std::vector<int>> bins_;
  int bin_count_ = 0;
  double bin_extent_ = 1.0;
  int max_word_ = FuchsianGroup::kDefaultMaxWord;
  double truncation_bound_ = 0.0;
  std::shared_ptr<const FuchsianGroup> group_;
};

// Christoffel symbols Gamma^k_ij of the conformal metric in the disk chart.
struct Christoffel {
  double gamma[2][2][2] = {};  // [k][i][j]
};

// Closed genus-2 surface: hyperbolic octagon quotient with conformal
// perturbation e^{2 phi} of the hyperbolic metric and magnetic density F.
class SurfaceModel {
 public:
  SurfaceModel();  // K = -1, F = 1
  SurfaceModel(InvariantField phi, InvariantField magnetic);

  static SurfaceModel hyperbolic();
  static SurfaceModel from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const FuchsianGroup& group() const { return *group_; }
  std::shared_ptr<const FuchsianGroup> group_ptr() const { return group_; }
  const InvariantField& phi() const { return phi_; }
  const InvariantField& magnetic() const { return magnetic_; }

  bool constant_curvature() const { return phi_.is_constant(); }
  bool constant_magnetic() const { return magnetic_.is_constant(); }

  // Total conformal exponent phi + log(2 / (1 - |z|^2)).
  ScalarJet conformal_jet(cplx z) const;
  double conformal_factor(cplx z) const;  // e^{Phi}

  double curvature(cplx z) const;
  ScalarJet magnetic_jet(cplx z) const { return magnetic_.jet(z); }
  double magnetic_density(cplx z) const { return magnetic_.value(z); }

  // Cohomology constant c of Omega = c K dA + d theta (Gauss-Bonnet).
  double cohomology_constant() const { return cohomology_constant_; }
  double area() const { return area_; }
  double mean_magnetic() const;  // integral of F dA / area

  // Quadrature over the closed surface of f dA (f given in the chart).
  double integrate(const std::function<double(cplx)>& f, int order = 24) const;

  // Range of K over a polar sample of the octagon.
  std::pair<double, double> curvature_range(int samples = 64) const;
  // Range of F over the same sample.
  std::pair<double, double> magnetic_range(int samples = 64) const;

 private:
  void compute_constants();

  std::shared_ptr<const FuchsianGroup> group_;
  InvariantField phi_;
  InvariantField magnetic_;
  double cohomology_constant_ = -1.0;
  double area_ = 0.0;
  double magnetic_integral_ = 0.0;
};

double curvature_at(const SurfaceModel& model, const DiskPoint& p);
Christoffel christoffel_at(const SurfaceModel& model, const DiskPoint& p);

}  // namespace maglab
