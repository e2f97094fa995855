#pragma once

#include <array>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maglab/flow.hpp"

namespace maglab {

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

struct GridSettings {
  int base = 24;             // lattice points across the octagon's bounding box
  int fiber = 32;            // samples per fiber circle (power of two)
  int ghost_stencil = 20;    // nodes in each ghost interpolation fit
};

// Reference to a stencil neighbour: a grid node or a ghost.
struct NeighborRef {
  int node = -1;
  int ghost = -1;
};

// Off-grid lattice point represented through the octagon: value of mode n at
// the point is exp(-i n phase) * sum(weight_k * f_n(node_k)).
struct Ghost {
  cplx point;      // lattice point outside the octagon
  cplx reduced;    // its representative inside
  double phase = 0.0;  // arg of the pairing's derivative at `reduced`
  std::vector<std::pair<int, double>> stencil;
};

// Cartesian lattice on the fundamental octagon with ghost nodes across the
// paired sides, fiber samples theta_j = 2 pi j / N and Liouville weights.
class SMGrid {
 public:
  SMGrid(std::shared_ptr<const SurfaceModel> surface, const GridSettings& settings = {});

  const SurfaceModel& surface() const { return *surface_; }
  std::shared_ptr<const SurfaceModel> surface_ptr() const { return surface_; }
  const GridSettings& settings() const { return settings_; }

  std::size_t size() const { return nodes_.size(); }
  int fiber() const { return settings_.fiber; }
  int min_mode() const { return -settings_.fiber / 2; }
  int max_mode() const { return settings_.fiber / 2 - 1; }
  int column(int n) const { return n + settings_.fiber / 2; }
  double spacing() const { return spacing_; }
  double theta(int j) const;

  cplx node(std::size_t i) const { return nodes_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }  // base weights, sum 1
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Ghost>& ghosts() const { return ghosts_; }
  // Neighbour in direction 0:+x, 1:-x, 2:+y, 3:-y.
  NeighborRef neighbor(std::size_t i, int dir) const { return neighbors_[i][static_cast<std::size_t>(dir)]; }

  // Total exponent Phi, its gradient, e^{-Phi} and F at each node.
  double Phi(std::size_t i) const { return phi_[i]; }
  cplx dPhi(std::size_t i) const { return dphi_[i]; }  // d Phi = (Phi_x - i Phi_y) / 2
  double inv_factor(std::size_t i) const { return inv_factor_[i]; }
  double magnetic(std::size_t i) const { return magnetic_[i]; }

  // Lattice quadrature of a group-invariant function given at the nodes.
  double integrate(const std::vector<double>& values) const;
  // Raw surface area from the weights (before normalization). Cells cut by
  // the boundary are integrated exactly and spread bilinearly over lattice
  // corners; corners off the octagon pass through their representatives.
  double area() const { return area_; }
  // Largest |p(q(z)) - z| over points of the paired sides, p, q side pairings.
  double ghost_pairing_defect() const;

 private:
  void build_nodes();
  void build_ghosts();
  void build_weights();
  std::vector<std::pair<int, double>> interpolation_stencil(cplx z) const;

  std::shared_ptr<const SurfaceModel> surface_;
  GridSettings settings_;
  double spacing_ = 0.0;
  double origin_ = 0.0;  // lattice coordinate of index 0
  int extent_ = 0;       // lattice indices run over [0, extent_)
  std::vector<cplx> nodes_;
  std::vector<int> lattice_index_;  // node id per lattice cell, -1 outside
  std::vector<std::array<NeighborRef, 4>> neighbors_;
  std::vector<Ghost> ghosts_;
  std::vector<double> weights_;
  std::vector<double> phi_;
  std::vector<cplx> dphi_;
  std::vector<double> inv_factor_;
  std::vector<double> magnetic_;
  double area_ = 0.0;
};

// Vertical Fourier coefficients f_n at every node, n in [-N/2, N/2).
class FourierField {
 public:
  FourierField() = default;
  explicit FourierField(std::shared_ptr<const SMGrid> grid);
  FourierField(std::shared_ptr<const SMGrid> grid, CMatrix coeffs);

  const SMGrid& grid() const { return *grid_; }
  std::shared_ptr<const SMGrid> grid_ptr() const { return grid_; }
  const CMatrix& coeffs() const { return c_; }
  CMatrix& coeffs() { return c_; }

  auto mode(int n) { return c_.col(grid_->column(n)); }
  auto mode(int n) const { return c_.col(grid_->column(n)); }
  cplx at(std::size_t i, int n) const { return c_(static_cast<Eigen::Index>(i), grid_->column(n)); }

  // Keep only the modes with |n| <= band.
  FourierField band_limited(int band) const;
  FourierField only_mode(int n) const;
  // Squared L^2 norm of mode n with Liouville weights.
  double mode_energy(int n) const;
  std::vector<double> mode_norms() const;  // ||f_n|| for n = min..max
  double norm() const;
  // max over nodes and modes of |conj(f_n) - f_{-n}| (pairs inside the band).
  double reality_defect() const;

  FourierField& operator+=(const FourierField& o);
  FourierField& operator-=(const FourierField& o);
  FourierField& operator*=(cplx s);
  friend FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
  friend FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
  friend FourierField operator*(cplx s, FourierField a) { return a *= s; }

 private:
  std::shared_ptr<const SMGrid> grid_;
  CMatrix c_;
};

// Liouville inner product <f, g> = sum_n int f_n conj(g_n).
cplx inner(const FourierField& f, const FourierField& g);

struct Projection {
  FourierField field;
  double top_fraction = 0.0;  // energy in |n| >= N/2 - 1 over total
  bool aliasing_warning = false;
};
// Fiber-wise DFT of samples (nodes x N, column j at theta_j).
Projection project_modes(std::shared_ptr<const SMGrid> grid, const RMatrix& samples);
Projection project_modes(std::shared_ptr<const SMGrid> grid, const CMatrix& samples);
// Inverse transform; rows are nodes, columns fiber samples.
CMatrix synthesize(const FourierField& f);
// Samples of a function of the chart state (x, y, theta) on the grid.
RMatrix sample_function(const SMGrid& grid, const std::function<double(const Vec3&)>& f);

// Value of mode n at a stencil neighbour as a combination of node values.
std::vector<std::pair<int, cplx>> neighbor_weights(const SMGrid& grid, const NeighborRef& ref, int n);

// Centered differences in x and y of every mode (ghosts carry the fiber phase).
std::pair<FourierField, FourierField> base_derivatives(const FourierField& f);

// eta+ = (X - iH)/2 and eta- = (X + iH)/2 from the per-mode formulas
//   eta+ u_n = e^{-Phi} (du - n u dPhi)        in mode n+1
//   eta- u_n = e^{-Phi} (dbar u + n u dbarPhi) in mode n-1.
// Throw BandOverflow when content would leave the band.
FourierField apply_eta_plus(const FourierField& f);
FourierField apply_eta_minus(const FourierField& f);
FourierField apply_X(const FourierField& f);
FourierField apply_H(const FourierField& f);
FourierField apply_V(const FourierField& f);
// X + lambda F V through eta+/eta-.
FourierField apply_X_lambda(const FourierField& f, double lambda);

// X, H and X + lambda F V computed by the frame derivation on fiber samples
// (cos/sin weights and the connection term in physical theta), then projected.
FourierField apply_X_direct(const FourierField& f);
FourierField apply_H_direct(const FourierField& f);
FourierField apply_X_lambda_direct(const FourierField& f, double lambda);

// |<eta+ f, g> + <f, eta- g>|.
double adjointness_residual(const FourierField& f, const FourierField& g);
// Energy of (X - iH)/2 f (direct frame path) outside mode n+1, for f in H_n,
// relative to the energy of f.
double mode_locality_residual(const FourierField& f, int n);

struct EnergySlack {
  double plus = 0.0;   // ||eta+ f||^2
  double minus = 0.0;  // ||eta- f||^2
  double norm2 = 0.0;  // ||f||^2
  double slack = 0.0;  // plus - A n norm2 - minus
};
EnergySlack energy_inequality_check(const FourierField& f, int n, double A);

// Per-mode norms of the direct X_lambda g minus eta+ g_{n-1} + eta- g_{n+1} + i n lambda F g_n.
std::vector<double> mode_transport_residual(const FourierField& g, double lambda);

struct RecurrenceReport {
  int N = 0;
  double lambda = 0.0;
  double A = 0.0;
  std::vector<int> n;         // indices with a_n, b_n, r_n
  std::vector<double> a, b, r;
  std::vector<double> slack;  // b_{n+1} - b_{n-1} - r_n for n > N+2
  std::vector<int> violations;
  double mode_equation_residual = 0.0;
};
// Sequences of the growth argument for a solution of the homogeneous mode
// equation beyond N (F = 1). Refuses when A - lambda^2 < 0 or when the mode
// equation residual for n > N exceeds `mode_tolerance`.
RecurrenceReport recurrence_diagnostics(const FourierField& g, int N, double lambda, double A, double tau_ineq,
                                        double mode_tolerance);

// Discretization tolerance from a refinement pair, assuming second order:
// 2 * (4/3) * |coarse - fine|.
double refinement_tolerance(double coarse, double fine);

// Test fields built from group-invariant functions: mode n > 0 carries
// e^{-n Phi} (dh)^n w, mode -n its conjugate, mode 0 carries w.
struct ModeFieldSpec {
  InvariantField h;
  InvariantField w;
};
// Mode-n test function with its complex derivatives at any disk point.
struct ModeJet {
  cplx u, du, dbu;  // value, d u, dbar u
};
ModeJet mode_jet(const SurfaceModel& surface, cplx z, int n, const ModeFieldSpec& spec);
ModeFieldSpec random_mode_spec(const SurfaceModel& surface, std::mt19937_64& rng);
FourierField single_mode_field(std::shared_ptr<const SMGrid> grid, int n, const ModeFieldSpec& spec);
// Real field sum over 0 <= n <= band of c_n u_n + conj, random c_n.
FourierField random_band_field(std::shared_ptr<const SMGrid> grid, int band, std::mt19937_64& rng,
                               std::vector<ModeFieldSpec>* specs = nullptr);
// Exact eta+ / eta- of single_mode_field from the jets of h, w and Phi.
std::vector<cplx> exact_eta_plus(const SMGrid& grid, int n, const ModeFieldSpec& spec);
std::vector<cplx> exact_eta_minus(const SMGrid& grid, int n, const ModeFieldSpec& spec);

}  // namespace maglab
