#include "maglab/fiber_fourier.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss.hpp>

namespace maglab {

namespace {

constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

// Gauss-Legendre nodes and weights on [-1, 1].
template <unsigned N>
std::vector<std::pair<double, double>> gauss_legendre() {
  using Rule = boost::math::quadrature::gauss<double, N>;
  std::vector<std::pair<double, double>> out;
  const auto& x = Rule::abscissa();
  const auto& w = Rule::weights();
  for (std::size_t k = 0; k < x.size(); ++k) {
    out.emplace_back(x[k], w[k]);
    if (x[k] != 0.0) out.emplace_back(-x[k], w[k]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- SMGrid

SMGrid::SMGrid(std::shared_ptr<const SurfaceModel> surface, const GridSettings& settings)
    : surface_(std::move(surface)), settings_(settings) {
  if (!surface_) throw DomainError("grid needs a surface model");
  if (settings_.base < 6) throw DomainError("grid base resolution must be at least 6");
  if (settings_.fiber < 8 || (settings_.fiber & (settings_.fiber - 1)) != 0) {
    throw DomainError("fiber resolution must be a power of two, at least 8");
  }
  build_nodes();
  build_ghosts();
  build_weights();
}

double SMGrid::theta(int j) const { return 2.0 * kPi * j / settings_.fiber; }

void SMGrid::build_nodes() {
  const double rv = std::abs(FuchsianGroup::vertex(0));
  spacing_ = 2.0 * rv / settings_.base;
  const int half = static_cast<int>(std::ceil(rv / spacing_)) + 3;
  extent_ = 2 * half + 1;
  origin_ = -half * spacing_;
  lattice_index_.assign(static_cast<std::size_t>(extent_ * extent_), -1);
  for (int i = 0; i < extent_; ++i) {
    for (int j = 0; j < extent_; ++j) {
      const cplx z(origin_ + i * spacing_, origin_ + j * spacing_);
      if (std::abs(z) > rv || !FuchsianGroup::contains(z, 0.0)) continue;
      lattice_index_[static_cast<std::size_t>(i * extent_ + j)] = static_cast<int>(nodes_.size());
      nodes_.push_back(z);
    }
  }
  const auto n = nodes_.size();
  phi_.resize(n);
  dphi_.resize(n);
  inv_factor_.resize(n);
  magnetic_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ScalarJet j = surface_->conformal_jet(nodes_[i]);
    phi_[i] = j.value;
    dphi_[i] = 0.5 * cplx(j.grad[0], -j.grad[1]);
    inv_factor_[i] = std::exp(-j.value);
    magnetic_[i] = surface_->magnetic_density(nodes_[i]);
  }
}

std::vector<std::pair<int, double>> SMGrid::interpolation_stencil(cplx z) const {
  const int ci = static_cast<int>(std::lround((z.real() - origin_) / spacing_));
  const int cj = static_cast<int>(std::lround((z.imag() - origin_) / spacing_));
  std::vector<std::pair<double, int>> cand;
  for (int r = 3; cand.size() < static_cast<std::size_t>(settings_.ghost_stencil) + 8 && r < 12; ++r) {
    cand.clear();
    for (int i = ci - r; i <= ci + r; ++i) {
      for (int j = cj - r; j <= cj + r; ++j) {
        if (i < 0 || j < 0 || i >= extent_ || j >= extent_) continue;
        const int id = lattice_index_[static_cast<std::size_t>(i * extent_ + j)];
        if (id >= 0) cand.emplace_back(std::abs(nodes_[static_cast<std::size_t>(id)] - z), id);
      }
    }
  }
  std::sort(cand.begin(), cand.end());
  const std::size_t m = std::min(cand.size(), static_cast<std::size_t>(settings_.ghost_stencil));
  if (m < 10) throw DomainError("ghost interpolation found too few nodes");
  Eigen::MatrixXd A(static_cast<Eigen::Index>(m), 10);
  Eigen::VectorXd W(static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const cplx d = (nodes_[static_cast<std::size_t>(cand[k].second)] - z) / spacing_;
    const double x = d.real(), y = d.imag();
    const Eigen::Index r = static_cast<Eigen::Index>(k);
    A.row(r) << 1, x, y, x * x, x * y, y * y, x * x * x, x * x * y, x * y * y, y * y * y;
    W[r] = 1.0 / (1.0 + std::norm(d));
  }
  const Eigen::MatrixXd G = A.transpose() * W.asDiagonal() * A;
  const Eigen::VectorXd e0 = Eigen::VectorXd::Unit(10, 0);
  const Eigen::VectorXd v = G.ldlt().solve(e0);
  const Eigen::VectorXd row = W.asDiagonal() * (A * v);
  std::vector<std::pair<int, double>> out;
  out.reserve(m);
  for (std::size_t k = 0; k < m; ++k) out.emplace_back(cand[k].second, row[static_cast<Eigen::Index>(k)]);
  return out;
}

void SMGrid::build_ghosts() {
  const auto& group = surface_->group();
  std::map<int, int> ghost_of_cell;
  neighbors_.resize(nodes_.size());
  const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
  for (int i = 0; i < extent_; ++i) {
    for (int j = 0; j < extent_; ++j) {
      const int id = lattice_index_[static_cast<std::size_t>(i * extent_ + j)];
      if (id < 0) continue;
      for (int d = 0; d < 4; ++d) {
        const int ni = i + di[d], nj = j + dj[d];
        const int cell = ni * extent_ + nj;
        NeighborRef ref;
        const int nid = lattice_index_[static_cast<std::size_t>(cell)];
        if (nid >= 0) {
          ref.node = nid;
        } else {
          auto it = ghost_of_cell.find(cell);
          if (it == ghost_of_cell.end()) {
            Ghost g;
            g.point = cplx(origin_ + ni * spacing_, origin_ + nj * spacing_);
            const Reduction r = group.reduce(g.point, 16);
            g.reduced = r.point;
            g.phase = std::arg(r.map.derivative(r.point));
            g.stencil = interpolation_stencil(r.point);
            it = ghost_of_cell.emplace(cell, static_cast<int>(ghosts_.size())).first;
            ghosts_.push_back(std::move(g));
          }
          ref.ghost = it->second;
        }
        neighbors_[static_cast<std::size_t>(id)][static_cast<std::size_t>(d)] = ref;
      }
    }
  }
}

void SMGrid::build_weights() {
  const double h = spacing_;
  const double rv = std::abs(FuchsianGroup::vertex(0));
  const double R = FuchsianGroup::side_radius();
  std::array<cplx, FuchsianGroup::kSides> centers;
  for (int k = 0; k < FuchsianGroup::kSides; ++k) centers[static_cast<std::size_t>(k)] = FuchsianGroup::side_center(k);
  static const auto gx = gauss_legendre<32>();
  static const auto gy = gauss_legendre<8>();

  weights_.assign(nodes_.size(), 0.0);
  std::map<int, cplx> representative;
  std::function<void(double, double, double, int)> spread;
  // Mass at a lattice point. A point off the octagon hands it to its
  // representative inside, spread again (nearest node after three hops).
  auto deposit = [&](int i, int j, double m, int depth) {
    if (m == 0.0) return;
    const int key = i * extent_ + j;
    const bool on_lattice = i >= 0 && j >= 0 && i < extent_ && j < extent_;
    const int id = on_lattice ? lattice_index_[static_cast<std::size_t>(key)] : -1;
    if (id >= 0) {
      weights_[static_cast<std::size_t>(id)] += m;
      return;
    }
    auto it = representative.find(key);
    if (it == representative.end()) {
      const cplx p(origin_ + i * spacing_, origin_ + j * spacing_);
      it = representative.emplace(key, surface_->group().reduce(p).point).first;
    }
    const cplx r = it->second;
    if (depth < 3) {
      spread(r.real(), r.imag(), m, depth + 1);
      return;
    }
    int best = -1;
    double dbest = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      const double d = std::abs(nodes_[k] - r);
      if (best < 0 || d < dbest) {
        best = static_cast<int>(k);
        dbest = d;
      }
    }
    weights_[static_cast<std::size_t>(best)] += m;
  };
  // Bilinear split of a point mass over the corners of its lattice square.
  spread = [&](double x, double y, double m, int depth) {
    const double u = (x - origin_) / spacing_, v = (y - origin_) / spacing_;
    const int i = static_cast<int>(std::floor(u)), j = static_cast<int>(std::floor(v));
    const double fx = u - i, fy = v - j;
    deposit(i, j, m * (1 - fx) * (1 - fy), depth);
    deposit(i + 1, j, m * fx * (1 - fy), depth);
    deposit(i, j + 1, m * (1 - fx) * fy, depth);
    deposit(i + 1, j + 1, m * fx * fy, depth);
  };

  // Part of the square centred at c inside the octagon, integrated exactly
  // along vertical lines; every quadrature point is spread bilinearly.
  auto clipped = [&](cplx c) {
    for (const auto& [tx, wx] : gx) {
      const double x = c.real() + 0.5 * h * tx;
      const double ymax = rv * rv - x * x;
      if (ymax <= 0.0) continue;
      std::vector<std::pair<double, double>> cut;
      for (const cplx& C : centers) {
        const double s2 = R * R - (x - C.real()) * (x - C.real());
        if (s2 > 0.0) cut.emplace_back(C.imag() - std::sqrt(s2), C.imag() + std::sqrt(s2));
      }
      std::sort(cut.begin(), cut.end());
      double lo = std::max(c.imag() - 0.5 * h, -std::sqrt(ymax));
      const double hi = std::min(c.imag() + 0.5 * h, std::sqrt(ymax));
      auto piece = [&](double a, double b) {
        if (b <= a) return;
        for (const auto& [ty, wy] : gy) {
          const double y = 0.5 * (a + b) + 0.5 * (b - a) * ty;
          spread(x, y, 0.25 * h * wx * (b - a) * wy * std::exp(2.0 * surface_->conformal_jet(cplx(x, y)).value), 0);
        }
      };
      for (const auto& [a, b] : cut) {
        if (a >= hi) break;
        piece(lo, std::min(a, hi));
        lo = std::max(lo, b);
      }
      piece(lo, hi);
    }
  };

  const double margin = h / std::sqrt(2.0);
  for (int i = 0; i < extent_; ++i) {
    for (int j = 0; j < extent_; ++j) {
      const cplx c(origin_ + i * spacing_, origin_ + j * spacing_);
      if (std::abs(c) > rv + margin) continue;
      double clearance = rv - std::abs(c);
      for (const cplx& C : centers) clearance = std::min(clearance, std::abs(c - C) - R);
      const int id = lattice_index_[static_cast<std::size_t>(i * extent_ + j)];
      if (clearance >= margin) {
        const double g = 0.5 * h / std::sqrt(3.0);
        double m = 0.0;
        for (int a = -1; a <= 1; a += 2) {
          for (int b = -1; b <= 1; b += 2) m += std::exp(2.0 * surface_->conformal_jet(c + cplx(a * g, b * g)).value);
        }
        weights_[static_cast<std::size_t>(id)] += 0.25 * h * h * m;
        continue;
      }
      if (clearance <= -margin) continue;
      clipped(c);
    }
  }
  area_ = 0.0;
  for (double v : weights_) area_ += v;
  if (*std::min_element(weights_.begin(), weights_.end()) <= 0.0) throw DomainError("grid produced a non-positive weight");
  for (double& v : weights_) v /= area_;
}

double SMGrid::integrate(const std::vector<double>& values) const {
  if (values.size() != nodes_.size()) throw DomainError("integrate: value count does not match the grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) acc += weights_[i] * values[i];
  return acc * area_;
}

double SMGrid::ghost_pairing_defect() const {
  const auto pair = surface_->group().side_pairings();
  double worst = 0.0;
  for (int s = 0; s < FuchsianGroup::kSides; ++s) {
    // g_k maps side k+4 onto side k; pair[s] returns side s's partner to side s.
    const MobiusMap& to_partner = pair[static_cast<std::size_t>((s + 4) % 8)];
    const MobiusMap& back = pair[static_cast<std::size_t>(s)];
    const int partner = (s + 4) % 8;
    for (int k = 1; k < 16; ++k) {
      const double alpha = s * kPi / 4.0 + (k / 8.0 - 1.0) * kPi / 8.0;
      double lo = 0.0, hi = 1.0 - 1e-12;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (FuchsianGroup::side_excess(std::polar(mid, alpha), s) > 0.0 ? hi : lo) = mid;
      }
      const cplx z = std::polar(0.5 * (lo + hi), alpha);
      const cplx zp = to_partner.apply(z);
      worst = std::max(worst, std::abs(FuchsianGroup::side_excess(zp, partner)));
      worst = std::max(worst, std::abs(back.apply(zp) - z));
    }
  }
  return worst;
}

// ---------------------------------------------------------------- FourierField

FourierField::FourierField(std::shared_ptr<const SMGrid> grid) : grid_(std::move(grid)) {
  c_ = CMatrix::Zero(static_cast<Eigen::Index>(grid_->size()), grid_->fiber());
}

FourierField::FourierField(std::shared_ptr<const SMGrid> grid, CMatrix coeffs)
    : grid_(std::move(grid)), c_(std::move(coeffs)) {
  if (c_.rows() != static_cast<Eigen::Index>(grid_->size()) || c_.cols() != grid_->fiber()) {
    throw DomainError("coefficient array does not match the grid");
  }
}

FourierField FourierField::band_limited(int band) const {
  FourierField out(grid_);
  for (int n = std::max(-band, grid_->min_mode()); n <= std::min(band, grid_->max_mode()); ++n) out.mode(n) = mode(n);
  return out;
}

FourierField FourierField::only_mode(int n) const {
  FourierField out(grid_);
  out.mode(n) = mode(n);
  return out;
}

double FourierField::mode_energy(int n) const {
  const auto col = mode(n);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) acc += grid_->weight(static_cast<std::size_t>(i)) * std::norm(col[i]);
  return acc;
}

std::vector<double> FourierField::mode_norms() const {
  std::vector<double> out;
  for (int n = grid_->min_mode(); n <= grid_->max_mode(); ++n) out.push_back(std::sqrt(mode_energy(n)));
  return out;
}

double FourierField::norm() const {
  double acc = 0.0;
  for (int n = grid_->min_mode(); n <= grid_->max_mode(); ++n) acc += mode_energy(n);
  return std::sqrt(acc);
}

double FourierField::reality_defect() const {
  double worst = 0.0;
  for (int n = 1; n <= grid_->max_mode(); ++n) {
    worst = std::max(worst, (mode(n).conjugate() - mode(-n)).cwiseAbs().maxCoeff());
  }
  return worst;
}

FourierField& FourierField::operator+=(const FourierField& o) {
  c_ += o.c_;
  return *this;
}
FourierField& FourierField::operator-=(const FourierField& o) {
  c_ -= o.c_;
  return *this;
}
FourierField& FourierField::operator*=(cplx s) {
  c_ *= s;
  return *this;
}

cplx inner(const FourierField& f, const FourierField& g) {
  const auto& grid = f.grid();
  cplx acc = 0.0;
  for (Eigen::Index i = 0; i < f.coeffs().rows(); ++i) {
    acc += grid.weight(static_cast<std::size_t>(i)) * g.coeffs().row(i).dot(f.coeffs().row(i));
  }
  return acc;
}

// ---------------------------------------------------------------- transforms

namespace {

CMatrix fiber_basis(const SMGrid& grid) {
  const int N = grid.fiber();
  CMatrix B(N, N);
  for (int n = grid.min_mode(); n <= grid.max_mode(); ++n) {
    for (int j = 0; j < N; ++j) B(grid.column(n), j) = std::polar(1.0, n * grid.theta(j));
  }
  return B;
}

}  // namespace

Projection project_modes(std::shared_ptr<const SMGrid> grid, const CMatrix& samples) {
  if (samples.rows() != static_cast<Eigen::Index>(grid->size()) || samples.cols() != grid->fiber()) {
    throw DomainError("sample array does not match the grid");
  }
  const CMatrix B = fiber_basis(*grid);
  Projection p;
  p.field = FourierField(grid, samples * B.adjoint() / double(grid->fiber()));
  const double total = p.field.norm();
  const double top = p.field.mode_energy(grid->min_mode()) + p.field.mode_energy(grid->min_mode() + 1) +
                     p.field.mode_energy(grid->max_mode());
  p.top_fraction = total > 0.0 ? top / (total * total) : 0.0;
  p.aliasing_warning = p.top_fraction > 1e-8;
  return p;
}

Projection project_modes(std::shared_ptr<const SMGrid> grid, const RMatrix& samples) {
  return project_modes(std::move(grid), CMatrix(samples.cast<cplx>()));
}

CMatrix synthesize(const FourierField& f) { return f.coeffs() * fiber_basis(f.grid()); }

RMatrix sample_function(const SMGrid& grid, const std::function<double(const Vec3&)>& f) {
  RMatrix out(static_cast<Eigen::Index>(grid.size()), grid.fiber());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int j = 0; j < grid.fiber(); ++j) {
      out(static_cast<Eigen::Index>(i), j) = f(Vec3(grid.node(i).real(), grid.node(i).imag(), grid.theta(j)));
    }
  }
  return out;
}

// ---------------------------------------------------------------- operators

namespace {

// Mode coefficients at the ghosts: exp(-i n phase) * interpolated value.
CMatrix ghost_values(const FourierField& f) {
  const auto& grid = f.grid();
  const auto& ghosts = grid.ghosts();
  CMatrix G = CMatrix::Zero(static_cast<Eigen::Index>(ghosts.size()), grid.fiber());
  for (std::size_t g = 0; g < ghosts.size(); ++g) {
    Eigen::RowVectorXcd v = Eigen::RowVectorXcd::Zero(grid.fiber());
    for (const auto& [k, a] : ghosts[g].stencil) v += a * f.coeffs().row(k);
    for (int n = grid.min_mode(); n <= grid.max_mode(); ++n) {
      v[grid.column(n)] *= std::polar(1.0, -n * ghosts[g].phase);
    }
    G.row(static_cast<Eigen::Index>(g)) = v;
  }
  return G;
}

void check_band(const FourierField& f, int n, const char* what) {
  const auto col = f.mode(n);
  const double top = col.cwiseAbs().maxCoeff();
  const double all = f.coeffs().cwiseAbs().maxCoeff();
  if (top > 1e-13 * std::max(all, 1e-300)) {
    throw BandOverflow(std::string(what) + ": content in mode " + std::to_string(n) + " would leave the fiber band");
  }
}

}  // namespace

std::vector<std::pair<int, cplx>> neighbor_weights(const SMGrid& grid, const NeighborRef& ref, int n) {
  if (ref.node >= 0) return {{ref.node, cplx(1.0, 0.0)}};
  const Ghost& g = grid.ghosts()[static_cast<std::size_t>(ref.ghost)];
  const cplx phase = std::polar(1.0, -n * g.phase);
  std::vector<std::pair<int, cplx>> out;
  out.reserve(g.stencil.size());
  for (const auto& [k, a] : g.stencil) out.emplace_back(k, a * phase);
  return out;
}

std::pair<FourierField, FourierField> base_derivatives(const FourierField& f) {
  const auto& grid = f.grid();
  const CMatrix G = ghost_values(f);
  FourierField dx(f.grid_ptr()), dy(f.grid_ptr());
  auto value = [&](const NeighborRef& r) -> Eigen::RowVectorXcd {
    return r.node >= 0 ? Eigen::RowVectorXcd(f.coeffs().row(r.node)) : Eigen::RowVectorXcd(G.row(r.ghost));
  };
  const double inv = 0.5 / grid.spacing();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    dx.coeffs().row(r) = (value(grid.neighbor(i, 0)) - value(grid.neighbor(i, 1))) * inv;
    dy.coeffs().row(r) = (value(grid.neighbor(i, 2)) - value(grid.neighbor(i, 3))) * inv;
  }
  return {dx, dy};
}

FourierField apply_eta_plus(const FourierField& f) {
  const auto& grid = f.grid();
  check_band(f, grid.max_mode(), "eta+");
  const auto [dx, dy] = base_derivatives(f);
  FourierField out(f.grid_ptr());
  for (int n = grid.min_mode(); n < grid.max_mode(); ++n) {
    const int c = grid.column(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const cplx d = 0.5 * (dx.coeffs()(r, c) - kI * dy.coeffs()(r, c));
      out.coeffs()(r, c + 1) = grid.inv_factor(i) * (d - double(n) * f.coeffs()(r, c) * grid.dPhi(i));
    }
  }
  return out;
}

FourierField apply_eta_minus(const FourierField& f) {
  const auto& grid = f.grid();
  check_band(f, grid.min_mode(), "eta-");
  const auto [dx, dy] = base_derivatives(f);
  FourierField out(f.grid_ptr());
  for (int n = grid.min_mode() + 1; n <= grid.max_mode(); ++n) {
    const int c = grid.column(n);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Eigen::Index r = static_cast<Eigen::Index>(i);
      const cplx db = 0.5 * (dx.coeffs()(r, c) + kI * dy.coeffs()(r, c));
      out.coeffs()(r, c - 1) = grid.inv_factor(i) * (db + double(n) * f.coeffs()(r, c) * std::conj(grid.dPhi(i)));
    }
  }
  return out;
}

FourierField apply_X(const FourierField& f) { return apply_eta_plus(f) + apply_eta_minus(f); }

FourierField apply_H(const FourierField& f) { return kI * (apply_eta_plus(f) - apply_eta_minus(f)); }

FourierField apply_V(const FourierField& f) {
  FourierField out = f;
  for (int n = f.grid().min_mode(); n <= f.grid().max_mode(); ++n) out.mode(n) *= kI * double(n);
  return out;
}

namespace {

FourierField magnetic_V(const FourierField& f, double lambda) {
  FourierField v = apply_V(f);
  for (std::size_t i = 0; i < f.grid().size(); ++i) v.coeffs().row(static_cast<Eigen::Index>(i)) *= lambda * f.grid().magnetic(i);
  return v;
}

struct DirectFrame {
  CMatrix X, H, Vs;
};

DirectFrame direct_frame(const FourierField& f) {
  const auto& grid = f.grid();
  const auto [dx, dy] = base_derivatives(f);
  const CMatrix Gx = synthesize(dx), Gy = synthesize(dy), Gt = synthesize(apply_V(f));
  DirectFrame d;
  d.X.resize(Gx.rows(), Gx.cols());
  d.H.resize(Gx.rows(), Gx.cols());
  d.Vs = Gt;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    const double px = 2.0 * grid.dPhi(i).real(), py = -2.0 * grid.dPhi(i).imag();
    const double E = grid.inv_factor(i);
    for (int j = 0; j < grid.fiber(); ++j) {
      const double c = std::cos(grid.theta(j)), s = std::sin(grid.theta(j));
      d.X(r, j) = E * (c * Gx(r, j) + s * Gy(r, j) + (py * c - px * s) * Gt(r, j));
      d.H(r, j) = E * (-s * Gx(r, j) + c * Gy(r, j) - (px * c + py * s) * Gt(r, j));
    }
  }
  return d;
}

}  // namespace

FourierField apply_X_lambda(const FourierField& f, double lambda) { return apply_X(f) + magnetic_V(f, lambda); }

FourierField apply_X_direct(const FourierField& f) { return project_modes(f.grid_ptr(), direct_frame(f).X).field; }

FourierField apply_H_direct(const FourierField& f) { return project_modes(f.grid_ptr(), direct_frame(f).H).field; }

FourierField apply_X_lambda_direct(const FourierField& f, double lambda) {
  const auto& grid = f.grid();
  DirectFrame d = direct_frame(f);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i);
    d.X.row(r) += lambda * grid.magnetic(i) * d.Vs.row(r);
  }
  return project_modes(f.grid_ptr(), d.X).field;
}

double adjointness_residual(const FourierField& f, const FourierField& g) {
  return std::abs(inner(apply_eta_plus(f), g) + inner(f, apply_eta_minus(g)));
}

double mode_locality_residual(const FourierField& f, int n) {
  const DirectFrame d = direct_frame(f);
  const FourierField eta = project_modes(f.grid_ptr(), CMatrix(0.5 * (d.X - kI * d.H))).field;
  double off = 0.0;
  for (int m = f.grid().min_mode(); m <= f.grid().max_mode(); ++m) {
    if (m != n + 1) off += eta.mode_energy(m);
  }
  const double e = f.norm();
  return off / std::max(e * e, 1e-300);
}

EnergySlack energy_inequality_check(const FourierField& f, int n, double A) {
  if (n < 0) throw DomainError("energy inequality is stated for n >= 0");
  EnergySlack s;
  const double p = apply_eta_plus(f).norm(), m = apply_eta_minus(f).norm(), q = f.norm();
  s.plus = p * p;
  s.minus = m * m;
  s.norm2 = q * q;
  s.slack = s.plus - A * n * s.norm2 - s.minus;
  return s;
}

std::vector<double> mode_transport_residual(const FourierField& g, double lambda) {
  const FourierField direct = apply_X_lambda_direct(g, lambda);
  const FourierField formula = apply_eta_plus(g) + apply_eta_minus(g) + magnetic_V(g, lambda);
  const FourierField diff = direct - formula;
  std::vector<double> out;
  for (int n = g.grid().min_mode(); n <= g.grid().max_mode(); ++n) out.push_back(std::sqrt(diff.mode_energy(n)));
  return out;
}

RecurrenceReport recurrence_diagnostics(const FourierField& g, int N, double lambda, double A, double tau_ineq,
                                        double mode_tolerance) {
  const auto& grid = g.grid();
  if (!grid.surface().constant_magnetic()) {
    throw HypothesisViolation("F=1", "recurrence diagnostics need a constant magnetic density");
  }
  if (A - lambda * lambda < 0.0) {
    throw HypothesisViolation("A-lambda^2>=0", "A = " + std::to_string(A) + ", lambda = " + std::to_string(lambda));
  }
  RecurrenceReport rep;
  rep.N = N;
  rep.lambda = lambda;
  rep.A = A;
  const int top = grid.max_mode();
  // Mode equation eta+ g_{n-1} + eta- g_{n+1} + i n lambda F g_n = 0 for n > N.
  std::vector<FourierField> single;
  for (int n = grid.min_mode(); n <= top; ++n) single.push_back(g.only_mode(n));
  auto part = [&](int n) -> const FourierField& { return single[static_cast<std::size_t>(n - grid.min_mode())]; };
  const FourierField Xg = apply_X_lambda(g.band_limited(top - 1), lambda);
  for (int n = N + 1; n <= top - 2; ++n) rep.mode_equation_residual = std::max(rep.mode_equation_residual, std::sqrt(Xg.mode_energy(n)));
  if (rep.mode_equation_residual > mode_tolerance) {
    throw HypothesisViolation("mode equation beyond N",
                              "residual " + std::to_string(rep.mode_equation_residual) + " exceeds " +
                                  std::to_string(mode_tolerance));
  }
  const double l2 = lambda * lambda;
  std::vector<double> gn(static_cast<std::size_t>(top + 2), 0.0), ep(static_cast<std::size_t>(top + 2), 0.0);
  for (int n = 0; n <= top; ++n) {
    const double e = part(n).mode_energy(n);
    gn[static_cast<std::size_t>(n)] = e;
    if (n < top) {
      const double p = apply_eta_plus(part(n)).norm();
      ep[static_cast<std::size_t>(n)] = p * p;
    }
  }
  auto G = [&](int n) { return n >= 0 && n <= top ? gn[static_cast<std::size_t>(n)] : 0.0; };
  auto P = [&](int n) { return n >= 0 && n < top ? ep[static_cast<std::size_t>(n)] : 0.0; };
  auto a = [&](int n) { return P(n) + P(n - 1); };
  auto b = [&](int n) { return a(n) + a(n - 1); };
  for (int n = 1; n <= top - 2; ++n) {
    const double r = -double((n - 2) * (n - 2)) * l2 * G(n - 2) + (n - 1) * (A - 2.0 * l2) * G(n - 1) +
                     (2.0 * A * n + l2 * n * n) * G(n) + A * (n + 1) * G(n + 1);
    rep.n.push_back(n);
    rep.a.push_back(a(n));
    rep.b.push_back(b(n));
    rep.r.push_back(r);
    if (n > N + 2) {
      const double s = b(n + 1) - b(n - 1) - r;
      rep.slack.push_back(s);
      if (s < -tau_ineq) rep.violations.push_back(n);
    }
  }
  return rep;
}

double refinement_tolerance(double coarse, double fine) { return 2.0 * (4.0 / 3.0) * std::abs(coarse - fine); }

// ---------------------------------------------------------------- test fields

ModeFieldSpec random_mode_spec(const SurfaceModel& surface, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto bumps = [&](int count, double amp) {
    std::vector<Bump> out;
    for (int k = 0; k < count; ++k) {
      Bump b;
      b.center = std::polar(0.55 * std::sqrt(U(rng)), 2.0 * kPi * U(rng));
      b.width = 0.45 + 0.3 * U(rng);
      b.amplitude = amp * (U(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + 0.5 * U(rng));
      out.push_back(b);
    }
    return out;
  };
  ModeFieldSpec s;
  s.h = InvariantField(0.0, bumps(3, 1.0), surface.group());
  s.w = InvariantField(0.5 + U(rng), bumps(2, 0.5), surface.group());
  return s;
}

ModeJet mode_jet(const SurfaceModel& surface, cplx z, int n, const ModeFieldSpec& spec) {
  const ScalarJet w = spec.w.jet(z);
  const cplx dw = 0.5 * cplx(w.grad[0], -w.grad[1]);
  const cplx dbw = std::conj(dw);
  ModeJet out;
  if (n == 0) {
    out.u = w.value;
    out.du = dw;
    out.dbu = dbw;
    return out;
  }
  const int m = std::abs(n);
  const ScalarJet h = spec.h.jet(z);
  const ScalarJet P = surface.conformal_jet(z);
  const cplx dPhi = 0.5 * cplx(P.grad[0], -P.grad[1]);
  const double hxx = h.hess[0], hxy = h.hess[1], hyy = h.hess[2];
  const cplx dd = 0.25 * cplx(hxx - hyy, -2.0 * hxy);      // d d h
  const cplx dbd = 0.25 * (hxx + hyy);                      // dbar d h
  const cplx dbdb = std::conj(dd);                          // dbar dbar h
  cplx q, dq, dbq;
  if (n > 0) {
    q = 0.5 * cplx(h.grad[0], -h.grad[1]);
    dq = dd;
    dbq = dbd;
  } else {
    q = 0.5 * cplx(h.grad[0], h.grad[1]);
    dq = dbd;
    dbq = dbdb;
  }
  const double e = std::exp(-m * P.value);
  const cplx qm = std::pow(q, m), qm1 = std::pow(q, m - 1);
  out.u = e * qm * w.value;
  out.du = e * (-double(m) * dPhi * qm * w.value + double(m) * qm1 * dq * w.value + qm * dw);
  out.dbu = e * (-double(m) * std::conj(dPhi) * qm * w.value + double(m) * qm1 * dbq * w.value + qm * dbw);
  return out;
}

FourierField single_mode_field(std::shared_ptr<const SMGrid> grid, int n, const ModeFieldSpec& spec) {
  if (n < grid->min_mode() || n > grid->max_mode()) throw DomainError("mode outside the fiber band");
  FourierField f(grid);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    f.coeffs()(static_cast<Eigen::Index>(i), grid->column(n)) = mode_jet(grid->surface(), grid->node(i), n, spec).u;
  }
  return f;
}

FourierField random_band_field(std::shared_ptr<const SMGrid> grid, int band, std::mt19937_64& rng,
                               std::vector<ModeFieldSpec>* specs) {
  if (band + 1 > grid->max_mode()) throw DomainError("band too wide for the fiber resolution");
  std::normal_distribution<double> N01(0.0, 1.0);
  FourierField f(grid);
  for (int n = 0; n <= band; ++n) {
    ModeFieldSpec s = random_mode_spec(grid->surface(), rng);
    const cplx c(N01(rng), n == 0 ? 0.0 : N01(rng));
    FourierField u = single_mode_field(grid, n, s);
    const double nu = u.norm();
    if (nu > 0.0) u *= c / nu;
    f.mode(n) += u.mode(n);
    if (n > 0) f.mode(-n) += u.mode(n).conjugate();
    if (specs) specs->push_back(std::move(s));
  }
  const double nf = f.norm();
  if (nf > 0.0) f *= 1.0 / nf;
  return f;
}

std::vector<cplx> exact_eta_plus(const SMGrid& grid, int n, const ModeFieldSpec& spec) {
  std::vector<cplx> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ModeJet j = mode_jet(grid.surface(), grid.node(i), n, spec);
    out[i] = grid.inv_factor(i) * (j.du - double(n) * j.u * grid.dPhi(i));
  }
  return out;
}

std::vector<cplx> exact_eta_minus(const SMGrid& grid, int n, const ModeFieldSpec& spec) {
  std::vector<cplx> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const ModeJet j = mode_jet(grid.surface(), grid.node(i), n, spec);
    out[i] = grid.inv_factor(i) * (j.dbu + double(n) * j.u * std::conj(grid.dPhi(i)));
  }
  return out;
}

}  // namespace maglab
