#include "maglab/surface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "maglab/errors.hpp"

namespace maglab {

namespace {

constexpr double kPi = std::numbers::pi;
// exp(-40) is below double resolution relative to O(1) amplitudes.
constexpr double kBumpCut = 40.0;

// Margin (hyperbolic) around the octagon where fields are evaluated directly.
constexpr double kDirectMargin = 0.75;

double direct_radius() { return FuchsianGroup::circumradius() + kDirectMargin; }

}  // namespace

ScalarJet& ScalarJet::operator+=(const ScalarJet& o) {
  value += o.value;
  for (int i = 0; i < 2; ++i) grad[i] += o.grad[i];
  for (int i = 0; i < 3; ++i) hess[i] += o.hess[i];
  return *this;
}

ScalarJet pull_back(const ScalarJet& in, const MobiusMap& w, cplx z) {
  const cplx w1 = w.derivative(z);
  const cplx w2 = w1 * w.log_derivative_slope(z);
  const cplx f_w(0.5 * in.grad[0], -0.5 * in.grad[1]);
  const cplx f_ww(0.25 * (in.hess[0] - in.hess[2]), -0.5 * in.hess[1]);
  const double f_wwbar = 0.25 * (in.hess[0] + in.hess[2]);

  const cplx f_z = f_w * w1;
  const cplx f_zz = f_ww * w1 * w1 + f_w * w2;
  const double f_zzbar = f_wwbar * std::norm(w1);

  ScalarJet out;
  out.value = in.value;
  out.grad = {2.0 * f_z.real(), -2.0 * f_z.imag()};
  out.hess = {2.0 * f_zz.real() + 2.0 * f_zzbar, -2.0 * f_zz.imag(), -2.0 * f_zz.real() + 2.0 * f_zzbar};
  return out;
}

ScalarJet bump_jet(const Bump& b, cplx z) {
  ScalarJet out;
  const double k = 2.0 / (1.0 - std::norm(b.center));
  const double dx = z.real() - b.center.real();
  const double dy = z.imag() - b.center.imag();
  const double A = dx * dx + dy * dy;
  const double B = 1.0 - std::norm(z);
  const double s = k * A / B;
  const double w2 = b.width * b.width;
  if (s / w2 > kBumpCut) return out;

  const double val = b.amplitude * std::exp(-s / w2);
  const double d1 = -val / w2;        // d/ds
  const double d2 = val / (w2 * w2);  // d2/ds2

  const std::array<double, 2> Ai{2.0 * dx, 2.0 * dy};
  const std::array<double, 2> Bi{-2.0 * z.real(), -2.0 * z.imag()};
  std::array<double, 2> si{};
  for (int i = 0; i < 2; ++i) si[i] = k * (Ai[i] / B - A * Bi[i] / (B * B));
  auto sij = [&](int i, int j) {
    const double delta = i == j ? 1.0 : 0.0;
    return k * (2.0 * delta / B - (Ai[i] * Bi[j] + Ai[j] * Bi[i]) / (B * B) + 2.0 * A * delta / (B * B) +
                2.0 * A * Bi[i] * Bi[j] / (B * B * B));
  };
  out.value = val;
  out.grad = {d1 * si[0], d1 * si[1]};
  out.hess = {d2 * si[0] * si[0] + d1 * sij(0, 0), d2 * si[0] * si[1] + d1 * sij(0, 1),
              d2 * si[1] * si[1] + d1 * sij(1, 1)};
  return out;
}

InvariantField::InvariantField(double constant, std::vector<Bump> bumps, const FuchsianGroup& group,
                               int max_word)
    : constant_(constant),
      bumps_(std::move(bumps)),
      max_word_(max_word),
      group_(std::make_shared<const FuchsianGroup>(group)) {
  for (const auto& b : bumps_) {
    if (!(b.width > 0.0)) throw DomainError("bump width must be positive");
    if (!(std::abs(b.center) < 1.0 - DiskPoint::kBoundaryMargin)) throw DomainError("bump center outside disk");
    // Translates whose support reaches the direct-evaluation region.
    const double reach = std::acosh(1.0 + kBumpCut * b.width * b.width);
    const double dc = hyperbolic_distance(b.center, 0.0);
    const double radius = direct_radius() + reach + dc;
    const auto elements = group_->elements_within(radius, max_word_);
    for (const auto& g : elements) {
      const cplx c = g.apply(b.center);
      if (hyperbolic_distance(c, 0.0) <= direct_radius() + reach) centers_.push_back({c, b.width, b.amplitude});
    }
    // Neglected mass: everything beyond the cutoff, or beyond the word budget.
    truncation_bound_ = std::max(truncation_bound_, std::abs(b.amplitude) * std::exp(-kBumpCut));
  }
  build_bins();
}

void InvariantField::build_bins() {
  bin_count_ = 48;
  bin_extent_ = std::tanh(0.5 * direct_radius());
  bins_.assign(static_cast<std::size_t>(bin_count_ * bin_count_), {});
  const double cell = 2.0 * bin_extent_ / bin_count_;
  const double half_diag = cell / std::sqrt(2.0);
  for (int i = 0; i < bin_count_; ++i) {
    for (int j = 0; j < bin_count_; ++j) {
      const cplx cc(-bin_extent_ + (i + 0.5) * cell, -bin_extent_ + (j + 0.5) * cell);
      const double outer = std::abs(cc) + half_diag;
      auto& list = bins_[static_cast<std::size_t>(i * bin_count_ + j)];
      for (std::size_t k = 0; k < centers_.size(); ++k) {
        const auto& b = centers_[k];
        if (outer >= 0.999) {
          list.push_back(static_cast<int>(k));
          continue;
        }
        const double cell_radius = 2.0 * half_diag / (1.0 - outer * outer);
        const double reach = std::acosh(1.0 + kBumpCut * b.width * b.width);
        if (hyperbolic_distance(b.center, cc) - cell_radius <= reach) list.push_back(static_cast<int>(k));
      }
    }
  }
}

ScalarJet InvariantField::jet_direct(cplx z) const {
  ScalarJet out;
  out.value = constant_;
  const double cell = 2.0 * bin_extent_ / bin_count_;
  const int i = static_cast<int>(std::floor((z.real() + bin_extent_) / cell));
  const int j = static_cast<int>(std::floor((z.imag() + bin_extent_) / cell));
  if (i < 0 || j < 0 || i >= bin_count_ || j >= bin_count_) {
    for (const auto& b : centers_) out += bump_jet(b, z);
    return out;
  }
  for (int k : bins_[static_cast<std::size_t>(i * bin_count_ + j)]) out += bump_jet(centers_[k], z);
  return out;
}

ScalarJet InvariantField::jet(cplx z) const {
  if (bumps_.empty()) {
    ScalarJet out;
    out.value = constant_;
    return out;
  }
  if (hyperbolic_distance(z, 0.0) <= direct_radius()) return jet_direct(z);
  const Reduction r = group_->reduce(z, 64);
  return pull_back(jet_direct(r.point), r.map.inverse(), z);
}

SurfaceModel::SurfaceModel() : SurfaceModel(InvariantField{}, InvariantField(1.0, {}, FuchsianGroup{})) {}

SurfaceModel::SurfaceModel(InvariantField phi, InvariantField magnetic)
    : group_(std::make_shared<const FuchsianGroup>()), phi_(std::move(phi)), magnetic_(std::move(magnetic)) {
  compute_constants();
}

SurfaceModel SurfaceModel::hyperbolic() { return SurfaceModel(); }

void SurfaceModel::compute_constants() {
  if (phi_.is_constant() && magnetic_.is_constant()) {
    area_ = 4.0 * kPi * std::exp(2.0 * phi_.constant());
    magnetic_integral_ = magnetic_.constant() * area_;
  } else {
    area_ = integrate([](cplx) { return 1.0; });
    magnetic_integral_ = integrate([this](cplx z) { return magnetic_.value(z); });
  }
  // Gauss-Bonnet on genus 2: integral of K dA = -4 pi.
  cohomology_constant_ = magnetic_integral_ / (-4.0 * kPi);
}

double SurfaceModel::mean_magnetic() const { return magnetic_integral_ / area_; }

ScalarJet SurfaceModel::conformal_jet(cplx z) const {
  ScalarJet out = phi_.jet(z);
  const double x = z.real(), y = z.imag();
  const double B = 1.0 - x * x - y * y;
  if (!(B > 0.0)) throw DomainError("conformal_jet: point outside disk");
  out.value += std::log(2.0 / B);
  out.grad[0] += 2.0 * x / B;
  out.grad[1] += 2.0 * y / B;
  out.hess[0] += 2.0 / B + 4.0 * x * x / (B * B);
  out.hess[1] += 4.0 * x * y / (B * B);
  out.hess[2] += 2.0 / B + 4.0 * y * y / (B * B);
  return out;
}

double SurfaceModel::conformal_factor(cplx z) const { return std::exp(conformal_jet(z).value); }

double SurfaceModel::curvature(cplx z) const {
  const ScalarJet p = phi_.jet(z);
  const double base = 0.25 * (1.0 - std::norm(z)) * (1.0 - std::norm(z));  // e^{-2 Phi_0}
  return std::exp(-2.0 * p.value) * (-1.0 - base * p.laplacian());
}

double SurfaceModel::integrate(const std::function<double(cplx)>& f, int) const {
  using boost::math::quadrature::gauss;
  const double C = [] {
    const double m = std::tanh(0.5 * FuchsianGroup::inradius());
    return 0.5 * (1.0 + m * m) / m;
  }();
  auto rmax = [C](double t) {
    const double c = std::cos(t);
    return C * c - std::sqrt(C * C * c * c - 1.0);
  };
  double total = 0.0;
  for (int sector = 0; sector < 8; ++sector) {
    const double mid = sector * kPi / 4.0;
    auto angular = [&](double t) {
      const double R = rmax(t);
      double sum = 0.0;
      for (int piece = 0; piece < 3; ++piece) {
        const double r0 = R * piece / 3.0, r1 = R * (piece + 1) / 3.0;
        sum += gauss<double, 30>::integrate(
            [&](double r) {
              const cplx z = std::polar(r, mid + t);
              const double e = conformal_factor(z);
              return f(z) * e * e * r;
            },
            r0, r1);
      }
      return sum;
    };
    total += gauss<double, 30>::integrate(angular, -kPi / 8.0, 0.0) +
             gauss<double, 30>::integrate(angular, 0.0, kPi / 8.0);
  }
  return total;
}

namespace {

std::pair<double, double> sampled_range(const std::function<double(cplx)>& f, int samples) {
  double lo = 1e300, hi = -1e300;
  const double rc = std::tanh(0.5 * FuchsianGroup::circumradius());
  for (int i = 0; i <= samples; ++i) {
    for (int j = 0; j < 4 * samples; ++j) {
      const cplx z = std::polar(rc * i / samples, 2.0 * kPi * j / (4 * samples));
      if (!FuchsianGroup::contains(z, 1e-9)) continue;
      const double v = f(z);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

}  // namespace

std::pair<double, double> SurfaceModel::curvature_range(int samples) const {
  if (phi_.is_constant()) {
    const double k = -std::exp(-2.0 * phi_.constant());
    return {k, k};
  }
  return sampled_range([this](cplx z) { return curvature(z); }, samples);
}

std::pair<double, double> SurfaceModel::magnetic_range(int samples) const {
  if (magnetic_.is_constant()) return {magnetic_.constant(), magnetic_.constant()};
  return sampled_range([this](cplx z) { return magnetic_density(z); }, samples);
}

namespace {

nlohmann::json field_to_json(const InvariantField& f) {
  nlohmann::json j;
  j["constant"] = f.constant();
  j["bumps"] = nlohmann::json::array();
  for (const auto& b : f.bumps()) {
    j["bumps"].push_back({{"center", {b.center.real(), b.center.imag()}},
                          {"width", b.width},
                          {"amplitude", b.amplitude}});
  }
  return j;
}

InvariantField field_from_json(const nlohmann::json& j, double default_constant, int max_word,
                               const FuchsianGroup& group) {
  const double constant = j.value("constant", default_constant);
  std::vector<Bump> bumps;
  if (j.contains("bumps")) {
    for (const auto& b : j.at("bumps")) {
      const auto c = b.at("center");
      bumps.push_back({cplx(c.at(0).get<double>(), c.at(1).get<double>()), b.at("width").get<double>(),
                       b.at("amplitude").get<double>()});
    }
  }
  return InvariantField(constant, std::move(bumps), group, max_word);
}

}  // namespace

SurfaceModel SurfaceModel::from_json(const nlohmann::json& j) {
  const int L = j.value("truncation_length", FuchsianGroup::kDefaultMaxWord);
  FuchsianGroup group;
  InvariantField phi = j.contains("phi") ? field_from_json(j.at("phi"), 0.0, L, group)
                                         : InvariantField(0.0, {}, group, L);
  InvariantField mag = j.contains("magnetic") ? field_from_json(j.at("magnetic"), 1.0, L, group)
                                              : InvariantField(1.0, {}, group, L);
  return SurfaceModel(std::move(phi), std::move(mag));
}

nlohmann::json SurfaceModel::to_json() const {
  nlohmann::json j;
  j["phi"] = field_to_json(phi_);
  j["magnetic"] = field_to_json(magnetic_);
  j["truncation_length"] = phi_.max_word();
  j["cohomology_constant"] = cohomology_constant_;
  j["area"] = area_;
  j["truncation_bound"] = std::max(phi_.truncation_bound(), magnetic_.truncation_bound());
  return j;
}

double curvature_at(const SurfaceModel& model, const DiskPoint& p) { return model.curvature(p.z()); }

Christoffel christoffel_at(const SurfaceModel& model, const DiskPoint& p) {
  const ScalarJet phi = model.conformal_jet(p.z());
  Christoffel c;
  for (int k = 0; k < 2; ++k) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        c.gamma[k][i][j] = (i == k ? phi.grad[j] : 0.0) + (j == k ? phi.grad[i] : 0.0) -
                           (i == j ? phi.grad[k] : 0.0);
      }
    }
  }
  return c;
}

}  // namespace maglab
