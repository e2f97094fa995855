#include "maglab/fuchsian.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <utility>

#include "maglab/errors.hpp"

namespace maglab {

namespace {

constexpr double kPi = std::numbers::pi;

double cot(double x) { return std::cos(x) / std::sin(x); }

// Euclidean data of the geodesic through side k: circle orthogonal to the unit
// circle, centered at dist * e^{i k pi/4}.
struct SideCircle {
  double center_distance;
  double radius;
};

SideCircle side_circle() {
  const double m = std::tanh(0.5 * FuchsianGroup::inradius());
  const double c = 0.5 * (1.0 + m * m) / m;
  return {c, std::sqrt(c * c - 1.0)};
}

}  // namespace

std::string to_string(const Word& word) {
  std::string out;
  for (std::size_t i = 0; i < word.size(); ++i) {
    if (i) out += ' ';
    out += word[i].inverse ? 'G' : 'g';
    out += std::to_string(word[i].generator + 1);
  }
  return out;
}

Word parse_word(const std::string& text) {
  Word w;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (tok.size() != 2 || (tok[0] != 'g' && tok[0] != 'G') || tok[1] < '1' || tok[1] > '4') {
      throw DomainError("bad group letter '" + tok + "'");
    }
    w.push_back({tok[1] - '1', tok[0] == 'G'});
  }
  return w;
}

Word inverse_word(const Word& word) {
  Word out(word.rbegin(), word.rend());
  for (auto& l : out) l.inverse = !l.inverse;
  return out;
}

FuchsianGroup::FuchsianGroup() {
  for (int k = 0; k < kGenerators; ++k) {
    generators_[k] = MobiusMap::translation(2.0 * inradius(), k * kPi / 4.0);
  }
}

double FuchsianGroup::inradius() { return std::acosh(cot(kPi / 8.0)); }

double FuchsianGroup::circumradius() {
  const double c = cot(kPi / 8.0);
  return std::acosh(c * c);
}

cplx FuchsianGroup::vertex(int k) {
  return std::polar(std::tanh(0.5 * circumradius()), kPi / 8.0 + k * kPi / 4.0);
}

cplx FuchsianGroup::side_midpoint(int k) {
  return std::polar(std::tanh(0.5 * inradius()), k * kPi / 4.0);
}

MobiusMap FuchsianGroup::letter_map(const Letter& l) const {
  return l.inverse ? generators_[l.generator].inverse() : generators_[l.generator];
}

MobiusMap FuchsianGroup::word_map(const Word& w) const {
  MobiusMap m;
  for (const auto& l : w) m = m * letter_map(l);
  return m;
}

std::array<MobiusMap, 8> FuchsianGroup::side_pairings() const {
  std::array<MobiusMap, 8> out;
  for (int k = 0; k < kGenerators; ++k) {
    out[k] = generators_[k];
    out[k + 4] = generators_[k].inverse();
  }
  return out;
}

MobiusMap FuchsianGroup::relator_product() const {
  return word_map(parse_word("g1 G2 g3 G4 G1 g2 G3 g4"));
}

cplx FuchsianGroup::side_center(int k) {
  static const SideCircle sc = side_circle();
  return std::polar(sc.center_distance, k * kPi / 4.0);
}

double FuchsianGroup::side_radius() {
  static const SideCircle sc = side_circle();
  return sc.radius;
}

double FuchsianGroup::side_excess(cplx z, int k) {
  static const SideCircle sc = side_circle();
  const cplx center = std::polar(sc.center_distance, k * kPi / 4.0);
  return sc.radius - std::abs(z - center);
}

bool FuchsianGroup::contains(cplx z, double tol) {
  for (int k = 0; k < kSides; ++k) {
    if (side_excess(z, k) > tol) return false;
  }
  return true;
}

Reduction FuchsianGroup::reduce(cplx z, int max_word) const {
  if (!(std::abs(z) < 1.0)) throw DomainError("reduce: point outside disk");
  Reduction r{z, {}, MobiusMap::identity()};
  for (int step = 0;; ++step) {
    int worst = -1;
    double excess = 1e-12;
    for (int k = 0; k < kSides; ++k) {
      const double e = side_excess(r.point, k);
      if (e > excess) {
        excess = e;
        worst = k;
      }
    }
    if (worst < 0) return r;
    if (step >= max_word) {
      throw OutOfReachError("reduction did not reach the octagon within " + std::to_string(max_word) +
                            " steps");
    }
    // Beyond side k (k<4): pull back by g_k^{-1}; beyond side k+4: by g_k.
    const Letter undo{worst % 4, worst < 4};  // letter applied to the point
    const Letter kept{worst % 4, worst >= 4};  // letter recorded in the word
    r.point = letter_map(undo).apply(r.point);
    r.word.push_back(kept);
    r.map = r.map * letter_map(kept);
  }
}

std::vector<MobiusMap> FuchsianGroup::elements_within(double radius, int max_word) const {
  std::vector<MobiusMap> out{MobiusMap::identity()};
  std::map<std::pair<long long, long long>, bool> seen;
  auto key = [](cplx z) {
    return std::make_pair(std::llround(z.real() * 1e9), std::llround(z.imag() * 1e9));
  };
  seen[key(0.0)] = true;
  std::vector<MobiusMap> frontier{MobiusMap::identity()};
  const auto letters = side_pairings();
  for (int depth = 0; depth < max_word && !frontier.empty(); ++depth) {
    std::vector<MobiusMap> next;
    for (const auto& g : frontier) {
      for (const auto& l : letters) {
        const MobiusMap h = g * l;
        const cplx image = h.apply(0.0);
        const double d = hyperbolic_distance(image, 0.0);
        // Expand slightly past the radius so vertex-adjacent tiles are reached.
        if (d > radius + 1.0) continue;
        auto [it, inserted] = seen.emplace(key(image), true);
        if (!inserted) continue;
        if (d <= radius) out.push_back(h);
        next.push_back(h);
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace maglab
