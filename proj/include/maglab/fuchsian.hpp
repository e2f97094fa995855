#pragma once

#include <array>
#include <string>
#include <vector>

#include "maglab/mobius.hpp"

namespace maglab {

// Letter of a group word: generator index 0..3 and orientation.
struct Letter {
  int generator = 0;
  bool inverse = false;
  bool operator==(const Letter&) const = default;
};

using Word = std::vector<Letter>;

std::string to_string(const Word& word);
// Parses "g1 G2 g3" (capital letter = inverse). Empty string is the identity.
Word parse_word(const std::string& text);
Word inverse_word(const Word& word);

struct Reduction {
  cplx point;         // inside the closed octagon
  Word word;          // original = word(point)
  MobiusMap map;      // the word as a map
};

// Side-pairing group of the regular hyperbolic octagon with vertex angle pi/4
// (genus-2 surface, opposite sides identified).
class FuchsianGroup {
 public:
  static constexpr int kGenerators = 4;
  static constexpr int kSides = 8;
  static constexpr int kDefaultMaxWord = 8;

  FuchsianGroup();

  // g_k translates towards side k; it maps side k+4 onto side k.
  const MobiusMap& generator(int k) const { return generators_[k]; }
  MobiusMap letter_map(const Letter& l) const;
  MobiusMap word_map(const Word& w) const;
  // The eight side pairings g_1..g_4 and their inverses.
  std::array<MobiusMap, 8> side_pairings() const;

  // Product in relator order g1 G2 g3 G4 G1 g2 G3 g4.
  MobiusMap relator_product() const;

  static double inradius();       // hyperbolic distance from 0 to a side midpoint
  static double circumradius();   // hyperbolic distance from 0 to a vertex
  static cplx vertex(int k);
  static cplx side_midpoint(int k);

  // Euclidean circle carrying side k.
  static cplx side_center(int k);
  static double side_radius();
  // Signed violation of side k: positive when z lies beyond the side.
  static double side_excess(cplx z, int k);
  static bool contains(cplx z, double tol = 1e-12);

  // Reduce z into the closed octagon with at most max_word steps.
  Reduction reduce(cplx z, int max_word = kDefaultMaxWord) const;

  // Group elements of word length <= max_word whose image of the origin lies
  // within hyperbolic distance `radius` of 0. Identity first.
  std::vector<MobiusMap> elements_within(double radius, int max_word = kDefaultMaxWord) const;

 private:
  std::array<MobiusMap, kGenerators> generators_;
};

}  // namespace maglab
