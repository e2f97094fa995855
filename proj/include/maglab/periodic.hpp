#pragma once

#include <functional>
#include <string>

#include "maglab/flow.hpp"

namespace maglab {

// Boundary fixed points of a hyperbolic disk automorphism.
struct Axis {
  cplx repelling;
  cplx attracting;
  cplx nearest;    // point of the axis closest to the origin
  cplx direction;  // unit Euclidean tangent at `nearest`, pointing to `attracting`
  double translation_length = 0.0;
};
Axis hyperbolic_axis(const MobiusMap& g);

// State at hyperbolic distance d to the right of the axis of g, tangent to the
// curve equidistant from the axis and moving with the translation.
Vec3 hypercycle_seed(const MobiusMap& g, double d);

struct ClosedOrbitSettings {
  double tolerance = 1e-10;  // on the closing residual
  int max_iterations = 40;
  double initial_offset = -1.0;  // distance of the seed from the axis; negative: atanh(lambda) clipped to 1
};

struct ClosedOrbit {
  SMPoint seed;        // reduced to the octagon
  double period = 0.0;
  Word word;
  MobiusMap deck;      // phi_period(seed) = deck(seed) in the universal cover, before reduction
  OrbitSegment samples;
  double closure = 0.0;  // |phi_period(seed) - seed| after reduction, angle mod 2 pi
  int iterations = 0;
};

// Newton shooting on phi_tau(p) = g p with a phase condition, seeded on the
// hypercycle of the word's axis.
ClosedOrbit find_closed_orbit(const FlowParams& params, const Word& word, const ClosedOrbitSettings& settings = {});

struct OrbitIntegral {
  double value = 0.0;
  double error = 0.0;  // difference from the half-resolution rule
};
using StateFunction = std::function<double(const Vec3& state)>;
// Trapezoid rule over the samples of a closed orbit.
OrbitIntegral orbit_integral(const StateFunction& f, const ClosedOrbit& orbit);

}  // namespace maglab
