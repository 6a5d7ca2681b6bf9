#pragma once

#include "geoflow/sections.hpp"

namespace geoflow {

struct BracketResult {
  QuotientPoint point;
  // lift_x * a_v * b_s, the bracket point on the lift of x.
  GroupElement lift;
  double v = 0.0;
  double s = 0.0;
  double u = 0.0;
};

// Operational bracket threshold for a bracket of scale eps.
inline double bracket_threshold(double eps) { return eps / 4.0; }
inline double nested_bracket_threshold(double eps) { return bracket_threshold(eps) / 12.0; }

// Point of W^s(phi_v x) meeting W^u(y). Lift-level variant takes the y lift already aligned with x.
BracketResult bracket(const FuchsianGroup& G, const QuotientPoint& x, const QuotientPoint& y, double eps);
BracketResult bracket_lifts(const FuchsianGroup& G, const GroupElement& x, const GroupElement& y, double eps);

struct SectionBracket {
  SectionCoords coords;
  double s = 0.0;
  double u = 0.0;
  double v = 0.0;
};

// On-section bracket <x,y>_D from chart coordinates.
SectionBracket bracket_in_section(const SectionChart& D, const SectionCoords& x, const SectionCoords& y);

}  // namespace geoflow
