#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "geoflow/product.hpp"

namespace geoflow {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool degenerate() const { return hi <= lo; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Finite union of disjoint, sorted closed intervals.
class LabelSet {
 public:
  LabelSet() = default;
  static LabelSet interval(double lo, double hi);
  static LabelSet point(double x) { return interval(x, x); }
  static LabelSet from_intervals(std::vector<Interval> pieces);

  std::span<const Interval> intervals() const { return iv_; }
  bool empty() const { return iv_.empty(); }
  bool contains(double x, double tol = 0.0) const;
  // True when x is at least `margin` inside some interval.
  bool contains_interior(double x, double margin) const;
  double measure() const;
  double lo() const { return iv_.front().lo; }
  double hi() const { return iv_.back().hi; }
  double distance_to_boundary(double x) const;

  friend bool operator==(const LabelSet&, const LabelSet&) = default;

 private:
  std::vector<Interval> iv_;
};

LabelSet label_union(const LabelSet& a, const LabelSet& b);
LabelSet label_intersect(const LabelSet& a, const LabelSet& b);
// Closure of a \ b.
LabelSet label_diff(const LabelSet& a, const LabelSet& b);
// Hausdorff distance between nonempty sets.
double label_hausdorff(const LabelSet& a, const LabelSet& b);

struct Rectangle {
  SectionChart chart;
  LabelSet u_labels;
  LabelSet sp_labels;

  bool contains(const LeafLabels& l, double tol = 0.0) const {
    return u_labels.contains(l.u, tol) && sp_labels.contains(l.sp, tol);
  }
  bool empty() const { return u_labels.empty() || sp_labels.empty(); }
};

bool same_chart(const SectionChart& a, const SectionChart& b);

// Largest |chart coordinate| reached by a label box.
SectionCoords coordinate_extent(SectionKind kind, double u_abs, double sp_abs);

Rectangle rect_S(const SectionChart& D, double eps, double delta_star);
Rectangle rect_T(const SectionChart& D, double eps, double delta_star);
Rectangle rect_asym(const SectionChart& D, double u_radius, double sp_radius, double delta_star);

LeafLabels leaf_labels(const FuchsianGroup& G, const Rectangle& R, const QuotientPoint& x);
QuotientPoint point_at_labels(const FuchsianGroup& G, const SectionChart& D, const LeafLabels& l);

Rectangle stable_fiber(const Rectangle& R, const LeafLabels& x);
Rectangle unstable_fiber(const Rectangle& R, const LeafLabels& x);
Rectangle rect_bracket(const Rectangle& a, const Rectangle& b);
// Moves R to the chart of the other kind at the same base; labels are unchanged.
Rectangle convert_version(const Rectangle& R, const SectionChart& target);

// x -> (a x + b)/(c x + d)
struct Moebius {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
  double operator()(double x) const;
  double pole() const { return c == 0.0 ? std::numeric_limits<double>::infinity() : -d / c; }
  Moebius inverse() const { return {d, -b, -c, a}; }
  Moebius then(const Moebius& next) const;
};

struct HolonomyMap {
  Moebius u_map;
  Moebius s_map;
  GroupElement transition;  // lift_target^-1 * gamma * lift_source
  GroupElement gamma;
  SectionChart source;
  SectionChart target;
  double time_offset = 0.0;  // flow time at the source base point

  LeafLabels apply(const LeafLabels& l) const { return {u_map(l.u), s_map(l.sp)}; }
  // Flow time carrying the source point with these labels onto the target.
  double transit_time(const LeafLabels& l) const;
  LabelSet map_u(const LabelSet& s) const;
  LabelSet map_s(const LabelSet& s) const;
  // Throws HolonomyDegenerate when a pole meets the label ranges.
  void check_defined_on(const LabelSet& u, const LabelSet& sp) const;
};

HolonomyMap holonomy(const SectionChart& source, const SectionChart& target, const GroupElement& gamma);
HolonomyMap compose(const HolonomyMap& first, const HolonomyMap& second);

}  // namespace geoflow
