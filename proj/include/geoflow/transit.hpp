#pragma once

#include <optional>

#include "geoflow/rectangles.hpp"

namespace geoflow {

// Relative position of two CB charts. A source point source_lift c_u b_s flows for
// time(u) onto the target surface and lands at land(u, s). In leaf labels the
// landing map is componentwise Moebius and the transit time depends on u only.
struct ChartTransit {
  Mat2 M;  // target_lift^-1 * source_lift, sign chosen with M.a > 0

  double pivot(double u) const { return M.a + M.b * u; }
  double time(double u) const { return -2.0 * std::log(pivot(u)); }
  double u_label(double u) const { return (M.c + M.d * u) / pivot(u); }
  double sp_label(double sp) const { return (M.a * sp + M.b) / (M.c * sp + M.d); }
  SectionCoords land(double u, double s) const;
  Moebius u_map() const { return {M.d, M.c, M.b, M.a}; }
  Moebius s_map() const { return {M.a, M.b, M.c, M.d}; }
  ChartTransit inverse() const;
};

ChartTransit transit(const GroupElement& source_lift, const GroupElement& target_lift);

// Image of a label set under an increasing map with no pole on the set's hull.
LabelSet map_labels(const Moebius& f, const LabelSet& s);
// Points x of `side` with f(x) in target; f is increasing with no pole on side.
LabelSet pull_labels(const Moebius& f, const LabelSet& target, Interval side);
// Sets differing by less than `gap` between neighbouring intervals are joined.
LabelSet close_gaps(const LabelSet& s, double gap);

// Source coordinate box |u| <= ru, |s| <= rs against the target box |u''| <= tu,
// |s''| <= ts. Reports the hull of source u values that land in the target box and
// the range of transit times over them.
struct TransitRange {
  bool hit = false;
  double u_lo = 0.0, u_hi = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
};

TransitRange transit_range(const ChartTransit& T, double ru, double rs, double tu, double ts);

// Signed distance of 0 from the transit-time range: positive when the two boxes
// never cross each other under the flow.
double crossing_margin(const TransitRange& r);

// Transit of a label rectangle: image labels and the time range, when every point
// of the source lands in the target's chart box.
struct LabelTransit {
  LabelSet u;
  LabelSet sp;
  double t_lo = 0.0, t_hi = 0.0;
};

// Empty when a label map has its pole on the ranges.
std::optional<LabelTransit> transit_labels(const ChartTransit& T, const LabelSet& u, const LabelSet& sp);

// Chart moved by the flow: the lift becomes lift a_tau, the radii rescale. The base
// representative is moved along and is no longer reduced.
SectionChart flow_chart(const SectionChart& D, double tau);
// Rectangle moved by the flow onto flow_chart(R.chart, tau); labels rescale.
Rectangle flow_rectangle(const Rectangle& R, double tau);

// Where x meets the chart surface: x = lift c_u b_s a_t, so phi_{-t}(x) is on it.
struct SurfaceHit {
  SectionCoords coords;
  LeafLabels labels;
  double time = 0.0;  // flow time from x to the surface
};

std::optional<SurfaceHit> surface_hit(const GroupElement& lift, const GroupElement& x);

}  // namespace geoflow
