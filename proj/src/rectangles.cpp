#include "geoflow/rectangles.hpp"

#include <algorithm>
#include <cmath>

namespace geoflow {

// ------------------------------------------------------------------ LabelSet

LabelSet LabelSet::interval(double lo, double hi) {
  LabelSet s;
  if (lo <= hi) s.iv_.push_back({lo, hi});
  return s;
}

LabelSet LabelSet::from_intervals(std::vector<Interval> pieces) {
  std::erase_if(pieces, [](const Interval& i) { return !(i.lo <= i.hi); });
  std::sort(pieces.begin(), pieces.end(), [](const Interval& x, const Interval& y) {
    return x.lo < y.lo || (x.lo == y.lo && x.hi < y.hi);
  });
  LabelSet s;
  for (const auto& p : pieces) {
    if (!s.iv_.empty() && p.lo <= s.iv_.back().hi)
      s.iv_.back().hi = std::max(s.iv_.back().hi, p.hi);
    else
      s.iv_.push_back(p);
  }
  return s;
}

bool LabelSet::contains(double x, double tol) const {
  auto it = std::upper_bound(iv_.begin(), iv_.end(), x + tol,
                             [](double v, const Interval& i) { return v < i.lo; });
  if (it == iv_.begin()) return false;
  --it;
  return x <= it->hi + tol;
}

bool LabelSet::contains_interior(double x, double margin) const {
  for (const auto& i : iv_)
    if (x >= i.lo + margin && x <= i.hi - margin) return true;
  return false;
}

double LabelSet::measure() const {
  double m = 0.0;
  for (const auto& i : iv_) m += i.length();
  return m;
}

double LabelSet::distance_to_boundary(double x) const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& i : iv_) best = std::min({best, std::abs(x - i.lo), std::abs(x - i.hi)});
  return best;
}

LabelSet label_union(const LabelSet& a, const LabelSet& b) {
  std::vector<Interval> all(a.intervals().begin(), a.intervals().end());
  all.insert(all.end(), b.intervals().begin(), b.intervals().end());
  return LabelSet::from_intervals(std::move(all));
}

LabelSet label_intersect(const LabelSet& a, const LabelSet& b) {
  std::vector<Interval> out;
  auto ia = a.intervals(), ib = b.intervals();
  std::size_t i = 0, j = 0;
  while (i < ia.size() && j < ib.size()) {
    const double lo = std::max(ia[i].lo, ib[j].lo), hi = std::min(ia[i].hi, ib[j].hi);
    if (lo <= hi) out.push_back({lo, hi});
    if (ia[i].hi < ib[j].hi) ++i;
    else ++j;
  }
  return LabelSet::from_intervals(std::move(out));
}

LabelSet label_diff(const LabelSet& a, const LabelSet& b) {
  std::vector<Interval> out;
  for (const auto& piece : a.intervals()) {
    if (piece.degenerate()) {
      if (!b.contains(piece.lo)) out.push_back(piece);
      continue;
    }
    // Remove the open interiors of b's intervals, then drop points left over from the boundary.
    std::vector<Interval> rest{piece};
    for (const auto& cut : b.intervals()) {
      if (cut.degenerate()) continue;
      std::vector<Interval> next;
      for (const auto& r : rest) {
        if (cut.hi <= r.lo || cut.lo >= r.hi) {
          next.push_back(r);
          continue;
        }
        if (cut.lo > r.lo) next.push_back({r.lo, cut.lo});
        if (cut.hi < r.hi) next.push_back({cut.hi, r.hi});
      }
      rest = std::move(next);
    }
    for (const auto& r : rest)
      if (!r.degenerate()) out.push_back(r);
  }
  return LabelSet::from_intervals(std::move(out));
}

double label_hausdorff(const LabelSet& a, const LabelSet& b) {
  auto one_sided = [](const LabelSet& x, const LabelSet& y) {
    double worst = 0.0;
    for (const auto& i : x.intervals())
      for (double p : {i.lo, i.hi}) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& j : y.intervals()) {
          const double d = p < j.lo ? j.lo - p : (p > j.hi ? p - j.hi : 0.0);
          best = std::min(best, d);
        }
        worst = std::max(worst, best);
      }
    // Points of x inside gaps of y.
    for (std::size_t k = 1; k < y.intervals().size(); ++k) {
      const double glo = y.intervals()[k - 1].hi, ghi = y.intervals()[k].lo;
      const double mid = 0.5 * (glo + ghi);
      if (x.contains(mid)) worst = std::max(worst, 0.5 * (ghi - glo));
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

// ----------------------------------------------------------------- Rectangle

bool same_chart(const SectionChart& a, const SectionChart& b) {
  return a.kind == b.kind && approx_equal(a.lift, b.lift, 1e-12);
}

SectionCoords coordinate_extent(SectionKind kind, double u_abs, double sp_abs) {
  const double den = 1.0 - u_abs * sp_abs;
  if (kind == SectionKind::CB) return {u_abs, sp_abs / den, false};
  return {u_abs / den, sp_abs, true};
}

namespace {

Rectangle make_box(const SectionChart& D, double u_radius, double sp_radius, double delta_star) {
  if (!(std::max(u_radius, sp_radius) / (1.0 - u_radius * sp_radius) < delta_star / 4.0))
    throw RectangleTooLarge("rectangle exceeds the bracket scale");
  const SectionCoords ext = coordinate_extent(D.kind, u_radius, sp_radius);
  if (ext.u > D.u_radius + 1e-12 || ext.s > D.s_radius + 1e-12)
    throw RectangleTooLarge("rectangle does not fit in its chart");
  return {D, LabelSet::interval(-u_radius, u_radius), LabelSet::interval(-sp_radius, sp_radius)};
}

}  // namespace

Rectangle rect_S(const SectionChart& D, double eps, double delta_star) {
  if (D.kind != SectionKind::CB) throw ChartMismatch("S rectangles live on CB charts");
  return make_box(D, eps, eps, delta_star);
}

Rectangle rect_T(const SectionChart& D, double eps, double delta_star) {
  if (D.kind != SectionKind::BC) throw ChartMismatch("T rectangles live on BC charts");
  return make_box(D, eps, eps, delta_star);
}

Rectangle rect_asym(const SectionChart& D, double u_radius, double sp_radius, double delta_star) {
  return make_box(D, u_radius, sp_radius, delta_star);
}

LeafLabels leaf_labels(const FuchsianGroup& G, const Rectangle& R, const QuotientPoint& x) {
  return labels_of(R.chart.kind, coords_of(G, R.chart, x));
}

QuotientPoint point_at_labels(const FuchsianGroup& G, const SectionChart& D, const LeafLabels& l) {
  return point_at(G, D, coords_from_labels(D.kind, l));
}

Rectangle stable_fiber(const Rectangle& R, const LeafLabels& x) {
  if (!R.contains(x)) throw NotInRectangle("point is not in the rectangle");
  return {R.chart, LabelSet::point(x.u), R.sp_labels};
}

Rectangle unstable_fiber(const Rectangle& R, const LeafLabels& x) {
  if (!R.contains(x)) throw NotInRectangle("point is not in the rectangle");
  return {R.chart, R.u_labels, LabelSet::point(x.sp)};
}

Rectangle rect_bracket(const Rectangle& a, const Rectangle& b) {
  if (!same_chart(a.chart, b.chart)) throw ChartMismatch("rectangles live on different charts");
  return {a.chart, a.u_labels, b.sp_labels};
}

Rectangle convert_version(const Rectangle& R, const SectionChart& target) {
  if (target.kind == R.chart.kind || !approx_equal(target.lift, R.chart.lift, 1e-12))
    throw ChartMismatch("conversion needs the other chart kind at the same base");
  return {target, R.u_labels, R.sp_labels};
}

// ------------------------------------------------------------------ Holonomy

double Moebius::operator()(double x) const {
  const double den = c * x + d;
  if (std::abs(den) < 1e-12) throw HolonomyDegenerate("label map hits its pole");
  return (a * x + b) / den;
}

Moebius Moebius::then(const Moebius& next) const {
  return {next.a * a + next.b * c, next.a * b + next.b * d, next.c * a + next.d * c, next.c * b + next.d * d};
}

double HolonomyMap::transit_time(const LeafLabels& l) const {
  const SectionCoords c = coords_from_labels(source.kind, l);
  return -chart_decompose(target.kind, transition * chart_element(source.kind, c.u, c.s)).t;
}

namespace {

LabelSet map_monotone(const Moebius& f, const LabelSet& s) {
  std::vector<Interval> out;
  for (const auto& i : s.intervals()) out.push_back({f(i.lo), f(i.hi)});
  return LabelSet::from_intervals(std::move(out));
}

bool pole_inside(const Moebius& f, const LabelSet& s) {
  const double p = f.pole();
  return std::isfinite(p) && !s.empty() && p >= s.lo() - 1e-12 && p <= s.hi() + 1e-12;
}

}  // namespace

LabelSet HolonomyMap::map_u(const LabelSet& s) const {
  if (pole_inside(u_map, s)) throw HolonomyDegenerate("u label map has a pole on the range");
  return map_monotone(u_map, s);
}

LabelSet HolonomyMap::map_s(const LabelSet& s) const {
  if (pole_inside(s_map, s)) throw HolonomyDegenerate("s label map has a pole on the range");
  return map_monotone(s_map, s);
}

void HolonomyMap::check_defined_on(const LabelSet& u, const LabelSet& sp) const {
  if (pole_inside(u_map, u) || pole_inside(s_map, sp)) throw HolonomyDegenerate("label map has a pole on the range");
}

HolonomyMap holonomy(const SectionChart& source, const SectionChart& target, const GroupElement& gamma) {
  HolonomyMap h;
  h.source = source;
  h.target = target;
  h.gamma = gamma;
  h.transition = target.lift.inverse() * gamma * source.lift;
  const Mat2& k = h.transition.matrix();
  // Forward endpoints 1/u and backward endpoints s' transform by the transition element.
  h.u_map = {k.d, k.c, k.b, k.a};
  h.s_map = {k.a, k.b, k.c, k.d};
  try {
    h.time_offset = h.transit_time({0.0, 0.0});
  } catch (const DegenerateDecomposition&) {
    throw HolonomyDegenerate("transition element has a vanishing pivot");
  }
  return h;
}

HolonomyMap compose(const HolonomyMap& first, const HolonomyMap& second) {
  return holonomy(first.source, second.target, second.gamma * first.gamma);
}

}  // namespace geoflow
