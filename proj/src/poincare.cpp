#include "geoflow/poincare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

constexpr double kSliver = 1e-13;

LabelSet drop_slivers(const LabelSet& s) {
  std::vector<Interval> keep;
  for (const Interval& i : s.intervals())
    if (i.length() > kSliver) keep.push_back(i);
  return LabelSet::from_intervals(std::move(keep));
}

// Hull of s cut at the pole, with a little room on both sides.
std::vector<Interval> pole_sides(const LabelSet& s, double pole) {
  const double lo = s.lo(), hi = s.hi();
  if (!(std::isfinite(pole) && pole > lo && pole < hi)) return {{lo, hi}};
  const double gap = 1e-12 * std::max(1.0, std::abs(pole));
  return {{lo, pole - gap}, {pole + gap, hi}};
}

double max_abs(const LabelSet& s) { return std::max(std::abs(s.lo()), std::abs(s.hi())); }

SectionCoords extent_of(const Rectangle& R) {
  return coordinate_extent(SectionKind::CB, max_abs(R.u_labels), max_abs(R.sp_labels));
}

double chart_box_diameter(double ru, double rs) {
  std::vector<GroupElement> pts;
  const int n = 8;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      if (a != 0 && a != n && b != 0 && b != n) continue;
      pts.push_back(unstable_elem(-ru + 2.0 * ru * a / n) * stable_elem(-rs + 2.0 * rs * b / n));
    }
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, proxy_dist(pts[i], pts[j]).upper);
  return d;
}

void record(ConditionReport& c, double margin) {
  ++c.checked;
  c.margin = std::min(c.margin, margin);
  if (!(margin > 0.0)) {
    ++c.failures;
    c.passed = false;
  }
}

double family_extent(const ProperFamily& F) {
  double e = 0.0;
  for (const Rectangle& R : F.rectangles) {
    if (R.empty()) throw ConfigError("proper family has an empty rectangle");
    const SectionCoords c = extent_of(R);
    e = std::max(e, c.u + c.s);
  }
  return e;
}

double family_reach(const ProperFamily& F, double horizon) {
  const double e = family_extent(F);
  return e * (std::exp(horizon) + 1.0);
}

double pick_horizon(const ProperFamily& F, double horizon) {
  if (!(F.alpha > 0.0)) throw ConfigError("proper family needs a positive size");
  return horizon > 0.0 ? horizon : 10.0 * F.alpha;
}

}  // namespace

std::vector<double> grid_points(const LabelSet& s, std::size_t n) {
  std::vector<double> out;
  if (s.empty()) return out;
  const double total = s.measure();
  for (const Interval& i : s.intervals()) {
    const std::size_t k =
        total > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * i.length() / total))) : 1;
    for (std::size_t m = 0; m < k; ++m) out.push_back(i.lo + (m + 0.5) * i.length() / static_cast<double>(k));
  }
  return out;
}

std::vector<Edge> edges_between(const Rectangle& source, const GroupElement& source_lift, const Rectangle& target,
                                const GroupElement& target_lift, double t_min, double t_max) {
  std::vector<Edge> out;
  if (source.empty() || target.empty() || !(t_min < t_max)) return out;
  const Mat2 M0 = (target_lift.inverse() * source_lift).matrix();
  const double u_pole = M0.b != 0.0 ? -M0.a / M0.b : std::numeric_limits<double>::infinity();
  const double s_pole = M0.c != 0.0 ? -M0.d / M0.c : std::numeric_limits<double>::infinity();
  const double p_lo = std::exp(-0.5 * t_max), p_hi = std::exp(-0.5 * t_min);
  for (const Interval& side : pole_sides(source.u_labels, u_pole)) {
    Mat2 M = M0;
    if (M.a + M.b * 0.5 * (side.lo + side.hi) < 0.0) M = -1.0 * M;
    const ChartTransit T{M};
    Interval w = side;
    if (M.b == 0.0) {
      if (!(M.a >= p_lo && M.a <= p_hi)) continue;
    } else {
      double x1 = (p_lo - M.a) / M.b, x2 = (p_hi - M.a) / M.b;
      if (x1 > x2) std::swap(x1, x2);
      w = {std::max(w.lo, x1), std::min(w.hi, x2)};
    }
    if (!(w.lo <= w.hi)) continue;
    const LabelSet U = drop_slivers(label_intersect(source.u_labels, pull_labels(T.u_map(), target.u_labels, w)));
    if (U.empty()) continue;
    LabelSet S;
    for (const Interval& ss : pole_sides(source.sp_labels, s_pole))
      S = label_union(S, pull_labels(T.s_map(), target.sp_labels, ss));
    S = drop_slivers(label_intersect(S, source.sp_labels));
    if (S.empty()) continue;
    Edge e;
    e.transit = T;
    e.target_lift = target_lift;
    e.u = U;
    e.sp = S;
    const double ta = T.time(U.lo()), tb = T.time(U.hi());
    e.t_lo = std::min(ta, tb);
    e.t_hi = std::max(ta, tb);
    out.push_back(std::move(e));
  }
  return out;
}

PoincareMap::PoincareMap(const FuchsianGroup& G, ProperFamily F, double horizon)
    : G_(&G),
      F_(std::move(F)),
      horizon_(pick_horizon(F_, horizon)),
      extent_(family_extent(F_)),
      index_(G, family_reach(F_, horizon_) + 0.05) {
  const std::size_t n = F_.size();
  for (std::size_t i = 0; i < n; ++i) index_.add(F_.chart(i).lift);
  fwd_.resize(n);
  bwd_.resize(n);
  const double reach = family_reach(F_, horizon_);
  parallel_for(n, [&](std::size_t j) {
    const GroupElement& Lj = F_.chart(j).lift;
    const Rectangle& Tj = F_.rectangles[j];
    index_.along(Lj, -horizon_, horizon_, reach, [&](std::uint32_t id, const GroupElement& L) {
      const Rectangle& Ti = F_.rectangles[id];
      for (Edge& e : edges_between(Tj, Lj, Ti, L, kReturnFloor, horizon_)) {
        e.source = static_cast<std::uint32_t>(j);
        e.target = id;
        fwd_[j].push_back(std::move(e));
      }
      for (Edge& e : edges_between(Tj, Lj, Ti, L, -horizon_, -kReturnFloor)) {
        e.source = static_cast<std::uint32_t>(j);
        e.target = id;
        bwd_[j].push_back(std::move(e));
      }
    });
  });
}

std::optional<Return> PoincareMap::forward(const MemberPoint& x) const {
  std::optional<Return> best;
  const auto& edges = fwd_[x.member];
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (!e.covers(x.labels)) continue;
    const double t = e.time(x.labels);
    if (!(t > kReturnFloor) || (best && t >= best->time)) continue;
    best = Return{{e.target, e.apply(x.labels)}, t, static_cast<std::uint32_t>(k)};
  }
  return best;
}

std::optional<Return> PoincareMap::backward(const MemberPoint& x) const {
  std::optional<Return> best;
  const auto& edges = bwd_[x.member];
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (!e.covers(x.labels)) continue;
    const double t = e.time(x.labels);
    if (!(t < -kReturnFloor) || (best && t <= best->time)) continue;
    best = Return{{e.target, e.apply(x.labels)}, t, static_cast<std::uint32_t>(k)};
  }
  return best;
}

std::optional<MemberPoint> PoincareMap::locate(const GroupElement& x, double tol) const {
  std::optional<MemberPoint> best;
  double best_t = std::numeric_limits<double>::infinity();
  index_.along(x, 0.0, 0.0, extent_ * 1.01 + 1e-9, [&](std::uint32_t id, const GroupElement& L) {
    const auto h = surface_hit(L, x);
    if (!h || !(std::abs(h->time) <= tol) || !F_.rectangles[id].contains(h->labels, tol)) return;
    if (std::abs(h->time) < best_t) {
      best_t = std::abs(h->time);
      best = MemberPoint{id, h->labels};
    }
  });
  return best;
}

GroupElement PoincareMap::lift(const MemberPoint& x) const {
  const SectionCoords c = coords_from_labels(SectionKind::CB, x.labels);
  return F_.chart(x.member).lift * chart_element(SectionKind::CB, c.u, c.s);
}

namespace {

FlowReturn step(const PoincareMap& P, const GroupElement& x, bool ahead) {
  const auto at = P.locate(x);
  if (!at) throw NotOnSection("point is not on any member of the family");
  const auto r = ahead ? P.forward(*at) : P.backward(*at);
  if (!r) throw ReturnNotFound("no member met within the horizon");
  return {P.group().reduce(P.lift(r->to)), r->time, r->to.member, r->to.labels};
}

}  // namespace

FlowReturn poincare_map(const PoincareMap& P, const GroupElement& x) { return step(P, x, true); }
FlowReturn poincare_inverse(const PoincareMap& P, const GroupElement& x) { return step(P, x, false); }

bool ProperReport::passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionReport& c) { return c.passed; });
}

const ConditionReport& ProperReport::get(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw ConfigError("no condition named " + name);
}

ProperReport check_proper(const FuchsianGroup& G, const ProperFamily& F, double size,
                          std::span<const GroupElement> coverage_points) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  ProperReport rep;
  const std::size_t n = F.size();

  ConditionReport interior{"interior", true, inf, 0, 0, {}};
  ConditionReport diameter{"diameter", true, inf, 0, 0, {}};
  double R = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SectionChart& D = F.chart(i);
    const SectionCoords ext = extent_of(F.rectangles[i]);
    record(interior, std::min(D.u_radius - ext.u, D.s_radius - ext.s));
    record(diameter, size - chart_box_diameter(D.u_radius, D.s_radius));
    R = std::max({R, D.u_radius, D.s_radius});
  }
  rep.conditions.push_back(interior);
  rep.conditions.push_back(diameter);

  ConditionReport disjoint{"disjoint", true, size, 0, 0, {}};
  const double reach = R * (1.0 + std::exp(size)) + 2.0 * R;
  ChartIndex index(G, reach + 0.05);
  for (std::size_t i = 0; i < n; ++i) index.add(F.chart(i).lift);
  std::vector<std::vector<double>> margins(n);
  parallel_for(n, [&](std::size_t i) {
    const SectionChart& Di = F.chart(i);
    std::vector<std::vector<Interval>> ranges(n);
    index.along(Di.lift, -size, size, reach, [&](std::uint32_t j, const GroupElement& L) {
      if (j <= i) return;
      const SectionChart& Dj = F.chart(j);
      const TransitRange r = transit_range(transit(Di.lift, L), Di.u_radius, Di.s_radius, Dj.u_radius, Dj.s_radius);
      if (r.hit) ranges[j].push_back({r.t_lo, r.t_hi});
    });
    for (std::size_t j = i + 1; j < n; ++j) {
      if (ranges[j].empty()) continue;
      double ahead = size, behind = size;
      for (const Interval& r : ranges[j]) {
        behind = std::min(behind, std::max(r.lo - 0.0, -size - r.hi));
        ahead = std::min(ahead, std::max(r.lo - size, 0.0 - r.hi));
      }
      margins[i].push_back(std::max(ahead, behind));
    }
  });
  for (const auto& ms : margins)
    for (double m : ms) record(disjoint, m);
  rep.conditions.push_back(disjoint);

  ConditionReport cover{"coverage", true, 0.0, coverage_points.size(), 0, {}};
  if (coverage_points.empty()) {
    cover.note = "no coverage points supplied";
  } else {
    const double e = family_extent(F);
    std::vector<char> hit(coverage_points.size(), 0);
    parallel_for(coverage_points.size(), [&](std::size_t k) {
      const GroupElement& y = coverage_points[k];
      index.along(y, 0.0, size, e * 1.01, [&](std::uint32_t id, const GroupElement& L) {
        if (hit[k]) return;
        const auto h = surface_hit(L, y);
        if (h && h->time >= 0.0 && h->time <= size && F.rectangles[id].contains(h->labels)) hit[k] = 1;
      });
    });
    const auto covered = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
    rep.coverage = static_cast<double>(covered) / static_cast<double>(coverage_points.size());
    cover.failures = coverage_points.size() - covered;
    cover.margin = rep.coverage - (1.0 - 1e-3);
    cover.passed = cover.margin >= 0.0;
  }
  rep.conditions.push_back(cover);
  return rep;
}

}  // namespace geoflow
