#include "geoflow/transit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace geoflow {

namespace {

Mat2 positive_pivot(Mat2 m) {
  if (m.a < 0.0 || (m.a == 0.0 && m.b < 0.0)) m = -1.0 * m;
  return m;
}

// Source u values where |pivot| lies strictly between r1 and r2, within [lo, hi] on one side of the pole.
Interval pivot_band(const Mat2& M, double r1, double r2, double lo, double hi, double sign) {
  if (M.b == 0.0) {
    const double p = std::abs(M.a);
    return (p > r1 && p < r2) ? Interval{lo, hi} : Interval{1.0, 0.0};
  }
  // pivot(u) = sign * r  <=>  u = (sign * r - a) / b
  double x1 = (sign * r1 - M.a) / M.b, x2 = (sign * r2 - M.a) / M.b;
  if (x1 > x2) std::swap(x1, x2);
  return {std::max(lo, x1), std::min(hi, x2)};
}

}  // namespace

SectionCoords ChartTransit::land(double u, double s) const {
  const double A = pivot(u);
  return {u_label(u), A * (A * s + M.b), false};
}

ChartTransit ChartTransit::inverse() const {
  return {positive_pivot({M.d, -M.b, -M.c, M.a})};
}

ChartTransit transit(const GroupElement& source_lift, const GroupElement& target_lift) {
  return {positive_pivot((target_lift.inverse() * source_lift).matrix())};
}

LabelSet map_labels(const Moebius& f, const LabelSet& s) {
  if (s.empty()) return s;
  const double p = f.pole();
  if (std::isfinite(p) && p >= s.lo() && p <= s.hi()) throw HolonomyDegenerate("label map has its pole on the set");
  std::vector<Interval> out;
  for (const Interval& i : s.intervals()) {
    const double a = f(i.lo), b = f(i.hi);
    out.push_back({std::min(a, b), std::max(a, b)});
  }
  return LabelSet::from_intervals(std::move(out));
}

LabelSet pull_labels(const Moebius& f, const LabelSet& target, Interval side) {
  if (side.lo > side.hi || target.empty()) return {};
  const double a = f(side.lo), b = f(side.hi);
  const LabelSet hit = label_intersect(target, LabelSet::interval(std::min(a, b), std::max(a, b)));
  const Moebius g = f.inverse();
  std::vector<Interval> out;
  for (const Interval& i : hit.intervals()) {
    const double x = std::clamp(g(i.lo), side.lo, side.hi), y = std::clamp(g(i.hi), side.lo, side.hi);
    out.push_back({std::min(x, y), std::max(x, y)});
  }
  return LabelSet::from_intervals(std::move(out));
}

LabelSet close_gaps(const LabelSet& s, double gap) {
  std::vector<Interval> out;
  for (const Interval& i : s.intervals()) {
    if (!out.empty() && i.lo - out.back().hi < gap)
      out.back().hi = std::max(out.back().hi, i.hi);
    else
      out.push_back(i);
  }
  return LabelSet::from_intervals(std::move(out));
}

TransitRange transit_range(const ChartTransit& T, double ru, double rs, double tu, double ts) {
  const Mat2& M = T.M;
  // Components of [-ru, ru] on either side of the pole of the pivot.
  std::vector<std::pair<Interval, double>> parts;
  const double pole = M.b != 0.0 ? -M.a / M.b : std::numeric_limits<double>::infinity();
  if (!(pole > -ru && pole < ru)) {
    parts.push_back({{-ru, ru}, T.pivot(0.0) >= 0.0 ? 1.0 : -1.0});
  } else {
    const double gap = 1e-12 * std::max(1.0, std::abs(pole));
    parts.push_back({{-ru, pole - gap}, M.b > 0.0 ? -1.0 : 1.0});
    parts.push_back({{pole + gap, ru}, M.b > 0.0 ? 1.0 : -1.0});
  }

  // Inverse of the increasing u-label map.
  auto u_from_label = [&](double y) { return (y * M.a - M.c) / (M.d - y * M.b); };
  // Landing s range meets [-ts, ts] iff rs A^2 - |b| |A| + ts >= 0.
  const double disc = M.b * M.b - 4.0 * rs * ts;
  double r1 = 0.0, r2 = 0.0;
  const bool has_band = rs > 0.0 ? disc > 0.0 : std::abs(M.b) > 0.0;
  if (has_band) {
    if (rs > 0.0) {
      const double q = std::sqrt(disc);
      r1 = (std::abs(M.b) - q) / (2.0 * rs);
      r2 = (std::abs(M.b) + q) / (2.0 * rs);
    } else {
      r1 = ts / std::abs(M.b);
      r2 = std::numeric_limits<double>::infinity();
    }
  }

  TransitRange out;
  auto take = [&](double lo, double hi) {
    if (!(lo <= hi)) return;
    const double ta = T.time(lo), tb = T.time(hi);
    if (!out.hit) {
      out = {true, lo, hi, std::min(ta, tb), std::max(ta, tb)};
      return;
    }
    out.u_lo = std::min(out.u_lo, lo);
    out.u_hi = std::max(out.u_hi, hi);
    out.t_lo = std::min({out.t_lo, ta, tb});
    out.t_hi = std::max({out.t_hi, ta, tb});
  };

  for (const auto& [part, sign] : parts) {
    // The u-label map increases on each component, so its preimage of [-tu, tu] is an interval.
    double lo = part.lo, hi = part.hi;
    const double ylo = T.u_label(lo), yhi = T.u_label(hi);
    if (yhi < -tu || ylo > tu) continue;
    if (ylo < -tu) lo = std::max(lo, u_from_label(-tu));
    if (yhi > tu) hi = std::min(hi, u_from_label(tu));
    if (!(lo <= hi)) continue;
    if (!has_band) {
      take(lo, hi);
      continue;
    }
    const Interval bad = pivot_band(M, r1, r2, lo, hi, sign);
    if (bad.degenerate()) {
      take(lo, hi);
      continue;
    }
    take(lo, bad.lo);
    take(bad.hi, hi);
  }
  return out;
}

double crossing_margin(const TransitRange& r) {
  if (!r.hit) return std::numeric_limits<double>::infinity();
  if (r.t_lo > 0.0) return r.t_lo;
  if (r.t_hi < 0.0) return -r.t_hi;
  return -std::min(-r.t_lo, r.t_hi);
}

std::optional<LabelTransit> transit_labels(const ChartTransit& T, const LabelSet& u, const LabelSet& sp) {
  if (u.empty() || sp.empty()) return std::nullopt;
  const Moebius fu = T.u_map(), fs = T.s_map();
  auto pole_in = [](const Moebius& f, const LabelSet& s) {
    const double p = f.pole();
    return std::isfinite(p) && p >= s.lo() - 1e-12 && p <= s.hi() + 1e-12;
  };
  if (pole_in(fu, u) || pole_in(fs, sp)) return std::nullopt;
  LabelTransit out;
  std::vector<Interval> ui, si;
  out.t_lo = std::numeric_limits<double>::infinity();
  out.t_hi = -out.t_lo;
  for (const Interval& i : u.intervals()) {
    ui.push_back({fu(i.lo), fu(i.hi)});
    for (double x : {i.lo, i.hi}) {
      const double t = T.time(x);
      out.t_lo = std::min(out.t_lo, t);
      out.t_hi = std::max(out.t_hi, t);
    }
  }
  for (const Interval& i : sp.intervals()) {
    const double a = fs(i.lo), b = fs(i.hi);
    si.push_back({std::min(a, b), std::max(a, b)});
  }
  out.u = LabelSet::from_intervals(std::move(ui));
  out.sp = LabelSet::from_intervals(std::move(si));
  return out;
}

SectionChart flow_chart(const SectionChart& D, double tau) {
  if (D.kind != SectionKind::CB) throw ChartMismatch("flowed charts are built from CB charts");
  SectionChart F = D;
  F.lift = D.lift * flow_elem(tau);
  F.base = {D.base.rep * flow_elem(tau), D.base.word};
  F.u_radius = D.u_radius * std::exp(tau);
  F.s_radius = D.s_radius * std::exp(-tau);
  F.asymmetric = F.u_radius != F.s_radius;
  return F;
}

Rectangle flow_rectangle(const Rectangle& R, double tau) {
  auto scale = [](const LabelSet& s, double k) {
    std::vector<Interval> out;
    for (const Interval& i : s.intervals()) out.push_back({i.lo * k, i.hi * k});
    return LabelSet::from_intervals(std::move(out));
  };
  return {flow_chart(R.chart, tau), scale(R.u_labels, std::exp(tau)), scale(R.sp_labels, std::exp(-tau))};
}

std::optional<SurfaceHit> surface_hit(const GroupElement& lift, const GroupElement& x) {
  try {
    const KanCoords k = decompose_cba(lift.inverse() * x);
    SurfaceHit h;
    h.coords = {k.u, k.s, false};
    h.labels = labels_of(SectionKind::CB, h.coords);
    h.time = -k.t;
    return h;
  } catch (const DegenerateDecomposition&) {
    return std::nullopt;
  }
}

}  // namespace geoflow
