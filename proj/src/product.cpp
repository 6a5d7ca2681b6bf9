#include "geoflow/product.hpp"

#include <cmath>

namespace geoflow {

BracketResult bracket_lifts(const FuchsianGroup& G, const GroupElement& x, const GroupElement& y, double eps) {
  const KanCoords k = decompose_abc(x.inverse() * y);
  if (std::abs(k.t) > eps || std::abs(k.s) > eps || std::abs(k.u) > eps)
    throw TooFarApart("bracket leaves the local leaves");
  BracketResult r;
  r.v = k.t;
  r.s = k.s;
  r.u = k.u;
  r.lift = x * flow_elem(k.t) * stable_elem(k.s);
  r.point = G.reduce(r.lift);
  return r;
}

BracketResult bracket(const FuchsianGroup& G, const QuotientPoint& x, const QuotientPoint& y, double eps) {
  const Translate tr = G.nearest_translate(x.rep, y.rep);
  if (!(tr.distance < bracket_threshold(eps))) throw TooFarApart("points are too far apart for the bracket");
  return bracket_lifts(G, x.rep, tr.gamma * y.rep, eps);
}

SectionBracket bracket_in_section(const SectionChart& D, const SectionCoords& x, const SectionCoords& y) {
  if (x.primed != (D.kind == SectionKind::BC) || y.primed != x.primed)
    throw ChartMismatch("coordinate order does not match the chart");
  const double limit = 2.0 * D.radius();
  if (std::abs(x.u - y.u) > limit || std::abs(x.s - y.s) > limit) throw TooFarApart("coordinates too far apart");
  SectionBracket r;
  if (D.kind == SectionKind::CB) {
    const double den = 1.0 + (y.u - x.u) * y.s;
    if (std::abs(den) < 1e-10) throw DenominatorNearZero("bracket denominator vanishes");
    r.coords = {x.u, y.s / den, false};
    r.s = (y.s - x.s * den) * den;
    r.u = (x.u - y.u) / den;
    r.v = -2.0 * std::log(std::abs(den));
    return r;
  }
  const LeafLabels lx = labels_of(D.kind, x), ly = labels_of(D.kind, y);
  const double den = 1.0 - ly.sp * lx.u;
  if (std::abs(den) < 1e-10) throw DenominatorNearZero("bracket denominator vanishes");
  r.coords = coords_from_labels(D.kind, {lx.u, ly.sp});
  const KanCoords k = decompose_abc(chart_element(D.kind, x.u, x.s).inverse() * chart_element(D.kind, y.u, y.s));
  r.s = k.s;
  r.u = -k.u;
  r.v = k.t;
  return r;
}

}  // namespace geoflow
