#include "geoflow/sections.hpp"

#include <cmath>
#include <vector>

namespace geoflow {

namespace {

void check_kind_coords(const SectionChart& D, const SectionCoords& c) {
  if (c.primed != (D.kind == SectionKind::BC)) throw ChartMismatch("coordinate order does not match the chart");
}

struct Candidate {
  KanCoords k;
  GroupElement gamma;
};

// Decompositions of lift^-1 gamma x with the chart coordinates in range and |t| <= t_window.
std::vector<Candidate> chart_candidates(const FuchsianGroup& G, const SectionChart& D, const GroupElement& x,
                                        double t_window, double tol) {
  const double reach = D.u_radius + D.s_radius + t_window + 2.0 * tol + 1e-9;
  std::vector<Candidate> out;
  const GroupElement inv = D.lift.inverse();
  for (const auto& gamma : G.translates_within(D.lift, x, reach)) {
    KanCoords k;
    try {
      k = chart_decompose(D.kind, inv * gamma * x);
    } catch (const DegenerateDecomposition&) {
      continue;
    }
    if (std::abs(k.u) <= D.u_radius + tol && std::abs(k.s) <= D.s_radius + tol && std::abs(k.t) <= t_window + tol)
      out.push_back({k, gamma});
  }
  return out;
}

}  // namespace

SectionChart chart_on_lift(const GroupElement& lift, const QuotientPoint& base, double u_radius, double s_radius,
                           SectionKind kind, double alpha) {
  SectionChart D;
  D.base = base;
  D.lift = lift;
  D.u_radius = u_radius;
  D.s_radius = s_radius;
  D.kind = kind;
  D.alpha = alpha;
  D.asymmetric = u_radius != s_radius;
  return D;
}

SectionChart make_section(const FuchsianGroup& G, const QuotientPoint& z, double eps, SectionKind kind,
                          double alpha) {
  if (!(eps > 0.0) || !(alpha >= 0.0)) throw SectionTooLarge("radius and time must be positive");
  if (!(4.0 * eps + 2.0 * alpha < G.sigma_star())) throw SectionTooLarge("4 eps + 2 alpha must stay below sigma*");
  return chart_on_lift(z.rep, z, eps, eps, kind, alpha);
}

SectionChart make_asym_section(const FuchsianGroup& G, const QuotientPoint& z, double u_radius, double s_radius,
                               SectionKind kind, double alpha) {
  if (!(u_radius > 0.0) || !(s_radius > 0.0)) throw SectionTooLarge("radii must be positive");
  if (!(2.0 * u_radius + 2.0 * s_radius + alpha < G.sigma_star()))
    throw SectionTooLarge("2u + 2s + alpha must stay below sigma*");
  SectionChart D = chart_on_lift(z.rep, z, u_radius, s_radius, kind, alpha);
  D.asymmetric = true;
  return D;
}

GroupElement chart_element(SectionKind kind, double u, double s) {
  return kind == SectionKind::CB ? unstable_elem(u) * stable_elem(s) : stable_elem(s) * unstable_elem(u);
}

KanCoords chart_decompose(SectionKind kind, const GroupElement& k) {
  return kind == SectionKind::CB ? decompose_cba(k) : decompose_bca(k);
}

GroupElement lift_at(const SectionChart& D, const SectionCoords& c) {
  check_kind_coords(D, c);
  return D.lift * chart_element(D.kind, c.u, c.s);
}

QuotientPoint point_at(const FuchsianGroup& G, const SectionChart& D, const SectionCoords& c) {
  constexpr double tol = 1e-12;
  if (std::abs(c.u) > D.u_radius + tol || std::abs(c.s) > D.s_radius + tol)
    throw CoordsOutOfRange("coordinates outside the chart");
  return G.reduce(lift_at(D, c));
}

SectionCoords coords_of(const FuchsianGroup& G, const SectionChart& D, const QuotientPoint& y, double tol) {
  const auto cands = chart_candidates(G, D, y.rep, 0.0, tol);
  if (cands.empty()) throw NotOnSection("point is not on the section");
  if (cands.size() > 1) throw MultipleIntersections("several chart coordinates match");
  return {cands[0].k.u, cands[0].k.s, D.kind == SectionKind::BC};
}

std::optional<Projection> try_project(const FuchsianGroup& G, const SectionChart& D, const QuotientPoint& x,
                                      double t_window, double tol) {
  const auto cands = chart_candidates(G, D, x.rep, t_window, tol);
  if (cands.empty()) return std::nullopt;
  if (cands.size() > 1) throw MultipleIntersections("orbit meets the section twice inside the window");
  const KanCoords& k = cands[0].k;
  Projection p;
  p.coords = {k.u, k.s, D.kind == SectionKind::BC};
  p.point = G.reduce(D.lift * chart_element(D.kind, k.u, k.s));
  p.tau = -k.t;
  return p;
}

Projection project_to_section(const FuchsianGroup& G, const SectionChart& D, const QuotientPoint& x,
                              double t_window, double tol) {
  auto p = try_project(G, D, x, t_window, tol);
  if (!p) throw NoIntersection("orbit does not meet the section inside the window");
  return *p;
}

LeafLabels labels_of(SectionKind kind, const SectionCoords& c) {
  if (kind == SectionKind::CB) return {c.u, c.s / (1.0 + c.u * c.s)};
  return {c.u / (1.0 + c.s * c.u), c.s};
}

SectionCoords coords_from_labels(SectionKind kind, const LeafLabels& l) {
  if (kind == SectionKind::CB) return {l.u, l.sp / (1.0 - l.u * l.sp), false};
  return {l.u / (1.0 - l.sp * l.u), l.sp, true};
}

QuotientPoint flow(const FuchsianGroup& G, const QuotientPoint& x, double t) {
  return G.reduce(x.rep * flow_elem(t));
}

QuotientPoint hflow_s(const FuchsianGroup& G, const QuotientPoint& x, double s) {
  return G.reduce(x.rep * stable_elem(s));
}

QuotientPoint hflow_u(const FuchsianGroup& G, const QuotientPoint& x, double u) {
  return G.reduce(x.rep * unstable_elem(u));
}

}  // namespace geoflow
