#pragma once

#include <optional>

#include "geoflow/fuchsian.hpp"

namespace geoflow {

// CB: points lift * c_u * b_s.  BC: points lift * b_s * c_u.
enum class SectionKind { CB, BC };

struct SectionChart {
  QuotientPoint base;
  GroupElement lift;
  double u_radius = 0.0;
  double s_radius = 0.0;
  SectionKind kind = SectionKind::CB;
  double alpha = 0.0;
  bool asymmetric = false;

  double radius() const { return std::max(u_radius, s_radius); }
};

struct SectionCoords {
  double u = 0.0;
  double s = 0.0;
  // True for BC-ordered coordinates.
  bool primed = false;
};

struct Projection {
  QuotientPoint point;
  double tau = 0.0;  // phi_tau(x) lies on the section
  SectionCoords coords;
};

SectionChart make_section(const FuchsianGroup& G, const QuotientPoint& z, double eps, SectionKind kind,
                          double alpha);
SectionChart make_asym_section(const FuchsianGroup& G, const QuotientPoint& z, double u_radius, double s_radius,
                               SectionKind kind, double alpha);
// Same chart geometry on a fixed lift, skipping the size check (for enclosing charts).
SectionChart chart_on_lift(const GroupElement& lift, const QuotientPoint& base, double u_radius, double s_radius,
                           SectionKind kind, double alpha);

GroupElement chart_element(SectionKind kind, double u, double s);
// Decomposes k = chart_element(u, s) * a_t for the chart's order.
KanCoords chart_decompose(SectionKind kind, const GroupElement& k);

SectionCoords coords_of(const FuchsianGroup& G, const SectionChart& D, const QuotientPoint& y, double tol = 1e-8);
QuotientPoint point_at(const FuchsianGroup& G, const SectionChart& D, const SectionCoords& c);
// Lift-level point, without reduction.
GroupElement lift_at(const SectionChart& D, const SectionCoords& c);

Projection project_to_section(const FuchsianGroup& G, const SectionChart& D, const QuotientPoint& x,
                              double t_window, double tol = 1e-9);
std::optional<Projection> try_project(const FuchsianGroup& G, const SectionChart& D, const QuotientPoint& x,
                                      double t_window, double tol = 1e-9);

// Leaf labels: `u` is constant along stable fibers, `sp` along unstable fibers.
// The forward endpoint of a point is lift(1/u), the backward endpoint lift(sp).
struct LeafLabels {
  double u = 0.0;
  double sp = 0.0;
};

LeafLabels labels_of(SectionKind kind, const SectionCoords& c);
SectionCoords coords_from_labels(SectionKind kind, const LeafLabels& l);

QuotientPoint flow(const FuchsianGroup& G, const QuotientPoint& x, double t);
QuotientPoint hflow_s(const FuchsianGroup& G, const QuotientPoint& x, double s);
QuotientPoint hflow_u(const FuchsianGroup& G, const QuotientPoint& x, double u);

}  // namespace geoflow
