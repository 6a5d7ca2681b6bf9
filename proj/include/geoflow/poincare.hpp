#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geoflow/pre_markov.hpp"

namespace geoflow {

// Rectangles T_i, each on its own chart D_i = rectangles[i].chart.
struct ProperFamily {
  std::vector<Rectangle> rectangles;
  double alpha = 0.0;

  std::size_t size() const { return rectangles.size(); }
  const SectionChart& chart(std::size_t i) const { return rectangles[i].chart; }
};

// Source labels of one member that the flow carries onto a translate of another
// member within a time window. The domain is a product and the time depends on u only.
struct Edge {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  ChartTransit transit;  // pivot positive on the domain
  GroupElement target_lift;
  LabelSet u;
  LabelSet sp;
  double t_lo = 0.0, t_hi = 0.0;

  bool covers(const LeafLabels& l) const { return u.contains(l.u) && sp.contains(l.sp); }
  LeafLabels apply(const LeafLabels& l) const { return {transit.u_label(l.u), transit.sp_label(l.sp)}; }
  double time(const LeafLabels& l) const { return transit.time(l.u); }
};

// Pieces of `source` (on source_lift) landing in `target` (on target_lift) at flow times in
// [t_min, t_max]. Slivers thinner than 1e-13 are dropped.
std::vector<Edge> edges_between(const Rectangle& source, const GroupElement& source_lift, const Rectangle& target,
                                const GroupElement& target_lift, double t_min, double t_max);

struct MemberPoint {
  std::uint32_t member = 0;
  LeafLabels labels;
};

struct Return {
  MemberPoint to;
  double time = 0.0;
  std::uint32_t edge = 0;  // into forward_edges or backward_edges of the start member
};

// First-return map of a proper family, tabulated as edges between members.
class PoincareMap {
 public:
  // horizon 0 selects 10 alpha. G must outlive the map.
  PoincareMap(const FuchsianGroup& G, ProperFamily F, double horizon = 0.0);

  const ProperFamily& family() const { return F_; }
  const FuchsianGroup& group() const { return *G_; }
  double horizon() const { return horizon_; }
  std::span<const Edge> forward_edges(std::uint32_t m) const { return fwd_[m]; }
  std::span<const Edge> backward_edges(std::uint32_t m) const { return bwd_[m]; }

  std::optional<Return> forward(const MemberPoint& x) const;
  std::optional<Return> backward(const MemberPoint& x) const;

  // Member and labels of a point lying on some T_i.
  std::optional<MemberPoint> locate(const GroupElement& x, double tol = 1e-9) const;
  GroupElement lift(const MemberPoint& x) const;

 private:
  const FuchsianGroup* G_;
  ProperFamily F_;
  double horizon_;
  double extent_;
  ChartIndex index_;
  std::vector<std::vector<Edge>> fwd_, bwd_;
};

constexpr double kReturnFloor = 1e-9;

struct FlowReturn {
  QuotientPoint point;
  double time = 0.0;
  std::uint32_t member = 0;
  LeafLabels labels;
};

// P(x) = phi_{t(x)}(x) with minimal t(x) > 0; throws ReturnNotFound past the horizon.
FlowReturn poincare_map(const PoincareMap& P, const GroupElement& x);
FlowReturn poincare_inverse(const PoincareMap& P, const GroupElement& x);

// Sampled Def. 6.1 checks at the given size; coverage over the supplied points only.
struct ProperReport {
  std::vector<ConditionReport> conditions;
  double coverage = 0.0;

  bool passed() const;
  const ConditionReport& get(const std::string& name) const;
};

ProperReport check_proper(const FuchsianGroup& G, const ProperFamily& F, double size,
                          std::span<const GroupElement> coverage_points = {});

// Grid of about n points per axis inside a label set, every interval getting at least one.
std::vector<double> grid_points(const LabelSet& s, std::size_t n);

}  // namespace geoflow
