#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "geoflow/section_index.hpp"

namespace geoflow {

// Chart centres of a family, searchable along flow segments.
class ChartIndex {
 public:
  // Queries may use position radius up to `pad` (see along()).
  ChartIndex(const FuchsianGroup& G, double pad, double cell = 0.1) : index_(G, cell, pad) {}

  std::uint32_t add(const GroupElement& lift) {
    const auto id = static_cast<std::uint32_t>(lifts_.size());
    lifts_.push_back(lift);
    index_.insert(id, lift);
    return id;
  }

  std::size_t size() const { return lifts_.size(); }
  const GroupElement& lift(std::uint32_t id) const { return lifts_[id]; }

  // Calls f(id, near_lift) once for every translate of a stored centre that can sit at
  // x a_t k with t in [t0, t1] and k = c_u b_s ... of total |u| + |s| <= reach.
  // Visits in increasing id order.
  template <class F>
  void along(const GroupElement& x, double t0, double t1, double reach, F&& f) const {
    along(std::span<const GroupElement>(&x, 1), t0, t1, reach, std::forward<F>(f));
  }

  // Same over several base points, each translate reported once.
  template <class F>
  void along(std::span<const GroupElement> xs, double t0, double t1, double reach, F&& f) const {
    struct Hit {
      std::uint32_t id;
      GroupElement lift;
    };
    const double room = index_.pad() - reach;
    if (!(room > 0.0)) throw ConfigError("query reach exceeds the index pad");
    const double span = std::max(0.0, t1 - t0);
    const int n = std::max(1, static_cast<int>(std::ceil(span / std::min(0.1, 2.0 * room))));
    const double h = span / n;
    std::vector<Hit> hits;
    for (const GroupElement& x : xs)
      for (int k = 0; k < n; ++k) {
        const GroupElement q = x * flow_elem(t0 + (k + 0.5) * h);
        const double pos = 0.5 * h + reach;
        index_.visit(q, pos, 0.5 * h + 2.0 * reach,
                     [&](const SectionIndex::Entry& e, const GroupElement& near) { hits.push_back({e.id, near}); });
      }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < hits.size(); ++i) {
      bool seen = false;
      for (std::size_t j = i; j-- > 0 && hits[j].id == hits[i].id;)
        if (approx_equal(hits[j].lift, hits[i].lift, 1e-9)) {
          seen = true;
          break;
        }
      if (!seen) f(hits[i].id, hits[i].lift);
    }
  }

 private:
  SectionIndex index_;
  std::vector<GroupElement> lifts_;
};

}  // namespace geoflow
