#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <unordered_map>
#include <vector>

#include "geoflow/fuchsian.hpp"

namespace geoflow {

// Position of g(i) in polar coordinates about i and the direction of the unit
// tangent vector, both angles measured in the Poincare disk.
struct TangentCoords {
  double r = 0.0;
  double phi = 0.0;
  double theta = 0.0;
};

TangentCoords tangent_coords(const GroupElement& g);

// Bounds on how far g moves under right multiplication by c_u b_s a_t.
struct Reach {
  double pos = 0.0;
  double angle = 0.0;
};

inline Reach reach_of(double u, double s, double t) {
  const double ut = std::abs(u) + std::abs(s);
  return {ut + std::abs(t), 2.0 * ut + std::abs(t)};
}

// Haar-uniform point of X: uniform position in the domain, uniform direction.
GroupElement sample_haar(const FuchsianGroup& G, std::mt19937_64& rng);

// True when d(g i, i) <= d(g i, l i) + 2 pad for every letter l.
bool near_domain(const FuchsianGroup& G, const GroupElement& g, double pad);

// Bucket grid over the unit tangent bundle of the domain. Each inserted lift is
// stored under every translate whose base point lies within `pad` of the domain,
// so queries of position radius <= pad never miss a translate.
class SectionIndex {
 public:
  struct Entry {
    std::uint32_t id = 0;
    std::uint32_t slot = 0;  // translate number for this id
    GroupElement lift;
  };

  SectionIndex(const FuchsianGroup& G, double cell, double pad);

  void insert(std::uint32_t id, const GroupElement& lift);

  // Calls f(entry, near_lift) for stored translates that may lie within the given
  // position and direction radii of g. near_lift is the translate moved next to g.
  template <class F>
  void visit(const GroupElement& g, double pos_radius, double angle_radius, F&& f) const {
    const QuotientPoint q = G_->reduce(g);
    const GroupElement back = g * q.rep.inverse();
    std::vector<std::uint32_t> hits;
    collect(q.rep, pos_radius, angle_radius, hits);
    for (std::uint32_t k : hits) f(entries_[k], back * entries_[k].lift);
  }

  std::size_t size() const { return entries_.size(); }
  double pad() const { return pad_; }

 private:
  std::uint64_t key(int ring, int sector, int dir) const;
  int sectors(int ring) const;
  void collect(const GroupElement& g, double pos_radius, double angle_radius, std::vector<std::uint32_t>& out) const;

  const FuchsianGroup* G_;
  double cell_;
  double pad_;
  int dir_cells_;
  double dir_width_;
  std::vector<GroupElement> neighbours_;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

}  // namespace geoflow
