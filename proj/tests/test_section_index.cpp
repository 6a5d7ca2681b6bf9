#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "geoflow/section_index.hpp"
#include "support.hpp"

using namespace geoflow;
using testsupport::bolza;

namespace {

double angle_gap(double a, double b) {
  const double d = std::abs(a - b);
  return std::min(d, 2.0 * std::numbers::pi - d);
}

}  // namespace

TEST_CASE("tangent coordinates move within the reach bound") {
  const auto& G = bolza();
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> off(-0.3, 0.3);
  for (int i = 0; i < 2000; ++i) {
    const GroupElement g = sample_haar(G, rng);
    const double u = off(rng), s = off(rng), t = off(rng);
    const GroupElement h = g * unstable_elem(u) * stable_elem(s) * flow_elem(t);
    const TangentCoords a = tangent_coords(g), b = tangent_coords(h);
    const Reach r = reach_of(u, s, t);
    CHECK(hyperbolic_dist(g, h) <= r.pos + 1e-12);
    CHECK(angle_gap(a.theta, b.theta) <= r.angle + 1e-12);
  }
}

TEST_CASE("haar samples lie in the domain with uniform direction") {
  const auto& G = bolza();
  std::mt19937_64 rng(22);
  double c = 0.0, sn = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const GroupElement g = sample_haar(G, rng);
    CHECK(near_domain(G, g, 1e-12));
    CHECK(displacement(g) <= G.domain_radius() + 1e-9);
    const TangentCoords t = tangent_coords(g);
    c += std::cos(t.theta) / n;
    sn += std::sin(t.theta) / n;
  }
  CHECK(std::abs(c) < 0.03);
  CHECK(std::abs(sn) < 0.03);
}

TEST_CASE("index finds every translate within reach") {
  const auto& G = bolza();
  std::mt19937_64 rng(23);
  const double pos = 0.4, ang = 0.8;
  SectionIndex index(G, 0.1, pos);
  std::vector<GroupElement> lifts;
  for (std::uint32_t id = 0; id < 3000; ++id) {
    lifts.push_back(sample_haar(G, rng));
    index.insert(id, lifts.back());
  }
  int expected = 0, found = 0;
  for (int q = 0; q < 200; ++q) {
    // Query points need not be reduced.
    const GroupElement g = sample_haar(G, rng) * flow_elem(0.5);
    std::vector<GroupElement> hits;
    index.visit(g, pos, ang, [&](const SectionIndex::Entry&, const GroupElement& near) { hits.push_back(near); });
    for (const GroupElement& L : lifts) {
      for (const GroupElement& gamma : G.translates_within(g, L, pos)) {
        const GroupElement t = gamma * L;
        const KanCoords k = decompose_cba(g.inverse() * t);
        const Reach r = reach_of(k.u, k.s, k.t);
        if (r.pos > pos || r.angle > ang) continue;
        ++expected;
        bool hit = false;
        for (const GroupElement& h : hits) hit = hit || approx_equal(h, t, 1e-8);
        found += hit;
      }
    }
  }
  CHECK(expected > 50);
  CHECK(found == expected);
}
