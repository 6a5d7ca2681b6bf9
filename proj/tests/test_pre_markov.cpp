#include <doctest.h>

#include <cmath>
#include <random>

#include "geoflow/pre_markov.hpp"
#include "support.hpp"

using namespace geoflow;
using testsupport::bolza;

namespace {

PreMarkovConfig region_config(double radius, std::uint64_t seed) {
  const auto& G = bolza();
  std::mt19937_64 rng(seed);
  PreMarkovConfig cfg;
  cfg.alpha = G.sigma_star() / 10.0;
  cfg.seed = seed;
  cfg.region = Region{sample_haar(G, rng), radius, cfg.alpha};
  cfg.net_points = 2000;
  cfg.batch = 5000;
  cfg.uncovered_target = 1e-4;
  return cfg;
}

const PreMarkovFamily& region_family() {
  static const PreMarkovFamily F = build_pre_markov(bolza(), region_config(0.05, 3));
  return F;
}

}  // namespace

TEST_CASE("region build passes every condition") {
  const auto& G = bolza();
  const PreMarkovFamily& F = region_family();
  CHECK(F.size() > 50);
  CHECK(F.epsilon < F.alpha / 16.0);
  const PreMarkovReport r = validate_pre_markov(G, F, 10000, 11);
  for (const auto& c : r.conditions) {
    INFO(c.name << " margin " << c.margin << " failures " << c.failures << " " << c.note);
    CHECK(c.passed);
  }
  CHECK(r.coverage >= 1.0 - 1e-3);
  CHECK(r.get("c").checked > 0);
  CHECK(r.get("c").margin > 0.0);
  CHECK(r.get("e").checked > 0);
}

TEST_CASE("crossing sections violate the disjointness condition") {
  const auto& G = bolza();
  std::mt19937_64 rng(5);
  const GroupElement g = sample_haar(G, rng);
  const double alpha = G.sigma_star() / 10.0, eps = alpha / 20.0;
  // The second centre is a point of the first section, tilted by its own frame.
  const PreMarkovFamily bad = make_family(G, {g, g * unstable_elem(eps) * stable_elem(eps)}, eps, alpha);
  const PreMarkovReport r = validate_pre_markov(G, bad, 200);
  CHECK_FALSE(r.get("c").passed);
  CHECK(r.get("c").margin <= 0.0);
  CHECK_FALSE(r.passed());
  // Separating them along the flow repairs it.
  const PreMarkovFamily good = make_family(G, {g, g * flow_elem(alpha / 2.0)}, eps, alpha);
  CHECK(validate_pre_markov(G, good, 200).get("c").passed);
}

TEST_CASE("denser nets only add sections") {
  const auto& G = bolza();
  PreMarkovConfig cfg = region_config(0.05, 4);
  cfg.max_rounds = 0;
  cfg.uncovered_target = 1.0;
  cfg.net_points = 300;
  const PreMarkovFamily small = build_pre_markov(G, cfg);
  cfg.net_points = 900;
  const PreMarkovFamily large = build_pre_markov(G, cfg);
  REQUIRE(large.size() >= small.size());
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(approx_equal(small.D[i].lift, large.D[i].lift, 0.0));
  CHECK(validate_pre_markov(G, small, 100).get("c").passed);
  CHECK(validate_pre_markov(G, large, 100).get("c").passed);
}

TEST_CASE("builds are deterministic given the seed") {
  const auto& G = bolza();
  PreMarkovConfig cfg = region_config(0.04, 6);
  cfg.net_points = 500;
  cfg.batch = 1000;
  cfg.uncovered_target = 2e-3;
  const PreMarkovFamily a = build_pre_markov(G, cfg), b = build_pre_markov(G, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(approx_equal(a.D[i].lift, b.D[i].lift, 0.0));
}

TEST_CASE("covers agree with an exhaustive search") {
  const auto& G = bolza();
  const PreMarkovFamily& F = region_family();
  const ChartIndex index = family_index(G, F);
  std::mt19937_64 rng(8);
  const double half = F.epsilon / 2.0;
  int found = 0, missing = 0;
  for (int k = 0; k < 400; ++k) {
    // Points from a slightly larger box so that some are uncovered.
    Region wide = *F.region;
    wide.radius *= 1.6;
    const GroupElement y = wide.sample(rng);
    const auto cov = find_cover(F, index, y);
    if (cov) {
      ++found;
      const auto p = testsupport::fit_kan(cov->lift.inverse() * y, 0);
      CHECK(-p[2] == doctest::Approx(cov->time).epsilon(1e-7));
      CHECK(cov->time >= 0.0);
      CHECK(cov->time <= F.alpha);
      CHECK(std::abs(p[0]) < half);
      CHECK(std::abs(p[1] / (1.0 + p[0] * p[1])) < half);
      continue;
    }
    // Exhaustive: every section and every translate near the orbit segment.
    bool any = false;
    for (const SectionChart& D : F.D)
      for (const GroupElement& gamma : G.translates_within(y, D.lift, F.alpha + F.epsilon * 1.01)) {
        const KanCoords c = decompose_cba((gamma * D.lift).inverse() * y);
        const LeafLabels l = labels_of(SectionKind::CB, {c.u, c.s, false});
        any = any || (-c.t >= 0.0 && -c.t <= F.alpha && std::abs(l.u) < half && std::abs(l.sp) < half);
      }
    missing += any;
  }
  CHECK(found > 100);
  CHECK(missing == 0);
}

TEST_CASE("scale thresholds and budgets are enforced") {
  const auto& G = bolza();
  PreMarkovConfig cfg = region_config(0.05, 9);
  cfg.epsilon = cfg.alpha / 16.0;
  CHECK_THROWS_AS(build_pre_markov(G, cfg), ConfigError);
  cfg.epsilon = 0.0;
  cfg.alpha = G.sigma_star() / 6.0;
  CHECK_THROWS_AS(build_pre_markov(G, cfg), ConfigError);
  PreMarkovConfig slow = region_config(0.05, 9);
  slow.budget_seconds = 1e-4;
  slow.net_points = 100000;
  CHECK_THROWS_AS(build_pre_markov(G, slow), BudgetExceeded);
}

TEST_CASE("wide regions exhaust the flow offsets at the largest epsilon") {
  PreMarkovConfig cfg = region_config(0.12, 10);
  cfg.max_shrinks = 0;
  CHECK_THROWS_AS(build_pre_markov(bolza(), cfg), OffsetExhausted);
}
