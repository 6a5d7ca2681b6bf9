#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geoflow/chart_index.hpp"
#include "geoflow/transit.hpp"

namespace geoflow {

// Flow box {centre c_u b_s a_t : |u|, |s| <= radius, 0 <= t <= length}, for building and
// checking a family over part of X only.
struct Region {
  GroupElement centre;
  double radius = 0.0;
  double length = 0.0;

  GroupElement sample(std::mt19937_64& rng) const;
};

struct PreMarkovConfig {
  double alpha = 0.0;
  double epsilon = 0.0;  // 0 starts just below alpha / 16
  std::uint64_t seed = 1;
  std::size_t net_points = 20000;
  std::size_t batch = 20000;
  std::size_t max_rounds = 60;
  double uncovered_target = 2e-4;  // stop once a fresh batch has at most this uncovered fraction
  double shrink = 0.7;             // epsilon factor after an exhausted offset search
  int max_shrinks = 8;
  double budget_seconds = 0.0;  // 0: unlimited
  std::optional<Region> region;
};

struct BuildStats {
  std::size_t sections = 0;
  std::size_t samples = 0;
  std::size_t rounds = 0;
  int shrinks = 0;
  double seconds = 0.0;
  double last_uncovered = 1.0;
  double min_clearance = 0.0;  // smallest time gap kept to a neighbouring section
};

// D_i = P_{4 eps}(z_i), B_i = S_eps(z_i), K_i = S_{eps/2}(z_i), all on the chart at z_i.
struct PreMarkovFamily {
  std::vector<SectionChart> D;
  std::vector<Rectangle> B;
  std::vector<Rectangle> K;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::optional<Region> region;
  BuildStats stats;

  std::size_t size() const { return D.size(); }
  double chart_radius() const { return 4.0 * epsilon; }
};

// Family on the given chart centres, without any checks beyond the section size.
PreMarkovFamily make_family(const FuchsianGroup& G, const std::vector<GroupElement>& centres, double epsilon,
                            double alpha);

// Frame g with g^-1 gamma g = a_l, l the translation length of the hyperbolic gamma.
GroupElement axis_frame(const GroupElement& gamma);

// Centres along the closed orbit of gamma, at most 0.9 alpha apart, each pushed off the
// orbit by up to jitter * epsilon in u and in s.
std::vector<GroupElement> closed_orbit_centres(const GroupElement& gamma, double alpha, double epsilon, double jitter,
                                               std::uint64_t seed);
PreMarkovFamily closed_orbit_family(const FuchsianGroup& G, const GroupElement& gamma, double alpha, double epsilon,
                                    double jitter, std::uint64_t seed);

PreMarkovFamily build_pre_markov(const FuchsianGroup& G, const PreMarkovConfig& cfg);
PreMarkovFamily build_pre_markov(const FuchsianGroup& G, double alpha, std::uint64_t seed);

// Index of the chart centres with room for every query used on the family.
ChartIndex family_index(const FuchsianGroup& G, const PreMarkovFamily& F);

// Section i and a translate of its lift whose K box the forward orbit of y meets within time alpha.
struct Cover {
  std::uint32_t section = 0;
  GroupElement lift;
  LeafLabels labels;
  double time = 0.0;     // y flows for this time onto the section
  double slack = 0.0;    // distance of the hit from the edge of the K box and time window
};

std::optional<Cover> find_cover(const PreMarkovFamily& F, const ChartIndex& index, const GroupElement& y);

struct ConditionReport {
  std::string name;
  bool passed = true;
  double margin = 0.0;
  std::size_t checked = 0;
  std::size_t failures = 0;
  std::string note;
};

struct PreMarkovReport {
  std::vector<ConditionReport> conditions;
  double coverage = 0.0;
  std::size_t samples = 0;

  bool passed() const;
  const ConditionReport& get(const std::string& name) const;
};

PreMarkovReport validate_pre_markov(const FuchsianGroup& G, const PreMarkovFamily& F, std::size_t samples,
                                    std::uint64_t seed = 1);

}  // namespace geoflow
