#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoflow/refinement.hpp"
#include "geoflow/symbolic.hpp"

namespace geoflow {

// Which part of X the pre-Markov family covers.
//   tube:   sections strung along the closed orbit of the shortest generator
//   region: the builder restricted to a flow box around a seeded point
//   full:   the builder on all of X
enum class FamilyKind { Tube, Region, Full };

std::string to_string(FamilyKind k);
FamilyKind family_kind(const std::string& name);

struct RunConfig {
  std::string group = "bolza";  // or a JSON file with name, generators, relation
  FamilyKind family = FamilyKind::Tube;
  double alpha = 0.0;    // 0: sigma* / 10
  double epsilon = 0.0;  // 0: alpha / 20 on a tube, the builder's choice otherwise
  double L = 4.5;
  int N = 0;  // 0: ceil(L / (2 alpha)) + 1
  int k_max = 50;
  double tol = 1e-9;
  double boundary_tol = 1e-6;
  double jitter = 0.3;
  double region_radius = 0.05;
  std::size_t samples = 10000;
  std::size_t grid = 24;
  std::size_t period_max = 3;
  std::uint64_t seed = 1;
  double budget_seconds = 300.0;
  std::string out = ".";
  bool plot_returns = true;
  bool subdivide = true;  // false skips the E subdivision (negative control)

  // Defaults filled in and every invariant checked; throws ConfigError.
  RunConfig resolved(const FuchsianGroup& G) const;
};

nlohmann::ordered_json to_json(const RunConfig& c);
// Missing keys keep the defaults; unknown keys throw ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

// FNV-1a of the compact JSON of the configuration without its output directory, as 16 hex digits.
std::string config_hash(const RunConfig& c);

FuchsianGroup load_group(const std::string& spec);
GroupElement shortest_generator(const FuchsianGroup& G);

PreMarkovFamily build_family(const FuchsianGroup& G, const RunConfig& cfg);

struct PipelineResult {
  PreMarkovFamily pre;
  RefinementState refined;
  Subdivision sub;
  ClassReport classes;
  MarkovPartition partition;
};

// pre-Markov family, refinement, subdivision, itinerary classes and shifted members.
// cfg must be resolved.
PipelineResult run_pipeline(const FuchsianGroup& G, const RunConfig& cfg);
// The same stages on a family built earlier.
PipelineResult run_pipeline(const FuchsianGroup& G, const RunConfig& cfg, PreMarkovFamily pre);

// Points the coverage checks are run on: the closed orbit for a tube, region or Haar samples otherwise.
std::vector<GroupElement> coverage_points(const FuchsianGroup& G, const RunConfig& cfg, std::size_t n);

// Sampled margins of the product structure on the members of a partition: bracket
// reconstruction, closure of members under the bracket, bracket transport, exponential closing.
std::vector<ConditionReport> structure_checks(const FuchsianGroup& G, const MarkovPartition& M, std::size_t samples,
                                              std::uint64_t seed);

}  // namespace geoflow
