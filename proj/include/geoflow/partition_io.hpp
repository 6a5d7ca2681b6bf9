#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoflow/pipeline.hpp"

namespace geoflow {

inline constexpr const char* kToolVersion = "0.1.0";

// A refined member C_j with the projections E_ji that cut it.
struct RefinedChart {
  Rectangle C;
  std::vector<std::uint32_t> sources;
  std::vector<Rectangle> E;
  std::size_t pieces = 0;
};

// Everything a partition file carries.
struct PartitionFile {
  RunConfig config;
  std::string hash;
  std::string version;
  double epsilon = 0.0;
  double lambda = 0.0;
  std::vector<GroupElement> centres;  // chart centres of the pre-Markov family
  std::vector<RefinedChart> refined;
  MarkovPartition partition;
};

nlohmann::ordered_json partition_json(const FuchsianGroup& G, const RunConfig& cfg, const PipelineResult& r);
// Throws ConfigError when a field is missing or malformed.
PartitionFile read_partition(const FuchsianGroup& G, const nlohmann::json& j);
PartitionFile load_partition(const FuchsianGroup& G, const std::filesystem::path& path);

// Family rebuilt from the stored centres, with the region of a region run.
PreMarkovFamily stored_family(const FuchsianGroup& G, const PartitionFile& f);

// Header lines start with '#' and carry the hash, seed and version.
std::string adjacency_csv(const PartitionFile& f);
std::string orbits_csv(const PartitionFile& f, const SymbolicBundle& b);

// Label boxes of member p with its refined chart's E subdivision in the member's labels and
// the sampled first-return images landing on it.
std::string section_svg(const PartitionFile& f, const PoincareMap& PM, std::size_t p);

// Writes the whole string or throws WriteFailure.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace geoflow
