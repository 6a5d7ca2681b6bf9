#pragma once

#include <cstdint>
#include <vector>

#include "geoflow/markov.hpp"

namespace geoflow {

// Sorted distinct lengths 2 arccosh(|tr g| / 2) over the hyperbolic elements of ball(word_len).
std::vector<double> length_spectrum(const FuchsianGroup& G, int word_len);

// Entry of the spectrum closest to `length`.
double nearest_length(std::span<const double> spectrum, double length);

struct PeriodicOrbit {
  std::vector<std::uint32_t> word;
  std::size_t symbolic_length = 0;
  LeafLabels start;   // fixed point in the first member of the word
  double r_sum = 0.0;         // sum of return times along the word
  double trace_length = 0.0;  // translation length of the closing element
  double group_length = 0.0;
  double residual = 0.0;  // |r_sum - group_length|
  bool realized = false;  // the first-return map itself follows the word from `start`
};

struct SymbolicBundle {
  std::vector<std::vector<std::uint8_t>> adjacency;
  std::vector<PeriodicOrbit> orbits;
  std::size_t words = 0;       // admissible primitive words visited
  bool truncated = false;      // stopped at max_words
};

struct SymbolicConfig {
  std::size_t period_max = 3;
  int spectrum_word_len = 6;
  std::size_t max_words = 200000;
};

// Periodic words of the adjacency up to period_max, one per rotation class, each closed by the
// fixed point of its composed return map and checked against the length spectrum.
SymbolicBundle export_symbolic(const FuchsianGroup& G, const PoincareMap& PM, const MarkovPartition& M,
                               const SymbolicConfig& cfg = {});

}  // namespace geoflow
