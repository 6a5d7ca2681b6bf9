#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "geoflow/poincare.hpp"

namespace geoflow {

// C_j with the projections E_ji of the members it flows into, and the pieces they cut it into.
struct ChartPieces {
  std::vector<std::uint32_t> sources;  // i for each E
  std::vector<Rectangle> E;
  std::vector<Rectangle> pieces;
};

struct Subdivision {
  std::vector<ChartPieces> charts;

  std::size_t piece_count() const;
};

// E^1..E^4 of C for one E inside it: (Eu, Es), (Cu \ Eu, Es), (Eu, Cs \ Es), (Cu \ Eu, Cs \ Es).
std::array<Rectangle, 4> e_pieces(const Rectangle& C, const Rectangle& E);

// Common refinement of C by all E, keeping pieces with nonempty interior.
std::vector<Rectangle> split_pieces(const Rectangle& C, std::span<const Rectangle> E);

// E_ji for every member C_i reached from the interior of C_j by the first return, found on a
// census grid of `census` points per axis. Throws EmptySubdivision when a member has no
// outgoing or no incoming transition.
Subdivision subdivide_E(const PoincareMap& PC, std::size_t census = 16);

// Every C_j left whole.
Subdivision undivided(const ProperFamily& F);

struct ItineraryClass {
  std::vector<std::uint32_t> key;  // j0, f0, e1, f1, ..., eN, fN with e_k an edge index
  std::uint32_t chart = 0;
  Rectangle closure;
  std::size_t samples = 0;
};

struct ClassReport {
  std::vector<ItineraryClass> classes;
  std::size_t sampled = 0;
  std::size_t escaped = 0;   // no return within the horizon before depth N
  std::size_t boundary = 0;  // an iterate fell on a piece boundary
  std::size_t itineraries = 0;  // distinct itineraries, escaped ones cut at the escape
  std::size_t overlaps = 0;     // pairs of closures whose interiors meet
};

struct ClassConfig {
  std::size_t grid = 24;  // sample points per axis in each piece
  double boundary_tol = 1e-9;
  bool strict = true;  // overlapping closures throw SampleTooSparse
};

// Classes of grid points of every piece by their first N returns through the pieces.
// Closures are pushed forward and pulled back exactly in labels.
ClassReport itinerary_classes(const PoincareMap& PC, const Subdivision& sub, int N, const ClassConfig& cfg = {});

struct TransitionTimes {
  std::uint32_t from = 0, to = 0;
  std::vector<double> times;
};

struct MarkovPartition {
  std::vector<Rectangle> members;
  std::vector<double> shifts;
  std::vector<std::uint32_t> chart;  // member of the refined family each M_p sits on
  std::vector<std::vector<std::uint32_t>> provenance;
  std::vector<std::vector<std::uint8_t>> adjacency;
  std::vector<TransitionTimes> returns;
  int N = 0;
  double L = 0.0;
  double alpha = 0.0;  // size of the refined family; the partition has size 2 alpha

  std::size_t size() const { return members.size(); }
  ProperFamily family() const { return {members, 2.0 * alpha}; }
};

struct TransitionCensus {
  std::vector<std::vector<std::uint8_t>> adjacency;
  std::vector<TransitionTimes> returns;
};

// A[p][q] = 1 when an interior grid point of member p (census per axis) first returns into
// the interior of member q; the return times are recorded per transition.
TransitionCensus transition_census(const PoincareMap& PM, std::size_t census);

struct FinalizeConfig {
  std::uint64_t seed = 1;
  std::size_t census = 8;  // interior points per axis for the adjacency census
};

// M_p = phi_{tau_p}(closure of G_p) with tau_p = (pi(p) + 1) tau_0 for a seeded permutation pi.
MarkovPartition finalize_markov(const FuchsianGroup& G, const PoincareMap& PC, const ClassReport& classes, int N,
                                double L, const FinalizeConfig& cfg = {});

struct MarkovReport {
  std::size_t stable_checked = 0, stable_failed = 0;
  std::size_t unstable_checked = 0, unstable_failed = 0;
  std::size_t splice_checked = 0, splice_failed = 0;
  std::size_t excluded = 0;  // draws inside the boundary zone
  std::size_t no_return = 0;
  double commutation_error = 0.0;
  double boundary_tol = 1e-6;
  double threshold = 0.99;
  std::vector<std::string> failures;

  double stable_rate() const;
  double unstable_rate() const;
  double splice_rate() const;
  double pass_rate() const;
  bool passed() const;
};

MarkovReport verify_markov(const PoincareMap& PM, int N, std::size_t samples, std::uint64_t seed = 1,
                           double boundary_tol = 1e-6);

}  // namespace geoflow
