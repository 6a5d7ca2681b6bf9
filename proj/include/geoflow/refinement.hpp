#pragma once

#include <cstdint>
#include <vector>

#include "geoflow/poincare.hpp"

namespace geoflow {

struct RefineConfig {
  double L = 4.5;
  int k_max = 50;
  double tol = 1e-9;
  double lambda = 0.0;  // 0: estimate from the cover
  std::size_t lambda_samples = 2000;
  std::uint64_t seed = 1;
};

// Holonomy from a member `from` reached at flow time near -L (behind) or +L (ahead)
// back onto the refined member.
struct Branch {
  std::uint32_t from = 0;
  GroupElement from_lift;
  ChartTransit back;
  double t_lo = 0.0, t_hi = 0.0;
};

struct RefinementState {
  std::vector<Rectangle> C;
  std::vector<LabelSet> R_sets;  // sp labels of R_i; the u labels are those of K_i
  std::vector<LabelSet> S_sets;  // u labels of S_i; the sp labels are those of K_i
  std::vector<Rectangle> V;      // label boxes covering K_i
  std::vector<std::vector<Branch>> behind, ahead;
  std::vector<double> eps_k;       // schedule bound at each step taken
  std::vector<double> increments;  // Hausdorff change of the unions per step
  double L = 0.0;
  double T = 0.0;
  double lambda = 0.0;
  double epsilon = 0.0;
  double alpha = 0.0;
  int steps = 0;
  bool converged = false;

  std::size_t size() const { return C.size(); }
  ProperFamily family() const { return {C, alpha}; }
};

// eps_0 = 2 eps / 3, eps_{k+1} = eps_0 + 2 eps_k e^{-T}.
std::vector<double> eps_schedule(double epsilon, double T, int k_max);

// One third of the smallest covering slack seen on sample points of the family's region,
// or on points flowing onto the inner half of each K_i when there is no region.
double lebesgue_estimate(const FuchsianGroup& G, const PreMarkovFamily& F, std::size_t samples, std::uint64_t seed);

RefinementState refine_C(const FuchsianGroup& G, const PreMarkovFamily& F, const RefineConfig& cfg = {});

// Sampled x in C_i: every member C_k met by phi_{-L}(x) within alpha/2 must carry its
// stable fiber into that of x, and dually ahead. Margin is the least label clearance.
ConditionReport fiber_inclusion_margin(const FuchsianGroup& G, const RefinementState& st, std::size_t per_member);

}  // namespace geoflow
