#include "geoflow/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

double max_abs(const LabelSet& s) { return s.empty() ? 0.0 : std::max(std::abs(s.lo()), std::abs(s.hi())); }

double box_extent(const Rectangle& R) {
  const SectionCoords c = coordinate_extent(SectionKind::CB, max_abs(R.u_labels), max_abs(R.sp_labels));
  return c.u + c.s;
}

// Least clearance of sub inside sup; negative by the largest overhang when not contained.
double clearance(const LabelSet& sub, const LabelSet& sup) {
  double m = std::numeric_limits<double>::infinity();
  for (const Interval& I : sub.intervals()) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Interval& J : sup.intervals()) best = std::max(best, std::min(I.lo - J.lo, J.hi - I.hi));
    m = std::min(m, best);
  }
  return m;
}

constexpr double kStrip = 0.1;

// Base points L c_u b_s over a grid of the source box, fine enough that the box flowed for
// any t in [t0, t1] stays within kStrip of one of them.
std::vector<GroupElement> strip_bases(const Rectangle& source, const GroupElement& lift, double t0, double t1) {
  const double U = max_abs(source.u_labels), S = max_abs(source.sp_labels);
  const SectionCoords c = coordinate_extent(SectionKind::CB, U, S);
  const auto count = [](double half, double stretch) {
    return std::max(1, static_cast<int>(std::ceil(2.0 * half * std::exp(std::max(stretch, 0.0)) / kStrip)));
  };
  const int nu = count(c.u, t1), ns = count(c.s, -t0);
  std::vector<GroupElement> out;
  out.reserve(static_cast<std::size_t>(nu) * static_cast<std::size_t>(ns));
  for (int i = 0; i < nu; ++i)
    for (int k = 0; k < ns; ++k) {
      const double u = nu == 1 ? 0.0 : -c.u + 2.0 * c.u * (i + 0.5) / nu;
      const double s = ns == 1 ? 0.0 : -c.s + 2.0 * c.s * (k + 0.5) / ns;
      out.push_back(lift * chart_element(SectionKind::CB, u, s));
    }
  return out;
}

std::vector<Branch> find_branches(const ChartIndex& index, const Rectangle& source, const GroupElement& lift,
                                  const std::vector<Rectangle>& targets, double t0, double t1, double reach) {
  std::vector<Branch> out;
  const std::vector<GroupElement> bases = strip_bases(source, lift, t0, t1);
  index.along(std::span<const GroupElement>(bases), t0, t1, reach, [&](std::uint32_t id, const GroupElement& near) {
    const auto edges = edges_between(source, lift, targets[id], near, t0, t1);
    if (edges.empty()) return;
    Branch b{id, near, edges.front().transit.inverse(), edges.front().t_lo, edges.front().t_hi};
    for (const Edge& e : edges) {
      b.t_lo = std::min(b.t_lo, e.t_lo);
      b.t_hi = std::max(b.t_hi, e.t_hi);
    }
    out.push_back(std::move(b));
  });
  return out;
}

}  // namespace

std::vector<double> eps_schedule(double epsilon, double T, int k_max) {
  std::vector<double> e{2.0 * epsilon / 3.0};
  for (int k = 0; k < k_max; ++k) e.push_back(e.front() + 2.0 * e.back() * std::exp(-T));
  return e;
}

double lebesgue_estimate(const FuchsianGroup& G, const PreMarkovFamily& F, std::size_t samples, std::uint64_t seed) {
  if (F.size() == 0 || samples == 0) throw ConfigError("Lebesgue estimate needs sections and samples");
  const ChartIndex index = family_index(G, F);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> label(-F.epsilon / 4.0, F.epsilon / 4.0);
  std::uniform_real_distribution<double> when(-0.75 * F.alpha, -0.25 * F.alpha);
  std::uniform_int_distribution<std::size_t> pick(0, F.size() - 1);
  std::vector<GroupElement> pts;
  pts.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    if (F.region) {
      pts.push_back(F.region->sample(rng));
      continue;
    }
    const std::size_t i = pick(rng);
    const double u = label(rng), sp = label(rng), t = when(rng);
    const SectionCoords c = coords_from_labels(SectionKind::CB, {u, sp});
    pts.push_back(F.D[i].lift * chart_element(SectionKind::CB, c.u, c.s) * flow_elem(t));
  }
  std::vector<double> slack(pts.size(), std::numeric_limits<double>::infinity());
  parallel_for(pts.size(), [&](std::size_t k) {
    if (const auto c = find_cover(F, index, pts[k])) slack[k] = c->slack;
  });
  const double m = *std::min_element(slack.begin(), slack.end());
  if (!std::isfinite(m)) throw CoverFailure("no sample point is covered");
  return m / 3.0;
}

RefinementState refine_C(const FuchsianGroup& G, const PreMarkovFamily& F, const RefineConfig& cfg) {
  const std::size_t n = F.size();
  if (n == 0) throw ConfigError("refinement needs a nonempty family");
  RefinementState st;
  st.L = cfg.L;
  st.T = cfg.L - F.alpha / 2.0;
  st.epsilon = F.epsilon;
  st.alpha = F.alpha;
  if (!(cfg.L > 4.0)) throw ConfigError("L must exceed 4");
  if (!(st.T > 3.0)) throw ConfigError("T = L - alpha/2 must exceed 3");
  if (cfg.k_max < 0 || !(cfg.tol > 0.0)) throw ConfigError("k_max must be >= 0 and tol positive");
  st.lambda = cfg.lambda > 0.0 ? cfg.lambda : lebesgue_estimate(G, F, cfg.lambda_samples, cfg.seed);
  if (!(cfg.L > std::log(4.0 * F.epsilon / st.lambda)))
    throw ConfigError("L must exceed ln(4 eps / lambda) = " + std::to_string(std::log(4.0 * F.epsilon / st.lambda)));

  const double eps0 = 2.0 * F.epsilon / 3.0;
  const double pad = st.lambda * std::exp(-2.0 * cfg.L);
  st.V.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double hu = std::min(max_abs(F.K[i].u_labels) + pad, eps0);
    const double hs = std::min(max_abs(F.K[i].sp_labels) + pad, eps0);
    st.V.push_back({F.D[i], LabelSet::interval(-hu, hu), LabelSet::interval(-hs, hs)});
  }

  double ext = 0.0;
  for (std::size_t i = 0; i < n; ++i) ext = std::max({ext, box_extent(st.V[i]), box_extent(F.B[i])});
  const double far = cfg.L + F.alpha / 2.0, near = cfg.L - F.alpha / 2.0;
  // Half a strip on each flowed axis plus the target box.
  const double reach = 2.0 * kStrip + ext;
  ChartIndex index(G, reach + 0.05);
  for (const SectionChart& D : F.D) index.add(D.lift);
  st.behind.resize(n);
  st.ahead.resize(n);
  parallel_for(n, [&](std::size_t i) {
    st.behind[i] = find_branches(index, st.V[i], F.D[i].lift, F.K, -far, -near, reach);
    st.ahead[i] = find_branches(index, st.V[i], F.D[i].lift, F.K, near, far, reach);
  });

  std::vector<LabelSet> R(n), S(n);
  for (std::size_t i = 0; i < n; ++i) {
    R[i] = F.K[i].sp_labels;
    S[i] = F.K[i].u_labels;
  }
  st.R_sets = R;
  st.S_sets = S;
  const std::vector<double> sched = eps_schedule(F.epsilon, st.T, cfg.k_max);
  st.eps_k.push_back(sched[0]);
  for (int k = 0; k < cfg.k_max; ++k) {
    std::vector<LabelSet> Rn(n), Sn(n);
    std::vector<double> inc(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      for (const Branch& b : st.behind[i])
        if (!R[b.from].empty()) Rn[i] = label_union(Rn[i], map_labels(b.back.s_map(), R[b.from]));
      for (const Branch& b : st.ahead[i])
        if (!S[b.from].empty()) Sn[i] = label_union(Sn[i], map_labels(b.back.u_map(), S[b.from]));
      Rn[i] = close_gaps(Rn[i], cfg.tol);
      Sn[i] = close_gaps(Sn[i], cfg.tol);
    });
    const double bound = sched[k + 1] * (1.0 + 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      if (max_abs(Rn[i]) > bound || max_abs(Sn[i]) > bound)
        throw ScheduleViolation("step " + std::to_string(k + 1) + " leaves the eps_k box at member " +
                                std::to_string(i));
      const LabelSet Ru = close_gaps(label_union(st.R_sets[i], Rn[i]), cfg.tol);
      const LabelSet Su = close_gaps(label_union(st.S_sets[i], Sn[i]), cfg.tol);
      inc[i] = std::max(label_hausdorff(Ru, st.R_sets[i]), label_hausdorff(Su, st.S_sets[i]));
      st.R_sets[i] = Ru;
      st.S_sets[i] = Su;
    }
    R = std::move(Rn);
    S = std::move(Sn);
    st.eps_k.push_back(sched[k + 1]);
    st.increments.push_back(*std::max_element(inc.begin(), inc.end()));
    st.steps = k + 1;
    if (st.increments.back() < cfg.tol) {
      st.converged = true;
      break;
    }
  }

  st.C.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rectangle c{F.D[i], st.S_sets[i], st.R_sets[i]};
    if (max_abs(c.u_labels) > F.epsilon || max_abs(c.sp_labels) > F.epsilon)
      throw ScheduleViolation("C_" + std::to_string(i) + " is not inside B_i");
    st.C.push_back(std::move(c));
  }
  return st;
}

ConditionReport fiber_inclusion_margin(const FuchsianGroup& G, const RefinementState& st, std::size_t per_member) {
  const std::size_t n = st.size();
  ConditionReport rep{"fiber_inclusion", true, std::numeric_limits<double>::infinity(), 0, 0, {}};
  double ext = 0.0;
  for (const Rectangle& c : st.C) ext = std::max(ext, box_extent(c));
  const double far = st.L + st.alpha / 2.0, near = st.L - st.alpha / 2.0;
  const double reach = ext * 1.01;
  ChartIndex index(G, reach + 0.05);
  for (const Rectangle& c : st.C) index.add(c.chart.lift);
  const auto side = static_cast<std::size_t>(std::max(1.0, std::sqrt(static_cast<double>(per_member))));
  std::vector<std::vector<double>> margins(n);
  parallel_for(n, [&](std::size_t i) {
    const Rectangle& Ci = st.C[i];
    const GroupElement& Li = Ci.chart.lift;
    for (double u : grid_points(Ci.u_labels, side))
      for (double sp : grid_points(Ci.sp_labels, side)) {
        const SectionCoords xc = coords_from_labels(SectionKind::CB, {u, sp});
        const GroupElement x = Li * chart_element(SectionKind::CB, xc.u, xc.s);
        auto probe = [&](double t0, double t1, bool stable) {
          index.along(x, t0, t1, reach, [&](std::uint32_t k, const GroupElement& near_lift) {
            const auto h = surface_hit(near_lift, x);
            if (!h || h->time < t0 || h->time > t1 || !st.C[k].contains(h->labels)) return;
            const ChartTransit back = transit(near_lift, Li);
            margins[i].push_back(stable ? clearance(map_labels(back.s_map(), st.C[k].sp_labels), Ci.sp_labels)
                                        : clearance(map_labels(back.u_map(), st.C[k].u_labels), Ci.u_labels));
          });
        };
        probe(-far, -near, true);
        probe(near, far, false);
      }
  });
  for (const auto& ms : margins)
    for (double m : ms) {
      ++rep.checked;
      rep.margin = std::min(rep.margin, m);
      if (m < -1e-12) {
        ++rep.failures;
        rep.passed = false;
      }
    }
  if (rep.checked == 0) rep.note = "no sampled point met another member at time L";
  return rep;
}

}  // namespace geoflow
