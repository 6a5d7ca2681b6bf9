#include "geoflow/markov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

constexpr double kSliver = 1e-13;
constexpr std::uint32_t kEscape = std::numeric_limits<std::uint32_t>::max();

bool has_interior(const LabelSet& s) { return !s.empty() && s.measure() > kSliver; }

// Pieces of C cut by the sets E, grouped by which E they lie in.
std::vector<LabelSet> atoms(const LabelSet& C, const std::vector<LabelSet>& E) {
  std::vector<double> cuts;
  for (const Interval& i : C.intervals()) cuts.insert(cuts.end(), {i.lo, i.hi});
  for (const LabelSet& e : E)
    for (const Interval& i : e.intervals()) cuts.insert(cuts.end(), {i.lo, i.hi});
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<std::vector<bool>> patterns;
  std::vector<std::vector<Interval>> groups;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    if (b - a <= kSliver) continue;
    const double mid = 0.5 * (a + b);
    if (!C.contains(mid)) continue;
    std::vector<bool> pat;
    for (const LabelSet& e : E) pat.push_back(e.contains(mid));
    const auto it = std::find(patterns.begin(), patterns.end(), pat);
    if (it == patterns.end()) {
      patterns.push_back(pat);
      groups.push_back({{a, b}});
    } else {
      groups[static_cast<std::size_t>(it - patterns.begin())].push_back({a, b});
    }
  }
  std::vector<LabelSet> out;
  for (auto& g : groups) out.push_back(LabelSet::from_intervals(std::move(g)));
  return out;
}

// Index of the piece holding the labels at least tol inside; -1 on a boundary or outside.
long piece_of(const std::vector<Rectangle>& pieces, const LeafLabels& l, double tol) {
  long found = -1;
  for (std::size_t f = 0; f < pieces.size(); ++f) {
    if (!pieces[f].u_labels.contains_interior(l.u, tol) || !pieces[f].sp_labels.contains_interior(l.sp, tol)) continue;
    if (found >= 0) return -1;
    found = static_cast<long>(f);
  }
  return found;
}

bool interiors_meet(const Rectangle& a, const Rectangle& b) {
  return label_intersect(a.u_labels, b.u_labels).measure() > kSliver &&
         label_intersect(a.sp_labels, b.sp_labels).measure() > kSliver;
}

double draw_in(const LabelSet& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double r = U(rng) * s.measure();
  for (const Interval& i : s.intervals()) {
    if (r <= i.length()) return i.lo + r;
    r -= i.length();
  }
  return s.hi();
}

bool inside(const Rectangle& R, const LeafLabels& l, double tol) {
  return R.u_labels.distance_to_boundary(l.u) >= tol && R.sp_labels.distance_to_boundary(l.sp) >= tol &&
         R.contains(l);
}

}  // namespace

std::size_t Subdivision::piece_count() const {
  std::size_t n = 0;
  for (const auto& c : charts) n += c.pieces.size();
  return n;
}

std::array<Rectangle, 4> e_pieces(const Rectangle& C, const Rectangle& E) {
  const LabelSet u_out = label_diff(C.u_labels, E.u_labels), s_out = label_diff(C.sp_labels, E.sp_labels);
  return {Rectangle{C.chart, E.u_labels, E.sp_labels}, Rectangle{C.chart, u_out, E.sp_labels},
          Rectangle{C.chart, E.u_labels, s_out}, Rectangle{C.chart, u_out, s_out}};
}

std::vector<Rectangle> split_pieces(const Rectangle& C, std::span<const Rectangle> E) {
  std::vector<LabelSet> eu, es;
  for (const Rectangle& e : E) {
    eu.push_back(label_intersect(e.u_labels, C.u_labels));
    es.push_back(label_intersect(e.sp_labels, C.sp_labels));
  }
  std::vector<Rectangle> out;
  for (const LabelSet& u : atoms(C.u_labels, eu))
    for (const LabelSet& s : atoms(C.sp_labels, es))
      if (has_interior(u) && has_interior(s)) out.push_back({C.chart, u, s});
  return out;
}

Subdivision subdivide_E(const PoincareMap& PC, std::size_t census) {
  const ProperFamily& F = PC.family();
  const std::size_t n = F.size();
  Subdivision sub;
  sub.charts.resize(n);
  parallel_for(n, [&](std::size_t j) {
    const Rectangle& Cj = F.rectangles[j];
    std::vector<std::pair<std::uint32_t, GroupElement>> keys;
    for (double u : grid_points(Cj.u_labels, census))
      for (double sp : grid_points(Cj.sp_labels, census)) {
        const auto r = PC.forward({static_cast<std::uint32_t>(j), {u, sp}});
        if (!r) continue;
        const Rectangle& Ci = F.rectangles[r->to.member];
        if (!Ci.u_labels.contains_interior(r->to.labels.u, 0.0) || !Ci.sp_labels.contains_interior(r->to.labels.sp, 0.0))
          continue;
        const GroupElement& lift = PC.forward_edges(static_cast<std::uint32_t>(j))[r->edge].target_lift;
        const bool seen = std::any_of(keys.begin(), keys.end(), [&](const auto& k) {
          return k.first == r->to.member && approx_equal(k.second, lift, 1e-9);
        });
        if (!seen) keys.emplace_back(r->to.member, lift);
      }
    ChartPieces& out = sub.charts[j];
    for (const auto& [i, lift] : keys) {
      const auto es = edges_between(Cj, Cj.chart.lift, F.rectangles[i], lift, kReturnFloor, 2.0 * F.alpha);
      if (es.empty()) continue;
      LabelSet U;
      for (const Edge& e : es) U = label_union(U, e.u);
      out.sources.push_back(i);
      out.E.push_back({Cj.chart, U, es.front().sp});
    }
    out.pieces = split_pieces(Cj, out.E);
  });
  std::vector<std::size_t> incoming(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    if (sub.charts[j].E.empty()) throw EmptySubdivision("member " + std::to_string(j) + " has no outgoing transition");
    for (std::uint32_t i : sub.charts[j].sources) ++incoming[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    if (incoming[i] == 0) throw EmptySubdivision("member " + std::to_string(i) + " has no incoming transition");
  return sub;
}

Subdivision undivided(const ProperFamily& F) {
  Subdivision sub;
  for (const Rectangle& C : F.rectangles) sub.charts.push_back({{}, {}, {C}});
  return sub;
}

ClassReport itinerary_classes(const PoincareMap& PC, const Subdivision& sub, int N, const ClassConfig& cfg) {
  const std::size_t grid = cfg.grid;
  const double boundary_tol = cfg.boundary_tol;
  if (N < 0) throw ConfigError("itinerary depth must be >= 0");
  const ProperFamily& F = PC.family();
  if (sub.charts.size() != F.size()) throw ConfigError("subdivision does not match the family");

  struct Start {
    std::uint32_t j, f;
    LeafLabels x;
  };
  std::vector<Start> starts;
  for (std::uint32_t j = 0; j < F.size(); ++j)
    for (std::uint32_t f = 0; f < sub.charts[j].pieces.size(); ++f) {
      const Rectangle& P = sub.charts[j].pieces[f];
      for (double u : grid_points(P.u_labels, grid))
        for (double sp : grid_points(P.sp_labels, grid))
          if (piece_of(sub.charts[j].pieces, {u, sp}, boundary_tol) == static_cast<long>(f))
            starts.push_back({j, f, {u, sp}});
    }

  enum Outcome : std::uint8_t { kKept, kEscaped, kBoundary };
  std::vector<std::vector<std::uint32_t>> keys(starts.size());
  std::vector<std::uint8_t> outcome(starts.size(), kKept);
  parallel_for(starts.size(), [&](std::size_t s) {
    std::vector<std::uint32_t> key{starts[s].j, starts[s].f};
    MemberPoint x{starts[s].j, starts[s].x};
    for (int k = 0; k < N; ++k) {
      const auto r = PC.forward(x);
      if (!r) {
        outcome[s] = kEscaped;
        key.push_back(kEscape);
        keys[s] = std::move(key);
        return;
      }
      const long f = piece_of(sub.charts[r->to.member].pieces, r->to.labels, boundary_tol);
      if (f < 0) {
        outcome[s] = kBoundary;
        return;
      }
      key.push_back(r->edge);
      key.push_back(static_cast<std::uint32_t>(f));
      x = r->to;
    }
    keys[s] = std::move(key);
  });

  ClassReport rep;
  rep.sampled = starts.size();
  std::map<std::vector<std::uint32_t>, std::size_t> count;
  std::map<std::vector<std::uint32_t>, std::size_t> all;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    if (outcome[s] == kEscaped) ++rep.escaped;
    if (outcome[s] == kBoundary) ++rep.boundary;
    if (outcome[s] == kKept) ++count[keys[s]];
    if (outcome[s] != kBoundary) ++all[keys[s]];
  }
  rep.itineraries = all.size();

  for (const auto& [key, samples] : count) {
    const std::uint32_t j0 = key[0];
    Rectangle Q = sub.charts[j0].pieces[key[1]];
    Moebius cu, cs;
    std::uint32_t j = j0;
    for (std::size_t k = 2; k + 1 < key.size(); k += 2) {
      const Edge& e = PC.forward_edges(j)[key[k]];
      const LabelSet u = map_labels(e.transit.u_map(), label_intersect(Q.u_labels, e.u));
      const LabelSet s = map_labels(e.transit.s_map(), label_intersect(Q.sp_labels, e.sp));
      const Rectangle& next = sub.charts[e.target].pieces[key[k + 1]];
      Q = {next.chart, label_intersect(u, next.u_labels), label_intersect(s, next.sp_labels)};
      cu = cu.then(e.transit.u_map());
      cs = cs.then(e.transit.s_map());
      j = e.target;
    }
    const Rectangle& P0 = sub.charts[j0].pieces[key[1]];
    Rectangle closure{P0.chart, label_intersect(map_labels(cu.inverse(), Q.u_labels), P0.u_labels),
                      label_intersect(map_labels(cs.inverse(), Q.sp_labels), P0.sp_labels)};
    if (!has_interior(closure.u_labels) || !has_interior(closure.sp_labels))
      throw SampleTooSparse("itinerary class with an empty closure on member " + std::to_string(j0));
    rep.classes.push_back({key, j0, std::move(closure), samples});
  }

  for (std::size_t a = 0; a < rep.classes.size(); ++a)
    for (std::size_t b = a + 1; b < rep.classes.size() && rep.classes[b].chart == rep.classes[a].chart; ++b)
      if (interiors_meet(rep.classes[a].closure, rep.classes[b].closure)) {
        if (cfg.strict)
          throw SampleTooSparse("closures of two itinerary classes on member " +
                                std::to_string(rep.classes[a].chart) + " overlap");
        ++rep.overlaps;
      }
  return rep;
}

TransitionCensus transition_census(const PoincareMap& PM, std::size_t census) {
  const ProperFamily& F = PM.family();
  const std::size_t m = F.size();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> hits(m);
  parallel_for(m, [&](std::size_t p) {
    const Rectangle& R = F.rectangles[p];
    for (double u : grid_points(R.u_labels, census))
      for (double sp : grid_points(R.sp_labels, census)) {
        if (!inside(R, {u, sp}, 1e-9)) continue;
        const auto r = PM.forward({static_cast<std::uint32_t>(p), {u, sp}});
        if (r && inside(F.rectangles[r->to.member], r->to.labels, 1e-9)) hits[p].emplace_back(r->to.member, r->time);
      }
  });
  TransitionCensus out;
  out.adjacency.assign(m, std::vector<std::uint8_t>(m, 0));
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<double>> times;
  for (std::size_t p = 0; p < m; ++p)
    for (const auto& [q, t] : hits[p]) {
      out.adjacency[p][q] = 1;
      times[{static_cast<std::uint32_t>(p), q}].push_back(t);
    }
  for (auto& [pq, ts] : times) out.returns.push_back({pq.first, pq.second, std::move(ts)});
  return out;
}

MarkovPartition finalize_markov(const FuchsianGroup& G, const PoincareMap& PC, const ClassReport& classes, int N,
                                double L, const FinalizeConfig& cfg) {
  const ProperFamily& F = PC.family();
  if (!(N > L / (2.0 * F.alpha))) throw ConfigError("N too small: need N > L / (2 alpha)");
  const std::size_t m = classes.classes.size();
  if (m == 0) throw ShiftExhausted("no itinerary classes to shift");
  double gap = std::numeric_limits<double>::infinity();
  for (std::uint32_t j = 0; j < F.size(); ++j)
    for (const Edge& e : PC.forward_edges(j)) gap = std::min(gap, e.t_lo);
  const double tau0 = gap / (10.0 * static_cast<double>(m));
  if (!(tau0 > 1e-12)) throw ShiftExhausted("no room for distinct shifts");

  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  for (std::size_t k = m; k > 1; --k) std::swap(perm[k - 1], perm[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)]);

  MarkovPartition M;
  M.N = N;
  M.L = L;
  M.alpha = F.alpha;
  for (std::size_t p = 0; p < m; ++p) {
    const ItineraryClass& c = classes.classes[p];
    const double tau = static_cast<double>(perm[p] + 1) * tau0;
    M.members.push_back(flow_rectangle(c.closure, tau));
    M.shifts.push_back(tau);
    M.chart.push_back(c.chart);
    M.provenance.push_back(c.key);
  }

  const PoincareMap PM(G, M.family());
  TransitionCensus tc = transition_census(PM, cfg.census);
  M.adjacency = std::move(tc.adjacency);
  M.returns = std::move(tc.returns);
  return M;
}

double MarkovReport::stable_rate() const {
  return stable_checked ? 1.0 - static_cast<double>(stable_failed) / static_cast<double>(stable_checked) : 0.0;
}
double MarkovReport::unstable_rate() const {
  return unstable_checked ? 1.0 - static_cast<double>(unstable_failed) / static_cast<double>(unstable_checked) : 0.0;
}
double MarkovReport::splice_rate() const {
  return splice_checked ? 1.0 - static_cast<double>(splice_failed) / static_cast<double>(splice_checked) : 0.0;
}
double MarkovReport::pass_rate() const {
  const std::size_t c = stable_checked + unstable_checked;
  return c ? 1.0 - static_cast<double>(stable_failed + unstable_failed) / static_cast<double>(c) : 0.0;
}
bool MarkovReport::passed() const {
  return stable_rate() >= threshold && unstable_rate() >= threshold && splice_rate() >= threshold;
}

MarkovReport verify_markov(const PoincareMap& PM, int N, std::size_t samples, std::uint64_t seed,
                           double boundary_tol) {
  const ProperFamily& F = PM.family();
  const std::size_t m = F.size();
  MarkovReport rep;
  rep.boundary_tol = boundary_tol;
  if (m == 0 || samples == 0) return rep;
  const int depth = std::min(N, 5);

  struct Draw {
    std::uint32_t p;
    LeafLabels x;
    double z_sp, w_frac;
    LeafLabels y;
  };
  std::vector<Draw> draws(samples);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(m - 1));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Draw& d : draws) {
    d.p = pick(rng);
    const Rectangle& R = F.rectangles[d.p];
    d.x = {draw_in(R.u_labels, rng), draw_in(R.sp_labels, rng)};
    d.z_sp = draw_in(R.sp_labels, rng);
    d.w_frac = unit(rng);
    d.y = {draw_in(R.u_labels, rng), draw_in(R.sp_labels, rng)};
  }

  struct Result {
    enum Kind : std::uint8_t { kExcluded, kNoReturn, kChecked } kind = kExcluded;
    int stable = -1, unstable = -1, splice = -1;  // -1 skipped, 0 failed, 1 passed
    double commutation = 0.0;
    std::string note;
  };
  std::vector<Result> res(samples);
  parallel_for(samples, [&](std::size_t k) {
    const Draw& d = draws[k];
    Result& out = res[k];
    const Rectangle& Mp = F.rectangles[d.p];
    if (!inside(Mp, d.x, boundary_tol)) return;
    const auto r = PM.forward({d.p, d.x});
    if (!r) {
      out.kind = Result::kNoReturn;
      return;
    }
    const std::uint32_t q = r->to.member;
    const Rectangle& Mq = F.rectangles[q];
    if (!inside(Mq, r->to.labels, boundary_tol)) return;
    out.kind = Result::kChecked;
    std::ostringstream note;

    const LeafLabels z{d.x.u, d.z_sp};
    if (inside(Mp, z, boundary_tol)) {
      const auto rz = PM.forward({d.p, z});
      out.stable = rz && rz->to.member == q && std::abs(rz->to.labels.u - r->to.labels.u) <= 1e-9 &&
                   Mq.contains(rz->to.labels, 1e-12);
      if (!out.stable) note << "stable fiber of member " << d.p << " leaves U(" << d.p << "," << q << ")";
    }

    const double wu = Mq.u_labels.lo() + d.w_frac * (Mq.u_labels.hi() - Mq.u_labels.lo());
    const LeafLabels w{wu, r->to.labels.sp};
    if (inside(Mq, w, boundary_tol)) {
      const auto bw = PM.backward({q, w});
      out.unstable = bw && bw->to.member == d.p && std::abs(bw->to.labels.sp - d.x.sp) <= 1e-9 &&
                     Mp.contains(bw->to.labels, 1e-12);
      if (!out.unstable) note << (note.tellp() > 0 ? "; " : "") << "unstable fiber of member " << q << " leaves U(" << d.p << "," << q << ")";
    }

    if (inside(Mp, d.y, boundary_tol) && depth > 0) {
      bool ok = true;
      MemberPoint xs{d.p, d.x}, ys{d.p, d.y}, zs{d.p, {d.x.u, d.y.sp}};
      MemberPoint yb = ys, zb = zs;
      for (int s = 0; s < depth && ok; ++s) {
        const auto a = PM.forward(xs), c = PM.forward(zs);
        if (!a) break;
        if (!c || c->to.member != a->to.member) {
          ok = false;
          break;
        }
        const auto b = PM.forward(ys);
        if (b && b->to.member == a->to.member && s < 4)
          out.commutation = std::max({out.commutation, std::abs(c->to.labels.u - a->to.labels.u),
                                      std::abs(c->to.labels.sp - b->to.labels.sp)});
        xs = a->to;
        zs = c->to;
        ys = b ? b->to : ys;
        if (!b || b->to.member != a->to.member) break;
      }
      for (int s = 0; s < depth && ok; ++s) {
        const auto a = PM.backward(yb), c = PM.backward(zb);
        if (!a) break;
        if (!c || c->to.member != a->to.member) {
          ok = false;
          break;
        }
        yb = a->to;
        zb = c->to;
      }
      out.splice = ok;
      if (!ok) note << (note.tellp() > 0 ? "; " : "") << "bracket in member " << d.p << " leaves the spliced itinerary";
    }
    out.note = note.str();
  });

  for (const Result& r : res) {
    if (r.kind == Result::kExcluded) ++rep.excluded;
    if (r.kind == Result::kNoReturn) ++rep.no_return;
    if (r.stable >= 0) ++rep.stable_checked, rep.stable_failed += r.stable == 0;
    if (r.unstable >= 0) ++rep.unstable_checked, rep.unstable_failed += r.unstable == 0;
    if (r.splice >= 0) ++rep.splice_checked, rep.splice_failed += r.splice == 0;
    rep.commutation_error = std::max(rep.commutation_error, r.commutation);
    if (!r.note.empty() && rep.failures.size() < 20) rep.failures.push_back(r.note);
  }
  return rep;
}

}  // namespace geoflow
