#include "geoflow/pre_markov.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

constexpr double kMinClearance = 1e-5;

double delta_star(double alpha) { return alpha / 4.0; }

// Position reach of D_i seen from L_i a_t for |t| <= window, plus a stored chart.
double pair_reach(double R, double window) { return R * (1.0 + std::exp(window)) + 2.0 * R; }

double index_pad(double epsilon, double alpha) { return pair_reach(4.0 * epsilon, 2.0 * alpha) + 0.05; }

void check_scales(const FuchsianGroup& G, double epsilon, double alpha) {
  if (!(alpha > 0.0) || !(alpha < G.sigma_star() / 6.0)) throw ConfigError("alpha must lie in (0, sigma*/6)");
  if (!(epsilon > 0.0) || !(epsilon < alpha / 16.0)) throw ConfigError("epsilon must lie in (0, alpha/16)");
}

// Signed gap between a set of time ranges and [a, b]; negative when they overlap.
double gap_to(const std::vector<Interval>& ranges, double a, double b, double cap) {
  double g = cap;
  for (const Interval& r : ranges) g = std::min(g, std::max(r.lo - b, a - r.hi));
  return g;
}

class Builder {
 public:
  Builder(const FuchsianGroup& G, const PreMarkovConfig& cfg, double epsilon,
          std::chrono::steady_clock::time_point start, int shrinks)
      : G_(G),
        cfg_(cfg),
        eps_(epsilon),
        R_(4.0 * epsilon),
        index_(G, index_pad(epsilon, cfg.alpha)),
        start_(start),
        shrinks_(shrinks) {}

  PreMarkovFamily run() {
    std::mt19937_64 rng(cfg_.seed);
    auto draw = [&] { return cfg_.region ? cfg_.region->sample(rng) : sample_haar(G_, rng); };
    for (std::size_t k = 0; k < cfg_.net_points; ++k) {
      visit(draw());
      if ((k & 255) == 0) check_budget();
    }
    double uncovered = 1.0;
    std::size_t rounds = 0;
    for (; rounds < cfg_.max_rounds; ++rounds) {
      std::size_t missed = 0;
      for (std::size_t k = 0; k < cfg_.batch; ++k) {
        missed += visit(draw());
        if ((k & 255) == 0) check_budget();
      }
      uncovered = static_cast<double>(missed) / static_cast<double>(std::max<std::size_t>(1, cfg_.batch));
      if (uncovered <= cfg_.uncovered_target) break;
    }
    if (uncovered > cfg_.uncovered_target)
      throw CoverFailure("sample net left " + std::to_string(uncovered) + " of a batch uncovered");

    PreMarkovFamily F = make_family(G_, lifts_, eps_, cfg_.alpha);
    F.region = cfg_.region;
    F.stats = stats(rounds + (rounds < cfg_.max_rounds ? 1 : 0), uncovered);
    return F;
  }

  BuildStats stats(std::size_t rounds, double uncovered) const {
    BuildStats s;
    s.sections = lifts_.size();
    s.samples = samples_;
    s.rounds = rounds;
    s.shrinks = shrinks_;
    s.seconds = elapsed();
    s.last_uncovered = uncovered;
    s.min_clearance = min_clear_;
    return s;
  }

 private:
  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void check_budget() const {
    if (cfg_.budget_seconds > 0.0 && elapsed() > cfg_.budget_seconds) {
      std::ostringstream os;
      os << "build budget of " << cfg_.budget_seconds << " s exhausted after " << lifts_.size() << " sections and "
         << samples_ << " samples at epsilon " << eps_;
      throw BudgetExceeded(os.str());
    }
  }

  bool covered(const GroupElement& y) const {
    const double half = eps_ / 2.0;
    bool hit = false;
    index_.along(y, 0.0, cfg_.alpha, eps_ * 1.01, [&](std::uint32_t, const GroupElement& L) {
      if (hit) return;
      const auto h = surface_hit(L, y);
      hit = h && h->time >= 0.0 && h->time <= cfg_.alpha && std::abs(h->labels.u) < half &&
            std::abs(h->labels.sp) < half;
    });
    return hit;
  }

  // Returns 1 when y was not covered yet.
  int visit(const GroupElement& y) {
    ++samples_;
    if (covered(y)) return 0;
    place(y);
    return 1;
  }

  void place(const GroupElement& y) {
    const double alpha = cfg_.alpha;
    const double lo = alpha / 20.0, hi = alpha - lo;
    const double top = R_ * std::exp(alpha);
    std::vector<Interval> blocked;
    index_.along(y, -lo, alpha + lo, 4.0 * R_, [&](std::uint32_t, const GroupElement& L) {
      const TransitRange r = transit_range(transit(y, L), R_, top, R_, R_);
      if (r.hit) blocked.push_back({r.t_lo, r.t_hi});
    });
    std::sort(blocked.begin(), blocked.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });

    // Largest clearance over the free gaps, capped, then as close to alpha / 2 as that allows.
    const double cap = alpha / 8.0;
    double best_tau = 0.5 * alpha, best_clear = -1.0;
    auto consider = [&](double left, double right) {
      if (right <= lo || left >= hi) return;
      double widest = 0.5 * alpha;
      if (std::isfinite(left) && std::isfinite(right)) widest = std::clamp(0.5 * (left + right), lo, hi);
      else if (std::isfinite(right)) widest = lo;
      else if (std::isfinite(left)) widest = hi;
      const double clear = std::min({widest - left, right - widest, cap});
      const double tau = std::clamp(0.5 * alpha, std::max(lo, left + clear), std::min(hi, right - clear));
      if (clear > best_clear + 1e-15 ||
          (clear > best_clear - 1e-15 && std::abs(tau - 0.5 * alpha) < std::abs(best_tau - 0.5 * alpha))) {
        best_clear = clear;
        best_tau = tau;
      }
    };
    double left = -std::numeric_limits<double>::infinity();
    for (const Interval& b : blocked) {
      if (b.lo > left) consider(left, b.lo);
      left = std::max(left, b.hi);
    }
    consider(left, std::numeric_limits<double>::infinity());
    if (best_clear < kMinClearance) throw OffsetExhausted("no free flow offset for a new section");
    min_clear_ = std::min(min_clear_, std::min(best_clear, alpha));

    const QuotientPoint z = G_.reduce(y * flow_elem(best_tau));
    index_.add(z.rep);
    lifts_.push_back(z.rep);
  }

  const FuchsianGroup& G_;
  const PreMarkovConfig& cfg_;
  double eps_;
  double R_;
  ChartIndex index_;
  std::vector<GroupElement> lifts_;
  std::chrono::steady_clock::time_point start_;
  int shrinks_;
  std::size_t samples_ = 0;
  double min_clear_ = std::numeric_limits<double>::infinity();
};

}  // namespace

GroupElement Region::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> side(-radius, radius), along(0.0, length);
  const double u = side(rng), s = side(rng), t = along(rng);
  return centre * unstable_elem(u) * stable_elem(s) * flow_elem(t);
}

PreMarkovFamily make_family(const FuchsianGroup& G, const std::vector<GroupElement>& centres, double epsilon,
                            double alpha) {
  check_scales(G, epsilon, alpha);
  PreMarkovFamily F;
  F.epsilon = epsilon;
  F.alpha = alpha;
  F.D.reserve(centres.size());
  for (const GroupElement& c : centres) {
    const SectionChart D = make_section(G, G.reduce(c), 4.0 * epsilon, SectionKind::CB, alpha);
    F.B.push_back(rect_S(D, epsilon, delta_star(alpha)));
    F.K.push_back(rect_S(D, epsilon / 2.0, delta_star(alpha)));
    F.D.push_back(D);
  }
  F.stats.sections = F.D.size();
  return F;
}

GroupElement axis_frame(const GroupElement& gamma) {
  const Mat2& m = gamma.matrix();
  const double tr = m.trace();
  if (!(tr > 2.0)) throw ConfigError("element is not hyperbolic");
  const double root = std::sqrt(tr * tr - 4.0);
  auto eigvec = [&](double lam) -> std::array<double, 2> {
    if (std::abs(m.b) >= std::abs(m.c)) return {m.b, lam - m.a};
    return {lam - m.d, m.c};
  };
  const auto v = eigvec(0.5 * (tr + root));
  auto w = eigvec(0.5 * (tr - root));
  if (v[0] * w[1] - v[1] * w[0] < 0.0) w = {-w[0], -w[1]};
  return GroupElement::from_entries(v[0], w[0], v[1], w[1]);
}

std::vector<GroupElement> closed_orbit_centres(const GroupElement& gamma, double alpha, double epsilon, double jitter,
                                               std::uint64_t seed) {
  if (!(alpha > 0.0) || !(jitter >= 0.0)) throw ConfigError("closed orbit needs alpha > 0 and jitter >= 0");
  const GroupElement g0 = axis_frame(gamma);
  const double len = translation_length(gamma);
  const int n = static_cast<int>(std::ceil(len / (0.9 * alpha)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> off(-jitter * epsilon, jitter * epsilon);
  std::vector<GroupElement> out;
  for (int k = 0; k < n; ++k) {
    const double u = off(rng), s = off(rng);
    out.push_back(g0 * flow_elem(k * len / n) * unstable_elem(u) * stable_elem(s));
  }
  return out;
}

PreMarkovFamily closed_orbit_family(const FuchsianGroup& G, const GroupElement& gamma, double alpha, double epsilon,
                                    double jitter, std::uint64_t seed) {
  return make_family(G, closed_orbit_centres(gamma, alpha, epsilon, jitter, seed), epsilon, alpha);
}

PreMarkovFamily build_pre_markov(const FuchsianGroup& G, const PreMarkovConfig& cfg) {
  double eps = cfg.epsilon > 0.0 ? cfg.epsilon : cfg.alpha / 16.0 * 0.98;
  check_scales(G, eps, cfg.alpha);
  if (cfg.region && !(cfg.region->radius > 0.0 && cfg.region->length >= 0.0))
    throw ConfigError("region needs a positive radius");
  const auto start = std::chrono::steady_clock::now();
  for (int shrinks = 0;; ++shrinks) {
    try {
      Builder b(G, cfg, eps, start, shrinks);
      return b.run();
    } catch (const OffsetExhausted&) {
      if (shrinks >= cfg.max_shrinks) throw;
      eps *= cfg.shrink;
    }
  }
}

PreMarkovFamily build_pre_markov(const FuchsianGroup& G, double alpha, std::uint64_t seed) {
  PreMarkovConfig cfg;
  cfg.alpha = alpha;
  cfg.seed = seed;
  return build_pre_markov(G, cfg);
}

ChartIndex family_index(const FuchsianGroup& G, const PreMarkovFamily& F) {
  ChartIndex index(G, index_pad(F.epsilon, F.alpha));
  for (const SectionChart& D : F.D) index.add(D.lift);
  return index;
}

std::optional<Cover> find_cover(const PreMarkovFamily& F, const ChartIndex& index, const GroupElement& y) {
  const double half = F.epsilon / 2.0;
  std::optional<Cover> best;
  index.along(y, 0.0, F.alpha, F.epsilon * 1.01, [&](std::uint32_t id, const GroupElement& L) {
    const auto h = surface_hit(L, y);
    if (!h) return;
    const double slack = std::min({half - std::abs(h->labels.u), half - std::abs(h->labels.sp), h->time,
                                   F.alpha - h->time});
    if (slack <= 0.0 || (best && slack <= best->slack)) return;
    best = Cover{id, L, h->labels, h->time, slack};
  });
  return best;
}

bool PreMarkovReport::passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionReport& c) { return c.passed; });
}

const ConditionReport& PreMarkovReport::get(const std::string& name) const {
  for (const auto& c : conditions)
    if (c.name == name) return c;
  throw ConfigError("no condition named " + name);
}

namespace {

struct PairScan {
  std::map<std::uint32_t, std::vector<Interval>> ranges;  // (c) ranges towards later sections
  ConditionReport e{"e", true, std::numeric_limits<double>::infinity(), 0, 0, {}};
  ConditionReport e_prime{"e_prime", true, std::numeric_limits<double>::infinity(), 0, 0, {}};
  std::size_t poles = 0;
};

void record(ConditionReport& c, double margin) {
  ++c.checked;
  c.margin = std::min(c.margin, margin);
  if (!(margin > 0.0)) {
    ++c.failures;
    c.passed = false;
  }
}

PairScan scan_pairs(const PreMarkovFamily& F, const ChartIndex& index, std::uint32_t i) {
  PairScan out;
  const double alpha = F.alpha, R = F.chart_radius();
  const GroupElement& Li = F.D[i].lift;
  index.along(Li, -2.0 * alpha, 2.0 * alpha, pair_reach(R, 2.0 * alpha), [&](std::uint32_t j, const GroupElement& L) {
    if (j == i) return;
    const ChartTransit T = transit(Li, L);
    if (j > i) {
      const TransitRange r = transit_range(T, R, R, R, R);
      if (r.hit) out.ranges[j].push_back({r.t_lo, r.t_hi});
    }
    const auto lt = transit_labels(T, F.B[i].u_labels, F.B[i].sp_labels);
    if (!lt) {
      ++out.poles;
      return;
    }
    const LabelSet ui = label_intersect(lt->u, F.B[j].u_labels);
    if (ui.empty() || label_intersect(lt->sp, F.B[j].sp_labels).empty()) return;
    // Transit times of the points of B_i that land in B_j; monotone in u.
    const Moebius back = T.u_map().inverse();
    const double ta = T.time(back(ui.lo())), tb = T.time(back(ui.hi()));
    const double p_lo = std::min(ta, tb), p_hi = std::max(ta, tb);

    double land = R - std::max(std::abs(lt->u.lo()), std::abs(lt->u.hi()));
    for (double u : {lt->u.lo(), lt->u.hi()})
      for (double sp : {lt->sp.lo(), lt->sp.hi()})
        land = std::min(land, R - std::abs(coords_from_labels(SectionKind::CB, {u, sp}).s));
    if (p_hi >= -alpha && p_lo <= alpha)
      record(out.e, std::min(land, 2.0 * alpha - std::max(std::abs(lt->t_lo), std::abs(lt->t_hi))));
    if (p_hi >= 0.0 && p_lo <= alpha)
      record(out.e_prime, std::min({land, lt->t_lo, 2.0 * alpha - lt->t_hi}));
    if (p_lo <= 0.0 && p_hi >= -alpha)
      record(out.e_prime, std::min({land, -lt->t_hi, 2.0 * alpha + lt->t_lo}));
  });
  return out;
}

double box_diameter(double R) {
  std::vector<GroupElement> pts;
  const int n = 8;
  for (int a = 0; a <= n; ++a)
    for (int b = 0; b <= n; ++b) {
      if (a != 0 && a != n && b != 0 && b != n) continue;
      pts.push_back(unstable_elem(-R + 2.0 * R * a / n) * stable_elem(-R + 2.0 * R * b / n));
    }
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, proxy_dist(pts[i], pts[j]).upper);
  return d;
}

}  // namespace

PreMarkovReport validate_pre_markov(const FuchsianGroup& G, const PreMarkovFamily& F, std::size_t samples,
                                    std::uint64_t seed) {
  PreMarkovReport rep;
  const double alpha = F.alpha, R = F.chart_radius();
  const ChartIndex index = family_index(G, F);
  const std::size_t n = F.size();

  ConditionReport a{"a", true, std::numeric_limits<double>::infinity(), 0, 0, {}};
  for (std::size_t i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : {F.K[i].u_labels.lo(), F.K[i].u_labels.hi()})
      m = std::min(m, F.B[i].u_labels.distance_to_boundary(x) * (F.B[i].u_labels.contains(x) ? 1.0 : -1.0));
    for (double x : {F.K[i].sp_labels.lo(), F.K[i].sp_labels.hi()})
      m = std::min(m, F.B[i].sp_labels.distance_to_boundary(x) * (F.B[i].sp_labels.contains(x) ? 1.0 : -1.0));
    const SectionCoords ext = coordinate_extent(SectionKind::CB, F.B[i].u_labels.hi(), F.B[i].sp_labels.hi());
    m = std::min({m, F.D[i].u_radius - ext.u, F.D[i].s_radius - ext.s});
    record(a, m);
  }
  rep.conditions.push_back(a);

  ConditionReport b{"b", true, 0.0, n, 0, {}};
  b.margin = alpha - box_diameter(R);
  b.passed = b.margin > 0.0;
  b.failures = b.passed ? 0 : n;
  rep.conditions.push_back(b);

  std::vector<PairScan> scans(n);
  parallel_for(n, [&](std::size_t i) { scans[i] = scan_pairs(F, index, static_cast<std::uint32_t>(i)); });

  ConditionReport c{"c", true, 2.0 * alpha, 0, 0, {}};
  ConditionReport e{"e", true, std::numeric_limits<double>::infinity(), 0, 0, {}};
  ConditionReport ep{"e_prime", true, std::numeric_limits<double>::infinity(), 0, 0, {}};
  std::size_t poles = 0;
  for (const PairScan& s : scans) {
    for (const auto& [j, ranges] : s.ranges) {
      // D_i meets phi_[0,2a](D_j) iff some D_i -> D_j transit time lies in [-2a, 0].
      const double margin = std::max(gap_to(ranges, -2.0 * alpha, 0.0, 2.0 * alpha),
                                     gap_to(ranges, 0.0, 2.0 * alpha, 2.0 * alpha));
      record(c, margin);
    }
    for (auto [from, to] : {std::pair{&s.e, &e}, std::pair{&s.e_prime, &ep}}) {
      to->checked += from->checked;
      to->failures += from->failures;
      to->passed = to->passed && from->passed;
      to->margin = std::min(to->margin, from->margin);
    }
    poles += s.poles;
  }
  if (poles > 0) e.note = std::to_string(poles) + " neighbour maps with a pole on B_i skipped";
  rep.conditions.push_back(c);

  // Coverage of X (or of the build region) by phi_[-alpha,0] of the K interiors.
  std::mt19937_64 rng(seed);
  std::vector<GroupElement> pts(samples);
  for (auto& p : pts) p = F.region ? F.region->sample(rng) : sample_haar(G, rng);
  std::vector<double> slack(samples, -1.0);
  parallel_for(samples, [&](std::size_t k) {
    if (auto cov = find_cover(F, index, pts[k])) slack[k] = cov->slack;
  });
  std::size_t hit = 0, thin = 0;
  for (double s : slack) {
    hit += s > 0.0;
    thin += s > 0.0 && s < 1e-6;
  }
  rep.samples = samples;
  rep.coverage = samples ? static_cast<double>(hit) / static_cast<double>(samples) : 1.0;
  ConditionReport d{"d", true, 0.0, samples, samples - hit, {}};
  d.margin = rep.coverage - (1.0 - 1e-3);
  d.passed = d.margin >= 0.0;
  d.note = std::to_string(thin) + " covered samples within 1e-6 of a K edge";
  rep.conditions.push_back(d);

  for (ConditionReport* r : {&e, &ep})
    if (r->checked == 0) r->margin = 0.0, r->note += r->note.empty() ? "no premise met" : "; no premise met";
  rep.conditions.push_back(e);
  rep.conditions.push_back(ep);
  return rep;
}

}  // namespace geoflow
