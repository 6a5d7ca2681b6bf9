#include <doctest.h>

#include <cmath>
#include <random>

#include "geoflow/partition_io.hpp"
#include "geoflow/product.hpp"
#include "support.hpp"

using namespace geoflow;
using testsupport::bolza;

namespace {

RunConfig tube_config() { return RunConfig{}.resolved(bolza()); }

const PipelineResult& tube_run() {
  static const PipelineResult r = run_pipeline(bolza(), tube_config());
  return r;
}

const PoincareMap& tube_returns() {
  static const PoincareMap PC(bolza(), tube_run().refined.family(), 2.0 * tube_config().alpha);
  return PC;
}

const PoincareMap& partition_returns() {
  static const PoincareMap PM(bolza(), tube_run().partition.family());
  return PM;
}

std::vector<GroupElement> orbit_points(std::size_t n) { return coverage_points(bolza(), tube_config(), n); }

LabelSet iv(double lo, double hi) { return LabelSet::interval(lo, hi); }

Rectangle box(const Rectangle& like, double u0, double u1, double s0, double s1) {
  return {like.chart, iv(u0, u1), iv(s0, s1)};
}

double area(const Rectangle& R) { return R.u_labels.measure() * R.sp_labels.measure(); }

bool interiors_meet(const Rectangle& a, const Rectangle& b) {
  const LabelSet u = label_intersect(a.u_labels, b.u_labels), s = label_intersect(a.sp_labels, b.sp_labels);
  return !u.empty() && !s.empty() && u.measure() > 0.0 && s.measure() > 0.0;
}

// Members visited by the first n returns from x.
std::vector<std::uint32_t> member_path(const PoincareMap& P, MemberPoint x, int n) {
  std::vector<std::uint32_t> out{x.member};
  for (int k = 0; k < n; ++k) {
    const auto r = P.forward(x);
    if (!r) break;
    x = r->to;
    out.push_back(x.member);
  }
  return out;
}

}  // namespace

TEST_CASE("eps schedule stays below epsilon") {
  const double eps = 0.01, T = 3.5;
  const auto e = eps_schedule(eps, T, 50);
  REQUIRE(e.size() == 51);
  CHECK(e.front() == doctest::Approx(2.0 * eps / 3.0).epsilon(1e-15));
  // Fixed point of e -> e0 + 2 e exp(-T).
  const double limit = e.front() / (1.0 - 2.0 * std::exp(-T));
  for (std::size_t k = 1; k < e.size(); ++k) {
    CHECK(e[k] >= e[k - 1]);
    CHECK(e[k] < eps);
    CHECK(e[k] <= limit * (1 + 1e-15));
  }
  CHECK(e.back() == doctest::Approx(limit).epsilon(1e-12));
}

TEST_CASE("refinement starts from the cores") {
  const auto& G = bolza();
  const PipelineResult& r = tube_run();
  RefineConfig rc;
  rc.k_max = 0;
  const RefinementState st = refine_C(G, r.pre, rc);
  REQUIRE(st.size() == r.pre.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    CHECK(st.C[i].u_labels == r.pre.K[i].u_labels);
    CHECK(st.C[i].sp_labels == r.pre.K[i].sp_labels);
  }
  CHECK(st.steps == 0);
}

TEST_CASE("refined members lie between the cores and the outer rectangles") {
  const PipelineResult& r = tube_run();
  const RefinementState& st = r.refined;
  CHECK(st.converged);
  CHECK(st.T == doctest::Approx(st.L - st.alpha / 2.0));
  CHECK(st.L > std::log(4.0 * st.epsilon / st.lambda));
  for (std::size_t i = 0; i < st.size(); ++i) {
    const Rectangle& C = st.C[i];
    CHECK(C.u_labels.lo() >= -st.epsilon);
    CHECK(C.u_labels.hi() <= st.epsilon);
    CHECK(C.sp_labels.lo() >= -st.epsilon);
    CHECK(C.sp_labels.hi() <= st.epsilon);
    CHECK(label_intersect(C.u_labels, r.pre.K[i].u_labels) == r.pre.K[i].u_labels);
    CHECK(label_intersect(C.sp_labels, r.pre.K[i].sp_labels) == r.pre.K[i].sp_labels);
  }
  for (std::size_t k = 0; k < st.eps_k.size(); ++k) CHECK(st.eps_k[k] < st.epsilon);
  for (std::size_t k = 1; k < st.increments.size(); ++k)
    CHECK(st.increments[k] <= 2.0 * std::exp(-st.T) * st.increments[k - 1] + 1e-9);
}

TEST_CASE("refinement increments contract on a jittered tube") {
  const auto& G = bolza();
  RunConfig cfg = tube_config();
  cfg.jitter = 0.6;
  const PreMarkovFamily F = build_family(G, cfg);
  const RefinementState st = refine_C(G, F);
  REQUIRE(st.converged);
  REQUIRE(!st.increments.empty());
  CHECK(st.increments.front() > 0.0);
  for (std::size_t k = 1; k < st.increments.size(); ++k)
    CHECK(st.increments[k] <= 2.0 * std::exp(-st.T) * st.increments[k - 1] + 1e-9);
}

TEST_CASE("refinement configuration errors") {
  const auto& G = bolza();
  const PreMarkovFamily& F = tube_run().pre;
  RefineConfig rc;
  rc.L = 4.0;
  CHECK_THROWS_AS(refine_C(G, F, rc), ConfigError);
  rc = {};
  rc.lambda = 1e-7;  // ln(4 eps / lambda) is then about 12.9
  CHECK_THROWS_AS(refine_C(G, F, rc), ConfigError);
  rc = {};
  rc.k_max = -1;
  CHECK_THROWS_AS(refine_C(G, F, rc), ConfigError);
  CHECK_THROWS_AS(refine_C(G, PreMarkovFamily{}, {}), ConfigError);
}

TEST_CASE("holonomy carries fibers of neighbours into fibers of the member") {
  const ConditionReport rep = fiber_inclusion_margin(bolza(), tube_run().refined, 36);
  CHECK(rep.checked > 0);
  CHECK(rep.failures == 0);
  CHECK(rep.margin >= 0.0);
}

TEST_CASE("one projection cuts a member into four pieces") {
  const Rectangle& like = tube_run().refined.C[0];
  const Rectangle C = box(like, -1, 1, -1, 1);
  const Rectangle E = box(like, -0.2, 0.5, 0.1, 0.3);
  const auto pieces = e_pieces(C, E);
  double total = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    total += area(pieces[a]);
    for (std::size_t b = a + 1; b < 4; ++b) CHECK_FALSE(interiors_meet(pieces[a], pieces[b]));
  }
  CHECK(total == doctest::Approx(area(C)).epsilon(1e-15));
  CHECK(pieces[0].u_labels == E.u_labels);
  CHECK(pieces[0].sp_labels == E.sp_labels);
  CHECK(label_union(pieces[0].u_labels, pieces[1].u_labels) == C.u_labels);
  CHECK(label_union(pieces[0].sp_labels, pieces[2].sp_labels) == C.sp_labels);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int k = 0; k < 200; ++k) {
    const LeafLabels x{d(rng), d(rng)};
    int in = 0;
    for (const Rectangle& P : pieces) in += P.contains(x);
    CHECK(in >= 1);
  }
}

TEST_CASE("subdivision pieces") {
  const Rectangle& like = tube_run().refined.C[0];
  const Rectangle C = box(like, 0, 10, 0, 10);

  SUBCASE("a single projection covering the member leaves it whole") {
    const std::vector<Rectangle> E{C};
    const auto P = split_pieces(C, E);
    REQUIRE(P.size() == 1);
    CHECK(P[0].u_labels == C.u_labels);
    CHECK(P[0].sp_labels == C.sp_labels);
  }
  SUBCASE("two overlapping corner projections give nine pieces") {
    const std::vector<Rectangle> E{box(like, 0, 6, 0, 6), box(like, 4, 10, 4, 10)};
    const auto P = split_pieces(C, E);
    CHECK(P.size() == 9);
    double total = 0.0;
    for (std::size_t a = 0; a < P.size(); ++a) {
      total += area(P[a]);
      for (std::size_t b = a + 1; b < P.size(); ++b) CHECK_FALSE(interiors_meet(P[a], P[b]));
    }
    CHECK(total == doctest::Approx(100.0));
  }
  SUBCASE("two interior projections give one piece per membership pattern") {
    // u atoms: both, first only, second only, neither; the same for s.
    const std::vector<Rectangle> E{box(like, 1, 5, 1, 5), box(like, 3, 8, 3, 8)};
    CHECK(split_pieces(C, E).size() == 16);
  }
}

TEST_CASE("tube subdivision covers every refined member") {
  const PipelineResult& r = tube_run();
  REQUIRE(r.sub.charts.size() == r.refined.size());
  for (std::size_t j = 0; j < r.sub.charts.size(); ++j) {
    const ChartPieces& cp = r.sub.charts[j];
    CHECK(!cp.E.empty());
    double total = 0.0;
    for (std::size_t a = 0; a < cp.pieces.size(); ++a) {
      total += area(cp.pieces[a]);
      for (std::size_t b = a + 1; b < cp.pieces.size(); ++b) CHECK_FALSE(interiors_meet(cp.pieces[a], cp.pieces[b]));
    }
    CHECK(total == doctest::Approx(area(r.refined.C[j])).epsilon(1e-12));
  }
}

TEST_CASE("a member without transitions cannot be subdivided") {
  const auto& G = bolza();
  const Rectangle lone = tube_run().refined.C[0];
  const PoincareMap P(G, ProperFamily{{lone}, tube_config().alpha}, 2.0 * tube_config().alpha);
  CHECK_THROWS_AS(subdivide_E(P), EmptySubdivision);
}

TEST_CASE("itinerary classes") {
  const PoincareMap& PC = tube_returns();
  const Subdivision& sub = tube_run().sub;

  SUBCASE("depth zero gives the pieces") {
    const ClassReport c = itinerary_classes(PC, sub, 0);
    CHECK(c.classes.size() == sub.piece_count());
    for (const ItineraryClass& k : c.classes) {
      REQUIRE(k.key.size() == 2);
      const Rectangle& P = sub.charts[k.key[0]].pieces[k.key[1]];
      CHECK(k.closure.u_labels == P.u_labels);
      CHECK(k.closure.sp_labels == P.sp_labels);
    }
  }
  SUBCASE("the itinerary count grows with the depth") {
    std::size_t last = 0;
    for (int N : {0, 1, 2, 4}) {
      const ClassReport c = itinerary_classes(PC, sub, N);
      CHECK(c.itineraries >= last);
      CHECK(c.overlaps == 0);
      last = c.itineraries;
    }
  }
}

TEST_CASE("classes are closed under the bracket") {
  const auto& G = bolza();
  const PoincareMap& PC = tube_returns();
  const ClassReport& cr = tube_run().classes;
  const int N = tube_config().N;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> t(0.1, 0.9);
  int checked = 0;
  for (const ItineraryClass& k : cr.classes) {
    const Rectangle& R = k.closure;
    const auto& u = R.u_labels.intervals();
    const auto& s = R.sp_labels.intervals();
    const LeafLabels lx{u.front().lo + t(rng) * u.front().length(), s.front().lo + t(rng) * s.front().length()};
    const LeafLabels ly{u.back().lo + t(rng) * u.back().length(), s.back().lo + t(rng) * s.back().length()};
    const BracketResult b = bracket(G, point_at_labels(G, R.chart, lx), point_at_labels(G, R.chart, ly),
                                    G.sigma_star() / 20.0);
    const LeafLabels lz = labels_of(R.chart.kind, project_to_section(G, R.chart, b.point, 0.1).coords);
    CHECK(std::abs(lz.u - lx.u) < 1e-9);
    CHECK(std::abs(lz.sp - ly.sp) < 1e-9);
    CHECK(R.contains(lz, 1e-9));
    const auto px = member_path(PC, {k.chart, lx}, N), pz = member_path(PC, {k.chart, lz}, N);
    CHECK(px == pz);
    ++checked;
  }
  CHECK(checked == static_cast<int>(cr.classes.size()));
}

TEST_CASE("finalized partition") {
  const auto& G = bolza();
  const RunConfig cfg = tube_config();
  const PipelineResult& r = tube_run();
  const MarkovPartition& M = r.partition;
  REQUIRE(M.size() == r.classes.classes.size());
  CHECK(M.N > M.L / (2.0 * M.alpha));

  for (std::size_t p = 0; p < M.size(); ++p) {
    CHECK(M.shifts[p] > 0.0);
    for (std::size_t q = p + 1; q < M.size(); ++q) CHECK(M.shifts[p] != M.shifts[q]);
    for (const auto a : M.adjacency[p]) CHECK((a == 0 || a == 1));
  }

  const ProperReport proper = check_proper(G, M.family(), 2.0 * M.alpha, orbit_points(500));
  for (const ConditionReport& c : proper.conditions) {
    INFO(c.name << " margin " << c.margin);
    CHECK(c.passed);
  }
  CHECK(proper.get("disjoint").margin > 0.0);

  const TransitionCensus census = transition_census(partition_returns(), FinalizeConfig{}.census);
  CHECK(census.adjacency == M.adjacency);
  for (const TransitionTimes& t : M.returns) {
    CHECK(M.adjacency[t.from][t.to] == 1);
    for (double x : t.times) CHECK(x > 0.0);
  }

  const PoincareMap PC(G, r.refined.family(), 2.0 * cfg.alpha);
  const int too_small = static_cast<int>(std::floor(cfg.L / (2.0 * cfg.alpha)));
  CHECK_THROWS_AS(finalize_markov(G, PC, r.classes, too_small, cfg.L), ConfigError);
  CHECK_THROWS_AS(finalize_markov(G, PC, ClassReport{}, cfg.N, cfg.L), ShiftExhausted);
}

TEST_CASE("Markov property on the tube partition") {
  const MarkovReport rep = verify_markov(partition_returns(), tube_config().N, 10000, 1);
  CHECK(rep.stable_checked > 1000);
  CHECK(rep.unstable_checked > 1000);
  CHECK(rep.splice_checked > 1000);
  CHECK(rep.pass_rate() >= 0.99);
  CHECK(rep.passed());
  CHECK(rep.commutation_error <= 1e-8);
}

TEST_CASE("skipping the subdivision breaks the Markov property") {
  const auto& G = bolza();
  RunConfig cfg = tube_config();
  cfg.subdivide = false;
  const PipelineResult r = run_pipeline(G, cfg);
  CHECK(r.classes.overlaps > 0);
  const PoincareMap PM(G, r.partition.family());
  const MarkovReport rep = verify_markov(PM, cfg.N, 10000, 1);
  CHECK(rep.stable_failed + rep.unstable_failed + rep.splice_failed > 0);
  CHECK_FALSE(rep.passed());
  CHECK(!rep.failures.empty());
}

TEST_CASE("length spectrum of the Bolza group") {
  const auto& G = bolza();
  const auto spec = length_spectrum(G, 3);
  REQUIRE(!spec.empty());
  // Generator traces are 2(1 + sqrt 2).
  const double systole = 2.0 * std::acosh(1.0 + std::sqrt(2.0));
  CHECK(spec.front() == doctest::Approx(systole).epsilon(1e-12));
  CHECK(std::is_sorted(spec.begin(), spec.end()));
  CHECK(nearest_length(spec, systole + 1e-4) == spec.front());
  CHECK(std::isnan(nearest_length({}, 1.0)));
}

TEST_CASE("symbolic export recovers the systole") {
  const auto& G = bolza();
  const MarkovPartition& M = tube_run().partition;
  const double systole = 2.0 * std::acosh(1.0 + std::sqrt(2.0));

  SymbolicConfig sc;
  const SymbolicBundle short_words = export_symbolic(G, partition_returns(), M, sc);
  CHECK(short_words.adjacency == M.adjacency);
  CHECK(short_words.orbits.empty());

  sc.period_max = 16;
  const SymbolicBundle b = export_symbolic(G, partition_returns(), M, sc);
  REQUIRE(b.orbits.size() == 1);
  const PeriodicOrbit& o = b.orbits.front();
  CHECK(o.realized);
  CHECK(o.symbolic_length == 16);
  CHECK(o.r_sum == doctest::Approx(systole).epsilon(1e-8));
  CHECK(o.trace_length == doctest::Approx(systole).epsilon(1e-8));
  CHECK(o.residual <= 1e-3);
  for (std::size_t k = 0; k < o.word.size(); ++k) CHECK(M.adjacency[o.word[k]][o.word[(k + 1) % o.word.size()]] == 1);

  const SymbolicBundle again = export_symbolic(G, partition_returns(), M, sc);
  REQUIRE(again.orbits.size() == 1);
  CHECK(again.orbits.front().word == o.word);
  CHECK(again.orbits.front().r_sum == o.r_sum);
}

TEST_CASE("a single member without a self-loop has no periodic words") {
  const auto& G = bolza();
  MarkovPartition one;
  one.members = {tube_run().partition.members.front()};
  one.shifts = {tube_run().partition.shifts.front()};
  one.alpha = tube_run().partition.alpha;
  one.adjacency = {{0}};
  const PoincareMap PM(G, one.family());
  SymbolicConfig sc;
  sc.period_max = 5;
  const SymbolicBundle b = export_symbolic(G, PM, one, sc);
  CHECK(b.words == 0);
  CHECK(b.orbits.empty());
}

TEST_CASE("the pipeline is deterministic given the seed") {
  const auto& G = bolza();
  const RunConfig cfg = tube_config();
  const PipelineResult again = run_pipeline(G, cfg);
  CHECK(partition_json(G, cfg, again).dump() == partition_json(G, cfg, tube_run()).dump());
}
