#include "geoflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <utility>

#include "geoflow/expansivity.hpp"
#include "geoflow/product.hpp"
#include "geoflow/section_index.hpp"

namespace geoflow {

std::string to_string(FamilyKind k) {
  switch (k) {
    case FamilyKind::Tube: return "tube";
    case FamilyKind::Region: return "region";
    case FamilyKind::Full: return "full";
  }
  return "tube";
}

FamilyKind family_kind(const std::string& name) {
  if (name == "tube") return FamilyKind::Tube;
  if (name == "region") return FamilyKind::Region;
  if (name == "full") return FamilyKind::Full;
  throw ConfigError("unknown family '" + name + "' (tube, region or full)");
}

RunConfig RunConfig::resolved(const FuchsianGroup& G) const {
  RunConfig c = *this;
  if (c.alpha == 0.0) c.alpha = G.sigma_star() / 10.0;
  if (!(c.alpha > 0.0) || !(c.alpha < G.sigma_star() / 6.0))
    throw ConfigError("alpha must lie in (0, sigma*/6) = (0, " + std::to_string(G.sigma_star() / 6.0) + ")");
  if (c.epsilon == 0.0 && c.family == FamilyKind::Tube) c.epsilon = c.alpha / 20.0;
  if (c.epsilon < 0.0 || c.epsilon >= c.alpha / 16.0) throw ConfigError("epsilon must lie in [0, alpha/16)");
  if (!(c.L > 4.0)) throw ConfigError("L must exceed 4");
  if (!(c.L - c.alpha / 2.0 > 3.0)) throw ConfigError("T = L - alpha/2 must exceed 3");
  const double floor_N = c.L / (2.0 * c.alpha);
  if (c.N == 0) c.N = static_cast<int>(std::ceil(floor_N)) + 1;
  if (!(c.N > floor_N)) throw ConfigError("N too small: N must exceed L/(2 alpha) = " + std::to_string(floor_N));
  if (c.k_max < 0) throw ConfigError("k_max must be >= 0");
  if (!(c.tol > 0.0) || !(c.boundary_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (c.samples == 0 || c.grid < 2) throw ConfigError("samples must be positive and grid at least 2");
  if (!(c.jitter >= 0.0 && c.jitter < 1.0)) throw ConfigError("jitter must lie in [0, 1)");
  if (!(c.region_radius > 0.0)) throw ConfigError("region radius must be positive");
  if (!(c.budget_seconds >= 0.0)) throw ConfigError("budget must be >= 0");
  return c;
}

nlohmann::ordered_json to_json(const RunConfig& c) {
  return {{"group", c.group},
          {"family", to_string(c.family)},
          {"alpha", c.alpha},
          {"epsilon", c.epsilon},
          {"L", c.L},
          {"N", c.N},
          {"k_max", c.k_max},
          {"tol", c.tol},
          {"boundary_tol", c.boundary_tol},
          {"jitter", c.jitter},
          {"region_radius", c.region_radius},
          {"samples", c.samples},
          {"grid", c.grid},
          {"period_max", c.period_max},
          {"seed", c.seed},
          {"budget_seconds", c.budget_seconds},
          {"out", c.out},
          {"plot_returns", c.plot_returns},
          {"subdivide", c.subdivide}};
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "group") c.group = v.get<std::string>();
      else if (key == "family") c.family = family_kind(v.get<std::string>());
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "epsilon") c.epsilon = v.get<double>();
      else if (key == "L") c.L = v.get<double>();
      else if (key == "N") c.N = v.get<int>();
      else if (key == "k_max") c.k_max = v.get<int>();
      else if (key == "tol") c.tol = v.get<double>();
      else if (key == "boundary_tol") c.boundary_tol = v.get<double>();
      else if (key == "jitter") c.jitter = v.get<double>();
      else if (key == "region_radius") c.region_radius = v.get<double>();
      else if (key == "samples") c.samples = v.get<std::size_t>();
      else if (key == "grid") c.grid = v.get<std::size_t>();
      else if (key == "period_max") c.period_max = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "budget_seconds") c.budget_seconds = v.get<double>();
      else if (key == "out") c.out = v.get<std::string>();
      else if (key == "plot_returns") c.plot_returns = v.get<bool>();
      else if (key == "subdivide") c.subdivide = v.get<bool>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 1469598103934665603ULL;
  nlohmann::ordered_json j = to_json(c);
  j.erase("out");
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FuchsianGroup load_group(const std::string& spec) {
  if (spec == "bolza") return FuchsianGroup::bolza();
  std::ifstream in(spec);
  if (!in) throw ConfigError("group must be 'bolza' or a readable JSON file: " + spec);
  GroupSpec gs;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    gs.name = j.value("name", std::string("custom"));
    for (const auto& g : j.at("generators")) {
      const auto e = g.get<std::vector<double>>();
      if (e.size() != 4) throw ConfigError("a generator needs four entries a, b, c, d");
      gs.generators.push_back({e[0], e[1], e[2], e[3]});
    }
    gs.relation = j.at("relation").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad group file: ") + e.what());
  }
  return FuchsianGroup::from_spec(gs);
}

GroupElement shortest_generator(const FuchsianGroup& G) {
  const auto letters = G.alphabet();
  return *std::min_element(letters.begin(), letters.end(), [](const GroupElement& a, const GroupElement& b) {
    return translation_length(a) < translation_length(b);
  });
}

namespace {

Region region_of(const FuchsianGroup& G, const RunConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return Region{sample_haar(G, rng), cfg.region_radius, cfg.alpha};
}

}  // namespace

PreMarkovFamily build_family(const FuchsianGroup& G, const RunConfig& cfg) {
  if (cfg.family == FamilyKind::Tube)
    return closed_orbit_family(G, shortest_generator(G), cfg.alpha, cfg.epsilon, cfg.jitter, cfg.seed);
  PreMarkovConfig pc;
  pc.alpha = cfg.alpha;
  pc.epsilon = cfg.epsilon;
  pc.seed = cfg.seed;
  pc.budget_seconds = cfg.budget_seconds;
  if (cfg.family == FamilyKind::Region) {
    pc.region = region_of(G, cfg);
    pc.net_points = 2000;
    pc.batch = 5000;
    pc.uncovered_target = 1e-4;
  }
  return build_pre_markov(G, pc);
}

PipelineResult run_pipeline(const FuchsianGroup& G, const RunConfig& cfg) {
  return run_pipeline(G, cfg, build_family(G, cfg));
}

PipelineResult run_pipeline(const FuchsianGroup& G, const RunConfig& cfg, PreMarkovFamily pre) {
  PipelineResult r;
  r.pre = std::move(pre);
  RefineConfig rc;
  rc.L = cfg.L;
  rc.k_max = cfg.k_max;
  rc.tol = cfg.tol;
  rc.seed = cfg.seed;
  r.refined = refine_C(G, r.pre, rc);
  const PoincareMap PC(G, r.refined.family(), 2.0 * cfg.alpha);
  r.sub = cfg.subdivide ? subdivide_E(PC) : undivided(r.refined.family());
  ClassConfig cc;
  cc.grid = cfg.grid;
  cc.strict = cfg.subdivide;
  r.classes = itinerary_classes(PC, r.sub, cfg.N, cc);
  FinalizeConfig fc;
  fc.seed = cfg.seed;
  r.partition = finalize_markov(G, PC, r.classes, cfg.N, cfg.L, fc);
  return r;
}

std::vector<GroupElement> coverage_points(const FuchsianGroup& G, const RunConfig& cfg, std::size_t n) {
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<GroupElement> pts;
  pts.reserve(n);
  if (cfg.family == FamilyKind::Tube) {
    const GroupElement gamma = shortest_generator(G);
    const GroupElement g0 = axis_frame(gamma);
    std::uniform_real_distribution<double> along(0.0, translation_length(gamma));
    for (std::size_t k = 0; k < n; ++k) pts.push_back(g0 * flow_elem(along(rng)));
  } else if (cfg.family == FamilyKind::Region) {
    const Region R = region_of(G, cfg);
    for (std::size_t k = 0; k < n; ++k) pts.push_back(R.sample(rng));
  } else {
    for (std::size_t k = 0; k < n; ++k) pts.push_back(sample_haar(G, rng));
  }
  return pts;
}

namespace {

struct Tally {
  ConditionReport rep;
  double worst = 0.0;

  Tally(std::string name, double bound) : rep{std::move(name), true, bound, 0, 0, {}}, bound_(bound) {}

  void add(double measured) {
    ++rep.checked;
    worst = std::max(worst, measured);
    if (!(measured <= bound_)) ++rep.failures;
  }
  ConditionReport done() {
    rep.margin = bound_ - worst;
    rep.passed = rep.failures == 0 && rep.checked > 0;
    if (rep.checked == 0) rep.note = "nothing sampled";
    return rep;
  }

 private:
  double bound_;
};

double draw_in(const LabelSet& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x = s.lo() + unit(rng) * (s.hi() - s.lo());
  if (s.contains(x)) return x;
  double best = s.lo(), gap = std::numeric_limits<double>::infinity();
  for (const Interval& I : s.intervals()) {
    const double y = std::clamp(x, I.lo, I.hi);
    if (std::abs(y - x) < gap) gap = std::abs(y - x), best = y;
  }
  return best;
}

}  // namespace

std::vector<ConditionReport> structure_checks(const FuchsianGroup& G, const MarkovPartition& M, std::size_t samples,
                                              std::uint64_t seed) {
  std::vector<ConditionReport> out;
  if (M.size() == 0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, M.size() - 1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double eps = G.sigma_star() / 20.0;

  Tally ident("bracket_identities", 1e-9), closure("rectangle_closure", 1e-9);
  for (std::size_t k = 0; k < samples; ++k) {
    const Rectangle& R = M.members[pick(rng)];
    auto point = [&] {
      const LeafLabels l{draw_in(R.u_labels, rng), draw_in(R.sp_labels, rng)};
      return std::pair{l, point_at_labels(G, R.chart, l)};
    };
    const auto [lx, x] = point();
    const auto [ly, y] = point();
    const auto [lw, w] = point();
    const BracketResult xy = bracket(G, x, y, eps);
    const QuotientPoint xw = bracket(G, x, w, eps).point;
    ident.add(G.quotient_dist(bracket(G, xy.point, w, eps).point, xw));
    ident.add(G.quotient_dist(bracket(G, x, bracket(G, y, w, eps).point, eps).point, xw));
    const Projection p = project_to_section(G, R.chart, xy.point, 0.1);
    const LeafLabels l = labels_of(R.chart.kind, p.coords);
    closure.add(std::max(std::abs(l.u - lx.u), std::abs(l.sp - ly.sp)));
  }
  out.push_back(ident.done());
  out.push_back(closure.done());

  ExpansivityConfig ec;
  ec.eps = G.sigma_star() / 10.0;
  Tally transport("bracket_transport", 1e-7);
  const std::size_t few = std::max<std::size_t>(1, samples / 10);
  for (std::size_t k = 0; k < few; ++k) {
    const Rectangle& R = M.members[pick(rng)];
    const SectionCoords x = coords_from_labels(R.chart.kind, {draw_in(R.u_labels, rng), draw_in(R.sp_labels, rng)});
    const double T = 2.0;
    const double scale = ec.delta_value() * std::exp(-T) * 0.3;
    const SectionCoords y{x.u + scale * unit(rng), x.s + scale * unit(rng), false};
    const TransportCase c =
        transport_case(G, R.chart, x, y, T, 0.2 * R.chart.u_radius * unit(rng), 0.2 * R.chart.s_radius * unit(rng));
    const CheckReport r = check_bracket_transport(G, c.D, c.Dp, c.x, c.y, c.s, ec);
    transport.add(r.hypothesis ? r.measured : std::numeric_limits<double>::infinity());
  }
  out.push_back(transport.done());

  // Ratio of the closing distance to its bound 2 eps e^{-L}.
  Tally closing("exponential_closing", 1.0);
  for (double L : {2.0, 4.0, 6.0})
    for (std::size_t k = 0; k < few; ++k) {
      const Rectangle& R = M.members[pick(rng)];
      const OrbitPair p = shadowing_pair(G, R.chart.base, unit(rng), unit(rng), 0.2 * ec.delta_value() * unit(rng), L, ec);
      const CheckReport r = check_exponential_closing(G, p, ec.eps);
      closing.add(r.hypothesis ? r.ratio() : std::numeric_limits<double>::infinity());
    }
  out.push_back(closing.done());
  return out;
}

}  // namespace geoflow
