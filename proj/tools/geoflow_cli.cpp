#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "geoflow/partition_io.hpp"

namespace fs = std::filesystem;
using namespace geoflow;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kFailure = 3, kWrite = 4 };

struct Flags {
  std::string config_file, group, family, partition;
  double alpha = 0, epsilon = 0, L = 0, tol = 0, jitter = 0, region_radius = 0, budget = 0;
  int N = 0, k_max = 0;
  std::size_t samples = 0, period_max = 0, grid = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool no_returns = false;
  bool no_subdivide = false;
};

struct Options {
  CLI::Option *group, *family, *alpha, *epsilon, *L, *N, *k_max, *tol, *jitter, *region_radius, *budget, *samples,
      *period_max, *grid, *seed, *out, *no_returns, *no_subdivide;
};

Options add_options(CLI::App& cmd, Flags& f, bool building) {
  Options o{};
  cmd.add_option("--config", f.config_file, "JSON run configuration; flags override it");
  o.out = cmd.add_option("--out", f.out, "output directory");
  o.samples = cmd.add_option("--samples", f.samples, "verification samples");
  o.period_max = cmd.add_option("--period-max", f.period_max, "longest periodic word exported");
  o.no_returns = cmd.add_flag("--no-returns", f.no_returns, "plot without first-return images");
  if (building) {
    o.seed = cmd.add_option("--seed", f.seed, "seed of every randomized step");
    o.group = cmd.add_option("--group", f.group, "'bolza' or a JSON file with generators and relation");
    o.family = cmd.add_option("--family", f.family, "tube, region or full");
    o.alpha = cmd.add_option("--alpha", f.alpha, "section size alpha (default sigma*/10)");
    o.epsilon = cmd.add_option("--epsilon", f.epsilon, "rectangle scale epsilon");
    o.L = cmd.add_option("--L", f.L, "refinement time L");
    o.N = cmd.add_option("--N", f.N, "itinerary depth N (default ceil(L/(2 alpha)) + 1)");
    o.k_max = cmd.add_option("--k-max", f.k_max, "refinement step cap");
    o.tol = cmd.add_option("--tol", f.tol, "Hausdorff tolerance of the refinement");
    o.jitter = cmd.add_option("--jitter", f.jitter, "tube: offset of the section centres in units of epsilon");
    o.region_radius = cmd.add_option("--region-radius", f.region_radius, "region: flow box radius");
    o.budget = cmd.add_option("--budget", f.budget, "region/full: build time budget in seconds, 0 unlimited");
    o.grid = cmd.add_option("--grid", f.grid, "itinerary sample points per axis of each piece");
    o.no_subdivide = cmd.add_flag("--no-subdivide", f.no_subdivide, "skip the E subdivision (negative control)");
  } else {
    cmd.add_option("partition", f.partition, "partition file (default <out>/partition.json)");
  }
  return o;
}

RunConfig file_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  try {
    return config_from_json(nlohmann::json::parse(in), base);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
}

template <class T>
void take(const CLI::Option* o, T& dst, const T& v) {
  if (o && o->count()) dst = v;
}

void apply(const Options& o, const Flags& f, RunConfig& c) {
  take(o.group, c.group, f.group);
  if (o.family && o.family->count()) c.family = family_kind(f.family);
  take(o.alpha, c.alpha, f.alpha);
  take(o.epsilon, c.epsilon, f.epsilon);
  take(o.L, c.L, f.L);
  take(o.N, c.N, f.N);
  take(o.k_max, c.k_max, f.k_max);
  take(o.tol, c.tol, f.tol);
  take(o.jitter, c.jitter, f.jitter);
  take(o.region_radius, c.region_radius, f.region_radius);
  take(o.budget, c.budget_seconds, f.budget);
  take(o.grid, c.grid, f.grid);
  take(o.samples, c.samples, f.samples);
  take(o.period_max, c.period_max, f.period_max);
  take(o.seed, c.seed, f.seed);
  take(o.out, c.out, f.out);
  if (o.no_returns && o.no_returns->count()) c.plot_returns = false;
  if (o.no_subdivide && o.no_subdivide->count()) c.subdivide = false;
}

ordered_json report_json(const ConditionReport& r) {
  return {{"check", r.name},     {"passed", r.passed},     {"margin", r.margin},
          {"checked", r.checked}, {"failures", r.failures}, {"note", r.note}};
}

ordered_json stamp(const RunConfig& c) {
  return {{"tool", "geoflow"}, {"version", kToolVersion}, {"config_hash", config_hash(c)}, {"seed", c.seed}};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw WriteFailure("cannot create " + dir.string() + ": " + ec.message());
}

int cmd_build(const RunConfig& raw) {
  const FuchsianGroup G = load_group(raw.group);
  const RunConfig cfg = raw.resolved(G);
  const PipelineResult r = run_pipeline(G, cfg);
  const fs::path dir(cfg.out);
  ensure_dir(dir);
  write_file(dir / "partition.json", partition_json(G, cfg, r).dump(1) + "\n");

  const MarkovPartition& M = r.partition;
  std::size_t zero_rows = 0, zero_cols = 0;
  for (std::size_t p = 0; p < M.size(); ++p) {
    bool row = false, col = false;
    for (std::size_t q = 0; q < M.size(); ++q) row |= M.adjacency[p][q] != 0, col |= M.adjacency[q][p] != 0;
    zero_rows += !row;
    zero_cols += !col;
  }
  ordered_json rep = stamp(cfg);
  rep["family"] = {{"kind", to_string(cfg.family)}, {"sections", r.pre.size()}, {"epsilon", r.pre.epsilon}};
  rep["refinement"] = {{"steps", r.refined.steps}, {"converged", r.refined.converged}, {"lambda", r.refined.lambda},
                       {"increments", r.refined.increments}};
  rep["subdivision"] = {{"pieces", r.sub.piece_count()}};
  rep["classes"] = {{"sampled", r.classes.sampled},        {"escaped", r.classes.escaped},
                    {"boundary", r.classes.boundary},      {"itineraries", r.classes.itineraries},
                    {"live", r.classes.classes.size()},    {"overlaps", r.classes.overlaps}};
  rep["partition"] = {{"members", M.size()}, {"N", M.N}, {"zero_rows", zero_rows}, {"zero_cols", zero_cols}};
  write_file(dir / "build_report.json", rep.dump(1) + "\n");
  std::cout << "partition with " << M.size() << " members written to " << (dir / "partition.json").string() << "\n";
  return kOk;
}

struct Loaded {
  FuchsianGroup G;
  PartitionFile file;
};

Loaded load(const std::string& path_arg, const RunConfig& overrides, const Options& o, const Flags& f) {
  const fs::path path = path_arg.empty() ? fs::path(overrides.out) / "partition.json" : fs::path(path_arg);
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  std::string group = "bolza";
  if (j.contains("config") && j["config"].contains("group")) group = j["config"]["group"].get<std::string>();
  Loaded L{load_group(group), {}};
  L.file = read_partition(L.G, j);
  // Sample counts and outputs may be overridden; the stored construction parameters and seed stay.
  RunConfig& c = L.file.config;
  take(o.samples, c.samples, f.samples);
  take(o.period_max, c.period_max, f.period_max);
  if (o.no_returns && o.no_returns->count()) c.plot_returns = false;
  c.out = overrides.out;
  return L;
}

int cmd_verify(const Loaded& L) {
  const FuchsianGroup& G = L.G;
  const PartitionFile& f = L.file;
  const RunConfig& cfg = f.config;
  const MarkovPartition& M = f.partition;
  std::vector<ConditionReport> checks;

  const PreMarkovFamily pre = stored_family(G, f);
  const std::size_t cover_n = std::max<std::size_t>(100, cfg.samples / 10);
  const auto pts = coverage_points(G, cfg, cover_n);
  if (cfg.family == FamilyKind::Tube) {
    const ProperReport pr = check_proper(G, ProperFamily{pre.K, cfg.alpha}, cfg.alpha, pts);
    for (ConditionReport c : pr.conditions) {
      c.name = "pre_family." + c.name;
      checks.push_back(std::move(c));
    }
  } else {
    const PreMarkovReport pr = validate_pre_markov(G, pre, cover_n, cfg.seed);
    for (ConditionReport c : pr.conditions) {
      c.name = "pre_family." + c.name;
      checks.push_back(std::move(c));
    }
  }

  const PoincareMap PM(G, M.family());
  const ProperReport proper = check_proper(G, M.family(), 2.0 * M.alpha, pts);
  for (ConditionReport c : proper.conditions) {
    c.name = "partition." + c.name;
    checks.push_back(std::move(c));
  }

  const TransitionCensus census = transition_census(PM, FinalizeConfig{}.census);
  ConditionReport adj{"adjacency", true, 0.0, 0, 0, {}};
  for (std::size_t p = 0; p < M.size(); ++p)
    for (std::size_t q = 0; q < M.size(); ++q) {
      ++adj.checked;
      if (census.adjacency[p][q] != M.adjacency[p][q]) {
        ++adj.failures;
        if (adj.note.size() < 200) adj.note += "A[" + std::to_string(p) + "][" + std::to_string(q) + "] ";
      }
    }
  adj.passed = adj.failures == 0;
  if (!adj.passed) adj.note = "stored entries differ from the transition census: " + adj.note;
  adj.margin = adj.passed ? 0.0 : -static_cast<double>(adj.failures);
  checks.push_back(adj);

  const MarkovReport mr = verify_markov(PM, M.N, cfg.samples, cfg.seed, cfg.boundary_tol);
  ConditionReport mk{"markov", mr.passed(), mr.pass_rate() - mr.threshold,
                     mr.stable_checked + mr.unstable_checked + mr.splice_checked,
                     mr.stable_failed + mr.unstable_failed + mr.splice_failed, {}};
  if (!mr.failures.empty()) mk.note = mr.failures.front();
  checks.push_back(mk);

  for (const ConditionReport& c : structure_checks(G, M, std::max<std::size_t>(20, cfg.samples / 50), cfg.seed))
    checks.push_back(c);

  bool ok = true;
  ordered_json list = ordered_json::array();
  for (const ConditionReport& c : checks) {
    ok = ok && c.passed;
    list.push_back(report_json(c));
  }
  ordered_json rep = stamp(cfg);
  rep["partition_hash"] = f.hash;
  rep["passed"] = ok;
  rep["checks"] = std::move(list);
  rep["markov"] = {{"stable_rate", mr.stable_rate()},
                   {"unstable_rate", mr.unstable_rate()},
                   {"splice_rate", mr.splice_rate()},
                   {"pass_rate", mr.pass_rate()},
                   {"threshold", mr.threshold},
                   {"stable_checked", mr.stable_checked},
                   {"unstable_checked", mr.unstable_checked},
                   {"splice_checked", mr.splice_checked},
                   {"excluded", mr.excluded},
                   {"no_return", mr.no_return},
                   {"boundary_tol", mr.boundary_tol},
                   {"commutation_error", mr.commutation_error},
                   {"note", "closures of U(T_i, T_j) are sampled; points within the boundary tolerance are excluded"}};
  const fs::path dir(cfg.out);
  ensure_dir(dir);
  write_file(dir / "verify_report.json", rep.dump(1) + "\n");
  for (const ConditionReport& c : checks)
    if (!c.passed) std::cerr << "FAILED " << c.name << ": " << c.note << "\n";
  std::cout << (ok ? "all checks passed" : "verification failed") << "\n";
  return ok ? kOk : kFailure;
}

int cmd_export(const Loaded& L) {
  const PartitionFile& f = L.file;
  const PoincareMap PM(L.G, f.partition.family());
  SymbolicConfig sc;
  sc.period_max = f.config.period_max;
  const SymbolicBundle b = export_symbolic(L.G, PM, f.partition, sc);
  const fs::path dir(f.config.out);
  ensure_dir(dir);
  write_file(dir / "adjacency.csv", adjacency_csv(f));
  write_file(dir / "orbits.csv", orbits_csv(f, b));
  std::cout << b.words << " periodic words up to period " << sc.period_max << ", " << b.orbits.size()
            << " closed orbits\n";
  return kOk;
}

int cmd_plot(const Loaded& L) {
  const PartitionFile& f = L.file;
  const PoincareMap PM(L.G, f.partition.family());
  const fs::path dir(f.config.out);
  ensure_dir(dir);
  for (std::size_t p = 0; p < f.partition.size(); ++p)
    write_file(dir / ("section_" + std::to_string(p) + ".svg"), section_svg(f, PM, p));
  std::cout << f.partition.size() << " section plots written\n";
  return kOk;
}

int fail(int code, const std::string& kind, const std::string& message, const std::string& out) {
  const ordered_json rec{{"error", kind}, {"message", message}, {"exit", code}};
  std::cerr << rec.dump() << "\n";
  if (code != kWrite && !out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream(fs::path(out) / "error.json") << rec.dump(1) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov partitions for the geodesic flow on a compact hyperbolic surface"};
  app.require_subcommand(1);
  Flags fb, fv, fe, fp;
  CLI::App* build = app.add_subcommand("build", "build a Markov partition and write partition.json");
  CLI::App* verify = app.add_subcommand("verify", "check a partition file and write verify_report.json");
  CLI::App* exp = app.add_subcommand("export", "write adjacency.csv and orbits.csv");
  CLI::App* plot = app.add_subcommand("plot", "write section_<p>.svg for every member");
  const Options ob = add_options(*build, fb, true);
  const Options ov = add_options(*verify, fv, false);
  const Options oe = add_options(*exp, fe, false);
  const Options op = add_options(*plot, fp, false);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  std::string out = ".";
  try {
    auto configured = [](const Options& o, const Flags& f) {
      RunConfig c;
      if (!f.config_file.empty()) c = file_config(f.config_file, c);
      apply(o, f, c);
      return c;
    };
    if (build->parsed()) {
      const RunConfig c = configured(ob, fb);
      out = c.out;
      return cmd_build(c);
    }
    const Options& o = verify->parsed() ? ov : exp->parsed() ? oe : op;
    const Flags& f = verify->parsed() ? fv : exp->parsed() ? fe : fp;
    const RunConfig c = configured(o, f);
    out = c.out;
    const Loaded L = load(f.partition, c, o, f);
    if (verify->parsed()) return cmd_verify(L);
    if (exp->parsed()) return cmd_export(L);
    return cmd_plot(L);
  } catch (const ConfigError& e) {
    return fail(kConfig, e.kind(), e.what(), out);
  } catch (const InvalidGroup& e) {
    return fail(kConfig, e.kind(), e.what(), out);
  } catch (const WriteFailure& e) {
    return fail(kWrite, e.kind(), e.what(), out);
  } catch (const Error& e) {
    return fail(kFailure, e.kind(), e.what(), out);
  } catch (const std::exception& e) {
    return fail(kFailure, "Error", e.what(), out);
  }
}
