#include "geoflow/partition_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace geoflow {

using nlohmann::ordered_json;

namespace {

ordered_json matrix_json(const GroupElement& g) { return {g.a(), g.b(), g.c(), g.d()}; }

GroupElement matrix_from(const nlohmann::json& j) {
  const auto e = j.get<std::vector<double>>();
  if (e.size() != 4) throw ConfigError("a matrix needs four entries");
  return GroupElement::from_entries(e[0], e[1], e[2], e[3]);
}

ordered_json labels_json(const LabelSet& s) {
  ordered_json out = ordered_json::array();
  for (const Interval& I : s.intervals()) out.push_back({I.lo, I.hi});
  return out;
}

LabelSet labels_from(const nlohmann::json& j) {
  std::vector<Interval> iv;
  for (const auto& p : j) {
    const auto e = p.get<std::vector<double>>();
    if (e.size() != 2) throw ConfigError("an interval needs two endpoints");
    iv.push_back({e[0], e[1]});
  }
  return LabelSet::from_intervals(std::move(iv));
}

ordered_json chart_json(const SectionChart& D) {
  return {{"lift", matrix_json(D.lift)},
          {"base", matrix_json(D.base.rep)},
          {"base_word", D.base.word},
          {"kind", D.kind == SectionKind::CB ? "CB" : "BC"},
          {"u_radius", D.u_radius},
          {"s_radius", D.s_radius},
          {"alpha", D.alpha}};
}

SectionChart chart_from(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind != "CB" && kind != "BC") throw ConfigError("chart kind must be CB or BC");
  const QuotientPoint base{matrix_from(j.at("base")), j.at("base_word").get<std::vector<int>>()};
  return chart_on_lift(matrix_from(j.at("lift")), base, j.at("u_radius").get<double>(), j.at("s_radius").get<double>(),
                       kind == "CB" ? SectionKind::CB : SectionKind::BC, j.at("alpha").get<double>());
}

ordered_json rect_json(const Rectangle& R) {
  return {{"chart", chart_json(R.chart)}, {"u", labels_json(R.u_labels)}, {"sp", labels_json(R.sp_labels)}};
}

Rectangle rect_from(const nlohmann::json& j) {
  return {chart_from(j.at("chart")), labels_from(j.at("u")), labels_from(j.at("sp"))};
}

}  // namespace

ordered_json partition_json(const FuchsianGroup& G, const RunConfig& cfg, const PipelineResult& r) {
  ordered_json conf = to_json(cfg);
  conf.erase("out");
  ordered_json gens = ordered_json::array();
  for (const Mat2& m : G.spec().generators) gens.push_back({m.a, m.b, m.c, m.d});

  const RefinementState& st = r.refined;
  ordered_json refined = ordered_json::array();
  for (std::size_t j = 0; j < st.size(); ++j) {
    ordered_json E = ordered_json::array();
    if (j < r.sub.charts.size()) {
      const ChartPieces& cp = r.sub.charts[j];
      for (std::size_t k = 0; k < cp.E.size(); ++k)
        E.push_back({{"source", cp.sources[k]}, {"u", labels_json(cp.E[k].u_labels)}, {"sp", labels_json(cp.E[k].sp_labels)}});
    }
    ordered_json c = rect_json(st.C[j]);
    c["E"] = std::move(E);
    c["pieces"] = j < r.sub.charts.size() ? r.sub.charts[j].pieces.size() : 0;
    refined.push_back(std::move(c));
  }

  const MarkovPartition& M = r.partition;
  ordered_json members = ordered_json::array();
  for (std::size_t p = 0; p < M.size(); ++p) {
    ordered_json m = rect_json(M.members[p]);
    m["shift"] = M.shifts[p];
    m["refined_member"] = M.chart[p];
    m["itinerary"] = M.provenance[p];
    members.push_back(std::move(m));
  }
  ordered_json returns = ordered_json::array();
  for (const TransitionTimes& t : M.returns) returns.push_back({{"from", t.from}, {"to", t.to}, {"times", t.times}});

  ordered_json centres = ordered_json::array();
  for (const SectionChart& D : r.pre.D) centres.push_back(matrix_json(D.lift));

  ordered_json out;
  out["tool"] = "geoflow";
  out["version"] = kToolVersion;
  out["config_hash"] = config_hash(cfg);
  out["seed"] = cfg.seed;
  out["config"] = std::move(conf);
  out["group"] = {{"name", G.name()}, {"generators", std::move(gens)}, {"relation", G.spec().relation}};
  out["scales"] = {{"alpha", cfg.alpha},     {"epsilon", r.pre.epsilon}, {"L", st.L},
                   {"T", st.T},              {"N", M.N},                 {"lambda", st.lambda},
                   {"partition_size", 2.0 * M.alpha}};
  out["tolerances"] = {{"hausdorff", cfg.tol},
                       {"boundary", cfg.boundary_tol},
                       {"refinement_steps", st.steps},
                       {"refinement_converged", st.converged},
                       {"increments", st.increments}};
  out["pre_family"] = {{"epsilon", r.pre.epsilon}, {"centres", std::move(centres)}};
  out["refined"] = std::move(refined);
  out["classes"] = {{"count", r.classes.classes.size()}, {"sampled", r.classes.sampled},
                    {"escaped", r.classes.escaped},      {"boundary", r.classes.boundary},
                    {"itineraries", r.classes.itineraries}, {"overlaps", r.classes.overlaps}};
  out["members"] = std::move(members);
  out["adjacency"] = M.adjacency;
  out["returns"] = std::move(returns);
  return out;
}

PartitionFile read_partition(const FuchsianGroup& G, const nlohmann::json& j) {
  PartitionFile f;
  try {
    f.config = config_from_json(j.at("config")).resolved(G);
    f.hash = j.at("config_hash").get<std::string>();
    f.version = j.at("version").get<std::string>();
    const auto& sc = j.at("scales");
    f.epsilon = sc.at("epsilon").get<double>();
    f.lambda = sc.at("lambda").get<double>();
    for (const auto& c : j.at("pre_family").at("centres")) f.centres.push_back(matrix_from(c));
    for (const auto& c : j.at("refined")) {
      RefinedChart rc;
      rc.C = rect_from(c);
      for (const auto& e : c.at("E")) {
        rc.sources.push_back(e.at("source").get<std::uint32_t>());
        rc.E.push_back({rc.C.chart, labels_from(e.at("u")), labels_from(e.at("sp"))});
      }
      rc.pieces = c.at("pieces").get<std::size_t>();
      f.refined.push_back(std::move(rc));
    }
    MarkovPartition& M = f.partition;
    M.N = sc.at("N").get<int>();
    M.L = sc.at("L").get<double>();
    M.alpha = sc.at("alpha").get<double>();
    for (const auto& m : j.at("members")) {
      M.members.push_back(rect_from(m));
      M.shifts.push_back(m.at("shift").get<double>());
      M.chart.push_back(m.at("refined_member").get<std::uint32_t>());
      M.provenance.push_back(m.at("itinerary").get<std::vector<std::uint32_t>>());
    }
    M.adjacency = j.at("adjacency").get<std::vector<std::vector<std::uint8_t>>>();
    for (const auto& t : j.at("returns"))
      M.returns.push_back({t.at("from").get<std::uint32_t>(), t.at("to").get<std::uint32_t>(),
                           t.at("times").get<std::vector<double>>()});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed partition file: ") + e.what());
  }
  const std::size_t m = f.partition.size();
  if (f.partition.adjacency.size() != m) throw ConfigError("adjacency does not match the member count");
  for (const auto& row : f.partition.adjacency) {
    if (row.size() != m) throw ConfigError("adjacency does not match the member count");
    for (auto a : row)
      if (a > 1) throw ConfigError("adjacency entries must be 0 or 1");
  }
  for (std::uint32_t c : f.partition.chart)
    if (c >= f.refined.size()) throw ConfigError("member refers to a missing refined chart");
  return f;
}

PartitionFile load_partition(const FuchsianGroup& G, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return read_partition(G, j);
}

PreMarkovFamily stored_family(const FuchsianGroup& G, const PartitionFile& f) {
  PreMarkovFamily F = make_family(G, f.centres, f.epsilon, f.config.alpha);
  if (f.config.family == FamilyKind::Region) {
    std::mt19937_64 rng(f.config.seed);
    F.region = Region{sample_haar(G, rng), f.config.region_radius, f.config.alpha};
  }
  return F;
}

namespace {

std::string header(const PartitionFile& f) {
  return "# geoflow " + f.version + " config_hash " + f.hash + " seed " + std::to_string(f.config.seed) + "\n";
}

std::string num(double x, const char* fmt = "%.10g") {
  char buf[40];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

}  // namespace

std::string adjacency_csv(const PartitionFile& f) {
  std::string s = header(f);
  for (const auto& row : f.partition.adjacency) {
    for (std::size_t q = 0; q < row.size(); ++q) {
      if (q) s += ',';
      s += row[q] ? '1' : '0';
    }
    s += '\n';
  }
  return s;
}

std::string orbits_csv(const PartitionFile& f, const SymbolicBundle& b) {
  std::string s = header(f) + "word,symbolic_length,r_sum,group_length,residual\n";
  for (const PeriodicOrbit& o : b.orbits) {
    std::string w;
    for (std::size_t k = 0; k < o.word.size(); ++k) w += (k ? " " : "") + std::to_string(o.word[k]);
    s += w + ',' + std::to_string(o.symbolic_length) + ',' + num(o.r_sum, "%.12g") + ',' +
         num(o.group_length, "%.12g") + ',' + num(o.residual, "%.6g") + '\n';
  }
  return s;
}

std::string section_svg(const PartitionFile& f, const PoincareMap& PM, std::size_t p) {
  const MarkovPartition& M = f.partition;
  const Rectangle& R = M.members[p];
  const RefinedChart& rc = f.refined[M.chart[p]];
  const double ku = std::exp(M.shifts[p]), ks = std::exp(-M.shifts[p]);

  struct Box {
    double u0, u1, s0, s1;
  };
  auto boxes = [&](const LabelSet& u, const LabelSet& sp, double su, double ss) {
    std::vector<Box> out;
    for (const Interval& a : u.intervals())
      for (const Interval& b : sp.intervals()) out.push_back({a.lo * su, a.hi * su, b.lo * ss, b.hi * ss});
    return out;
  };
  const auto chart_boxes = boxes(rc.C.u_labels, rc.C.sp_labels, ku, ks);
  std::vector<Box> e_boxes;
  for (const Rectangle& E : rc.E)
    for (const Box& b : boxes(E.u_labels, E.sp_labels, ku, ks)) e_boxes.push_back(b);
  const auto member_boxes = boxes(R.u_labels, R.sp_labels, 1.0, 1.0);

  std::vector<LeafLabels> images;
  if (f.config.plot_returns)
    for (std::uint32_t q = 0; q < M.size(); ++q) {
      if (!M.adjacency[q][p]) continue;
      const Rectangle& Q = M.members[q];
      for (double u : grid_points(Q.u_labels, 8))
        for (double sp : grid_points(Q.sp_labels, 8)) {
          const auto r = PM.forward({q, {u, sp}});
          if (r && r->to.member == p) images.push_back(r->to.labels);
        }
    }

  double u0 = R.u_labels.lo(), u1 = R.u_labels.hi(), s0 = R.sp_labels.lo(), s1 = R.sp_labels.hi();
  for (const Box& b : chart_boxes) u0 = std::min(u0, b.u0), u1 = std::max(u1, b.u1), s0 = std::min(s0, b.s0), s1 = std::max(s1, b.s1);
  const double pad_u = 0.05 * (u1 - u0) + 1e-12, pad_s = 0.05 * (s1 - s0) + 1e-12;
  u0 -= pad_u, u1 += pad_u, s0 -= pad_s, s1 += pad_s;
  const double W = 480.0, H = 480.0;
  auto X = [&](double u) { return num(W * (u - u0) / (u1 - u0), "%.2f"); };
  auto Y = [&](double s) { return num(H * (s1 - s) / (s1 - s0), "%.2f"); };
  auto rect = [&](const Box& b, const char* style) {
    return "<rect x=\"" + X(b.u0) + "\" y=\"" + Y(b.s1) + "\" width=\"" + num(W * (b.u1 - b.u0) / (u1 - u0), "%.2f") +
           "\" height=\"" + num(H * (b.s1 - b.s0) / (s1 - s0), "%.2f") + "\" " + style + "/>\n";
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H + 40 << "\">\n";
  o << "<!-- " << header(f).substr(2, header(f).size() - 3) << " member " << p << " -->\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const Box& b : chart_boxes) o << rect(b, "fill=\"#eeeeee\" stroke=\"#888888\"");
  for (const Box& b : e_boxes) o << rect(b, "fill=\"none\" stroke=\"#3366cc\" stroke-dasharray=\"4 3\"");
  for (const Box& b : member_boxes) o << rect(b, "fill=\"#ffcc66\" fill-opacity=\"0.6\" stroke=\"#cc6600\"");
  for (const LeafLabels& l : images) o << "<circle cx=\"" << X(l.u) << "\" cy=\"" << Y(l.sp) << "\" r=\"1.5\" fill=\"#cc0000\"/>\n";
  o << "<text x=\"4\" y=\"" << H + 16 << "\" font-size=\"12\">member " << p << " on C_" << M.chart[p] << ", shift "
    << num(M.shifts[p], "%.3g") << ", u in [" << num(u0, "%.4g") << ", " << num(u1, "%.4g") << "], s' in ["
    << num(s0, "%.4g") << ", " << num(s1, "%.4g") << "]</text>\n";
  o << "<text x=\"4\" y=\"" << H + 32 << "\" font-size=\"12\">grey C, dashed E, orange member, red first-return images ("
    << images.size() << ")</text>\n";
  o << "</svg>\n";
  return o.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteFailure("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw WriteFailure("write to " + path.string() + " failed");
}

}  // namespace geoflow
