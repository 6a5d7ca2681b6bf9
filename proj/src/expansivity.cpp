#include "geoflow/expansivity.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace geoflow {

Reparam Reparam::sample(const std::function<double(double)>& s, double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw ConfigError("reparametrization grid needs lo <= hi and step > 0");
  Reparam r;
  r.t0 = lo;
  const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9));
  r.step = n == 0 ? step : (hi - lo) / static_cast<double>(n);
  r.values.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) r.values.push_back(s(r.time(k)));
  return r;
}

double Reparam::operator()(double t) const {
  if (values.empty()) return t;
  if (values.size() == 1) return values.front();
  const double x = std::clamp((t - t0) / step, 0.0, static_cast<double>(values.size() - 1));
  const auto k = std::min(static_cast<std::size_t>(x), values.size() - 2);
  const double w = x - static_cast<double>(k);
  return (1.0 - w) * values[k] + w * values[k + 1];
}

std::string to_json_line(const CheckReport& r) {
  nlohmann::ordered_json j;
  j["check"] = r.check;
  j["passed"] = r.passed;
  j["hypothesis"] = r.hypothesis;
  j["bound"] = r.bound;
  j["measured"] = r.measured;
  j["margin"] = r.margin();
  for (const auto& [k, v] : r.params) j[k] = v;
  if (!r.note.empty()) j["note"] = r.note;
  return j.dump();
}

double max_separation(const FuchsianGroup& G, const QuotientPoint& x, const QuotientPoint& y, const Reparam& s) {
  double worst = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double t = s.time(k);
    worst = std::max(worst, G.quotient_dist(x.rep * flow_elem(t), y.rep * flow_elem(s.values[k])));
  }
  return worst;
}

CheckReport check_reparam_bound(const FuchsianGroup& G, const OrbitPair& p, double eps) {
  const double sep = max_separation(G, p.x, p.y, p.reparam);
  if (sep > p.delta) throw HypothesisViolated("orbits are not delta-close under the reparametrization");
  double dev = 0.0;
  for (std::size_t k = 0; k < p.reparam.size(); ++k)
    dev = std::max(dev, std::abs(p.reparam.values[k] - p.reparam.time(k)));
  CheckReport r;
  r.check = "reparam_bound";
  r.bound = eps;
  r.measured = dev;
  r.passed = dev <= eps;
  r.params = {{"L", p.L}, {"delta", p.delta}, {"separation", sep}, {"grid_step", p.reparam.step}};
  return r;
}

CheckReport check_exponential_closing(const FuchsianGroup& G, const OrbitPair& p, double eps) {
  CheckReport r;
  r.check = "exponential_closing";
  const double sep = max_separation(G, p.x, p.y, p.reparam);
  r.hypothesis = sep <= p.delta;
  const BracketResult w = bracket(G, p.x, p.y, eps);
  r.bound = 2.0 * eps * std::exp(-p.L);
  r.measured = G.quotient_dist(p.y, flow(G, p.x, w.v));
  r.passed = !r.hypothesis || r.measured < r.bound;
  if (!r.hypothesis) r.note = "closeness hypothesis not met";
  r.params = {{"L", p.L},         {"eps", eps},   {"delta", p.delta}, {"separation", sep},
              {"v", w.v},         {"ratio", r.ratio()}, {"grid_step", p.reparam.step}};
  return r;
}

CheckReport check_envelopes(const FuchsianGroup& G, const OrbitPair& p, double eps) {
  CheckReport r;
  r.check = "bracket_envelopes";
  const double sep = max_separation(G, p.x, p.y, p.reparam);
  r.hypothesis = sep <= p.delta;
  const BracketResult w = bracket(G, p.x, p.y, eps);
  double to_x = 0.0, to_y = 0.0;
  for (std::size_t k = 0; k < p.reparam.size(); ++k) {
    const GroupElement a = flow_elem(p.reparam.time(k));
    const GroupElement wt = w.point.rep * a;
    to_x = std::max(to_x, G.quotient_dist(wt, p.x.rep * a));
    to_y = std::max(to_y, G.quotient_dist(wt, p.y.rep * a));
  }
  r.bound = 1.0;
  r.measured = std::max(to_x / (2.0 * eps), to_y / (3.0 * eps));
  r.passed = !r.hypothesis || r.measured < r.bound;
  if (!r.hypothesis) r.note = "closeness hypothesis not met";
  r.params = {{"L", p.L}, {"eps", eps}, {"stable_envelope", to_x}, {"unstable_envelope", to_y}};
  return r;
}

CheckReport check_eps0(const FuchsianGroup& G, const QuotientPoint& x, double u, double s, double L, TimeSide side,
                       const ExpansivityConfig& cfg) {
  CheckReport r;
  r.check = side == TimeSide::Backward ? "eps0_backward" : "eps0_forward";
  const double rho = cfg.rho_value();
  r.params = {{"L", L}, {"u", u}, {"s", s}, {"rho", rho}, {"eps", cfg.eps}, {"grid_step", cfg.step}};
  r.bound = cfg.eps * std::exp(-L);
  r.measured = side == TimeSide::Backward ? std::abs(s) : std::abs(u);
  if (!(std::abs(u) < G.sigma_star() / 8.0 && std::abs(s) < G.sigma_star() / 8.0)) {
    r.hypothesis = false;
    r.passed = true;
    r.note = "offsets outside sigma*/8";
    return r;
  }
  const QuotientPoint z = G.reduce(x.rep * unstable_elem(u) * stable_elem(s));
  const Reparam grid = side == TimeSide::Backward ? Reparam::identity(-L, 0.0, cfg.step)
                                                  : Reparam::identity(0.0, L, cfg.step);
  const double sep = max_separation(G, x, z, grid);
  r.params.emplace_back("separation", sep);
  r.hypothesis = sep < 3.0 * rho;
  r.passed = !r.hypothesis || r.measured < r.bound;
  if (!r.hypothesis) r.note = "closeness hypothesis not met";
  return r;
}

CheckReport check_bracket_transport(const FuchsianGroup& G, const SectionChart& D, const SectionChart& Dp,
                                    const SectionCoords& x, const SectionCoords& y, const Reparam& s,
                                    const ExpansivityConfig& cfg, double tol) {
  if (D.kind != SectionKind::CB || Dp.kind != SectionKind::CB)
    throw ChartMismatch("bracket transport is stated for CB charts");
  CheckReport r;
  r.check = "bracket_transport";
  const double T = std::abs(s.t0) > std::abs(s.t1()) ? s.t0 : s.t1();
  const double sT = s(T);
  const QuotientPoint px = G.reduce(lift_at(D, x));
  const QuotientPoint py = G.reduce(lift_at(D, y));
  const double sep = max_separation(G, px, py, s);
  r.hypothesis = sep <= cfg.delta_value();

  const SectionBracket near = bracket_in_section(D, x, y);
  const GroupElement lhs = lift_at(D, near.coords) * flow_elem(T);
  const SectionCoords xT = coords_of(G, Dp, flow(G, px, T));
  const SectionCoords yT = coords_of(G, Dp, flow(G, py, sT));
  const SectionBracket far = bracket_in_section(Dp, xT, yT);
  const GroupElement rhs = lift_at(Dp, far.coords);

  r.bound = tol;
  r.measured = G.quotient_dist(lhs, rhs);
  r.passed = !r.hypothesis || r.measured <= r.bound;
  if (!r.hypothesis) r.note = "closeness hypothesis not met";
  r.params = {{"T", T}, {"sT", sT}, {"separation", sep}, {"delta", cfg.delta_value()}, {"grid_step", s.step}};
  return r;
}

OrbitPair shadowing_pair(const FuchsianGroup& G, const QuotientPoint& x, double u_dir, double s_dir, double v,
                         double L, const ExpansivityConfig& cfg) {
  const double delta = cfg.delta_value();
  const double scale = std::max(std::abs(u_dir), std::abs(s_dir));
  if (!(scale > 0.0)) throw ConfigError("direction must be nonzero");
  const Reparam grid = Reparam::identity(-L, L, cfg.step);
  const double half = grid.step / 2.0;
  // Lift-level separation bounds the quotient separation from above.
  auto separation = [&](double lambda) {
    double worst = proxy_norm(unstable_elem(lambda * u_dir) * stable_elem(lambda * s_dir) * flow_elem(v));
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid.time(k);
      if (std::abs(t) < half) continue;
      worst = std::max(worst,
                       proxy_norm(unstable_elem(lambda * u_dir * std::exp(t)) * stable_elem(lambda * s_dir * std::exp(-t))));
    }
    return worst;
  };
  if (!(separation(0.0) < delta)) throw ConfigError("flow shift alone breaks delta-closeness");
  double lo = 0.0, hi = delta / scale;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (separation(mid) <= delta * (1.0 - 1e-6) ? lo : hi) = mid;
  }
  OrbitPair p;
  p.x = x;
  p.y = G.reduce(x.rep * unstable_elem(lo * u_dir) * stable_elem(lo * s_dir) * flow_elem(v));
  p.reparam = Reparam::sample([v, half](double t) { return std::abs(t) < half ? 0.0 : t - v; }, -L, L, cfg.step);
  p.L = L;
  p.delta = delta;
  return p;
}

TransportCase transport_case(const FuchsianGroup& G, const SectionChart& D, const SectionCoords& x,
                             const SectionCoords& y, double T, double du, double ds, double step) {
  if (D.kind != SectionKind::CB) throw ChartMismatch("bracket transport is stated for CB charts");
  TransportCase c;
  c.D = D;
  c.x = x;
  c.y = y;
  const GroupElement xT = lift_at(D, x) * flow_elem(T);
  const GroupElement lift = xT * stable_elem(-ds) * unstable_elem(-du);
  c.Dp = chart_on_lift(lift, G.reduce(lift), D.u_radius, D.s_radius, SectionKind::CB, D.alpha);
  const Projection pr = project_to_section(G, c.Dp, G.reduce(lift_at(D, y) * flow_elem(T)), 1.0);
  const double sT = T + pr.tau;
  const double lo = std::min(0.0, T), hi = std::max(0.0, T);
  c.s = Reparam::sample([T, sT](double t) { return t * sT / T; }, lo, hi, step);
  return c;
}

}  // namespace geoflow
