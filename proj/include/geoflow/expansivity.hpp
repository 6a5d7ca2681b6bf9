#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "geoflow/product.hpp"

namespace geoflow {

// Piecewise-linear reparametrization sampled on a uniform grid.
struct Reparam {
  double t0 = 0.0;
  double step = 0.05;
  std::vector<double> values;

  static Reparam sample(const std::function<double(double)>& s, double lo, double hi, double step = 0.05);
  static Reparam identity(double lo, double hi, double step = 0.05) {
    return sample([](double t) { return t; }, lo, hi, step);
  }

  std::size_t size() const { return values.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * step; }
  double t1() const { return time(values.empty() ? 0 : values.size() - 1); }
  double operator()(double t) const;
};

struct OrbitPair {
  QuotientPoint x;
  QuotientPoint y;
  Reparam reparam;  // over [-L, L]
  double L = 0.0;
  double delta = 0.0;
};

struct ExpansivityConfig {
  double eps = 0.0;
  double rho = 0.0;    // 0 selects eps / 4
  double delta = 0.0;  // 0 selects rho / 8
  double step = 0.05;

  double rho_value() const { return rho > 0.0 ? rho : eps / 4.0; }
  double delta_value() const { return delta > 0.0 ? delta : rho_value() / 8.0; }
};

struct CheckReport {
  std::string check;
  bool passed = false;
  // False when the closeness hypothesis failed; the conclusion is then not asserted.
  bool hypothesis = true;
  double bound = 0.0;
  double measured = 0.0;
  std::vector<std::pair<std::string, double>> params;
  std::string note;

  double margin() const { return bound - measured; }
  double ratio() const { return bound > 0.0 ? measured / bound : 0.0; }
};

std::string to_json_line(const CheckReport& r);

// max over the grid of d_X(phi_t x, phi_{s(t)} y).
double max_separation(const FuchsianGroup& G, const QuotientPoint& x, const QuotientPoint& y, const Reparam& s);

// Throws HypothesisViolated when the pair is not delta-close.
CheckReport check_reparam_bound(const FuchsianGroup& G, const OrbitPair& p, double eps);
CheckReport check_exponential_closing(const FuchsianGroup& G, const OrbitPair& p, double eps);
// Stable and unstable envelopes of the bracket point along [-L, L].
CheckReport check_envelopes(const FuchsianGroup& G, const OrbitPair& p, double eps);

enum class TimeSide { Backward, Forward };
// z = x c_u b_s; closeness on [-L,0] bounds s, on [0,L] bounds u.
CheckReport check_eps0(const FuchsianGroup& G, const QuotientPoint& x, double u, double s, double L, TimeSide side,
                       const ExpansivityConfig& cfg);

// phi_T <x,y>_D against <phi_T x, phi_{s(T)} y>_{D'}; both charts must be CB.
CheckReport check_bracket_transport(const FuchsianGroup& G, const SectionChart& D, const SectionChart& Dp,
                                    const SectionCoords& x, const SectionCoords& y, const Reparam& s,
                                    const ExpansivityConfig& cfg, double tol = 1e-7);

// Largest multiple of the direction (u_dir, s_dir) keeping y = x c_u b_s a_v delta-close to x on [-L, L]
// under s(t) = t - v away from 0.
OrbitPair shadowing_pair(const FuchsianGroup& G, const QuotientPoint& x, double u_dir, double s_dir, double v,
                         double L, const ExpansivityConfig& cfg);

struct TransportCase {
  SectionChart D;
  SectionChart Dp;
  SectionCoords x;
  SectionCoords y;
  Reparam s;
};

// Second chart through phi_T x offset by (du, ds); s(t) linear with s(T) landing phi y on it.
TransportCase transport_case(const FuchsianGroup& G, const SectionChart& D, const SectionCoords& x,
                             const SectionCoords& y, double T, double du, double ds, double step = 0.05);

}  // namespace geoflow
