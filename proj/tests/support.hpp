#pragma once

#include <array>
#include <cmath>
#include <random>

#include "geoflow/fuchsian.hpp"
#include "geoflow/psl2.hpp"

namespace testsupport {

using Raw = std::array<double, 4>;

inline Raw raw_mul(const Raw& x, const Raw& y) {
  return {x[0] * y[0] + x[1] * y[2], x[0] * y[1] + x[1] * y[3], x[2] * y[0] + x[3] * y[2],
          x[2] * y[1] + x[3] * y[3]};
}
inline Raw raw_a(double t) { return {std::exp(t / 2), 0, 0, std::exp(-t / 2)}; }
inline Raw raw_b(double s) { return {1, s, 0, 1}; }
inline Raw raw_c(double u) { return {1, 0, u, 1}; }

// Distance in PSL: min over the two signs.
inline double raw_psl_dist(const Raw& x, const geoflow::GroupElement& g) {
  const auto& m = g.matrix();
  double p = 0, q = 0;
  const double e[4] = {m.a, m.b, m.c, m.d};
  for (int i = 0; i < 4; ++i) {
    p += (x[i] - e[i]) * (x[i] - e[i]);
    q += (x[i] + e[i]) * (x[i] + e[i]);
  }
  return std::sqrt(std::min(p, q));
}

// Gauss-Newton fit of (u, s, t) so that the ordered product matches g up to sign.
// order 0: c b a, order 1: a b c.
inline std::array<double, 3> fit_kan(const geoflow::GroupElement& g, int order) {
  auto product = [order](const std::array<double, 3>& p) {
    return order == 0 ? raw_mul(raw_mul(raw_c(p[0]), raw_b(p[1])), raw_a(p[2]))
                      : raw_mul(raw_mul(raw_a(p[2]), raw_b(p[1])), raw_c(p[0]));
  };
  const auto& m = g.matrix();
  // Sign of the lift that the ordered product can reach (its pivot entry is positive).
  const double sign = order == 0 ? (m.a > 0 ? 1.0 : -1.0) : (m.d > 0 ? 1.0 : -1.0);
  const Raw target{sign * m.a, sign * m.b, sign * m.c, sign * m.d};
  const double pivot = order == 0 ? target[0] : target[3];
  std::array<double, 3> p{0, 0, order == 0 ? 2 * std::log(pivot) : -2 * std::log(pivot)};
  auto residual = [&](const std::array<double, 3>& q) {
    const Raw r = product(q);
    double acc = 0;
    for (int i = 0; i < 4; ++i) acc += (r[i] - target[i]) * (r[i] - target[i]);
    return acc;
  };
  for (int iter = 0; iter < 200; ++iter) {
    const Raw r0 = product(p);
    double res[4], J[4][3];
    for (int i = 0; i < 4; ++i) res[i] = r0[i] - target[i];
    for (int k = 0; k < 3; ++k) {
      auto q = p;
      const double h = 1e-7 * std::max(1.0, std::abs(p[k]));
      q[k] += h;
      const Raw r1 = product(q);
      q[k] -= 2 * h;
      const Raw r2 = product(q);
      for (int i = 0; i < 4; ++i) J[i][k] = (r1[i] - r2[i]) / (2 * h);
    }
    double A[3][3] = {}, rhs[3] = {};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) {
        rhs[k] -= J[i][k] * res[i];
        for (int l = 0; l < 3; ++l) A[k][l] += J[i][k] * J[i][l];
      }
    // Solve the 3x3 normal equations by Cramer's rule.
    auto det3 = [](double M[3][3]) {
      return M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) -
             M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
             M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0]);
    };
    const double D = det3(A);
    double step[3];
    for (int k = 0; k < 3; ++k) {
      double B[3][3];
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) B[r][c] = c == k ? rhs[r] : A[r][c];
      step[k] = det3(B) / D;
    }
    // Damped update: halve the step until the residual does not grow.
    const double before = residual(p);
    double lambda = 1.0;
    std::array<double, 3> trial = p;
    for (int h = 0; h < 60; ++h, lambda *= 0.5) {
      for (int k = 0; k < 3; ++k) trial[k] = p[k] + lambda * step[k];
      if (residual(trial) <= before) break;
    }
    double sz = 0;
    for (int k = 0; k < 3; ++k) sz += std::abs(trial[k] - p[k]);
    p = trial;
    if (sz < 1e-15) break;
  }
  return p;
}

inline geoflow::GroupElement random_element(std::mt19937_64& rng, double min_pivot = 0.1) {
  std::uniform_real_distribution<double> mag(min_pivot, 3.0), ent(-2.0, 2.0), coin(0.0, 1.0);
  const double a = (coin(rng) < 0.5 ? -1.0 : 1.0) * mag(rng);
  const double b = ent(rng), c = ent(rng);
  return geoflow::GroupElement::from_entries(a, b, c, (1.0 + b * c) / a);
}

inline geoflow::GroupElement random_small(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> ent(-scale, scale);
  const double p = ent(rng), q = ent(rng), r = ent(rng);
  return geoflow::matrix_exp({p, q, r, -p});
}

inline const geoflow::FuchsianGroup& bolza() {
  static const geoflow::FuchsianGroup g = geoflow::FuchsianGroup::bolza();
  return g;
}

}  // namespace testsupport
