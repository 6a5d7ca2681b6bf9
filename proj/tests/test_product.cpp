#include <cmath>

#include "doctest.h"
#include "geoflow/product.hpp"
#include "support.hpp"

using namespace geoflow;
using testsupport::bolza;

namespace {

QuotientPoint near(const QuotientPoint& z, std::mt19937_64& rng, double scale) {
  return bolza().reduce(z.rep * testsupport::random_small(rng, scale));
}

}  // namespace

TEST_CASE("global bracket") {
  const auto& G = bolza();
  std::mt19937_64 rng(31);
  const double eps = G.sigma_star() / 20;
  const QuotientPoint x = G.reduce(testsupport::random_element(rng, 0.3));
  const BracketResult self = bracket(G, x, x, eps);
  CHECK(G.quotient_dist(self.point, x) < 1e-12);
  CHECK(std::abs(self.v) + std::abs(self.s) + std::abs(self.u) < 1e-12);

  const QuotientPoint e = G.reduce(GroupElement{});
  const BracketResult r = bracket(G, e, G.reduce(unstable_elem(0.1)), 0.5);
  CHECK(std::abs(r.v) < 1e-14);
  CHECK(std::abs(r.s) < 1e-14);
  CHECK(r.u == doctest::Approx(0.1).epsilon(1e-14));
  // y lies on the unstable leaf of x, so the bracket is x itself.
  CHECK(G.quotient_dist(r.point, e) < 1e-12);

  CHECK_THROWS_AS(bracket(G, x, flow(G, x, 0.2), eps), TooFarApart);

  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const QuotientPoint a = G.reduce(testsupport::random_element(rng, 0.3));
    const QuotientPoint b = near(a, rng, bracket_threshold(eps) / 3);
    const BracketResult br = bracket(G, a, b, eps);
    const GroupElement hb = G.nearest_translate(a.rep, b.rep).gamma * b.rep;
    worst = std::max(worst, G.quotient_dist(br.point, G.reduce(hb * unstable_elem(-br.u))));
    CHECK(std::abs(br.v) <= eps);
    CHECK(std::abs(br.s) <= eps);
    CHECK(std::abs(br.u) <= eps);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("bracket identities") {
  const auto& G = bolza();
  std::mt19937_64 rng(32);
  const double eps = G.sigma_star() / 20;
  const double d2 = nested_bracket_threshold(eps);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const QuotientPoint z = G.reduce(testsupport::random_element(rng, 0.3));
    const QuotientPoint x = near(z, rng, d2 / 5), y = near(z, rng, d2 / 5), w = near(z, rng, d2 / 5),
                        v = near(z, rng, d2 / 5);
    const QuotientPoint xy = bracket(G, x, y, eps).point;
    const QuotientPoint xw = bracket(G, x, w, eps).point;
    worst = std::max(worst, G.quotient_dist(bracket(G, xy, w, eps).point, xw));
    worst = std::max(worst, G.quotient_dist(bracket(G, x, bracket(G, y, w, eps).point, eps).point, xw));
    const QuotientPoint vw = bracket(G, v, w, eps).point;
    const QuotientPoint xv = bracket(G, x, v, eps).point;
    worst = std::max(worst, G.quotient_dist(bracket(G, xv, vw, eps).point, xw));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("on-section bracket formula") {
  const auto& G = bolza();
  std::mt19937_64 rng(33);
  const double r = G.sigma_star() / 80;
  const QuotientPoint z = G.reduce(testsupport::random_element(rng, 0.3));
  const SectionChart D = make_section(G, z, r, SectionKind::CB, r);

  const SectionCoords x{0.01, -0.02, false};
  const SectionBracket same = bracket_in_section(D, x, x);
  CHECK(same.coords.u == x.u);
  CHECK(same.coords.s == doctest::Approx(x.s).epsilon(1e-15));
  CHECK(std::abs(same.v) < 1e-15);
  CHECK(std::abs(same.u) < 1e-15);

  const SectionChart wide = chart_on_lift(z.rep, z, 0.2, 0.2, SectionKind::CB, 0.2);
  const SectionBracket ex = bracket_in_section(wide, {0, 0, false}, {0.1, 0.05, false});
  CHECK(ex.s == doctest::Approx(0.05 * 1.005).epsilon(1e-12));
  CHECK(ex.u == doctest::Approx(-0.1 / 1.005).epsilon(1e-12));
  CHECK(ex.v == doctest::Approx(-2 * std::log(1.005)).epsilon(1e-12));
  CHECK(ex.coords.s == doctest::Approx(0.05 / 1.005).epsilon(1e-12));
  CHECK(ex.coords.s == doctest::Approx(0.049751).epsilon(1e-5));

  // Dual route: global bracket of the two points, projected back to an enlarged chart.
  std::uniform_real_distribution<double> c(-r, r);
  double worst = 0;
  for (auto kind : {SectionKind::CB, SectionKind::BC}) {
    const SectionChart Dk = chart_on_lift(z.rep, z, r, r, kind, r);
    const SectionChart bigk = chart_on_lift(z.rep, z, 8 * r, 8 * r, kind, r);
    const bool primed = kind == SectionKind::BC;
    for (int i = 0; i < 1000; ++i) {
      const SectionCoords a{c(rng), c(rng), primed}, b{c(rng), c(rng), primed};
      const SectionBracket f = bracket_in_section(Dk, a, b);
      const BracketResult g = bracket(G, point_at(G, Dk, a), point_at(G, Dk, b), 12 * r);
      const Projection p = project_to_section(G, bigk, g.point, 4 * r);
      worst = std::max({worst, std::abs(p.coords.u - f.coords.u), std::abs(p.coords.s - f.coords.s)});
      if (kind == SectionKind::CB) worst = std::max(worst, std::abs(f.v - g.v));
    }
  }
  CHECK(worst < 1e-9);

  CHECK_THROWS_AS(bracket_in_section(wide, {0, 0, false}, {0.0, 0.1, true}), ChartMismatch);
  const SectionChart huge = chart_on_lift(z.rep, z, 20, 20, SectionKind::CB, 0.1);
  CHECK_THROWS_AS(bracket_in_section(huge, {0, 0, false}, {10, -0.1, false}), DenominatorNearZero);
}

TEST_CASE("on-section bracket fixes fibres") {
  const auto& G = bolza();
  const double r = G.sigma_star() / 40;
  const QuotientPoint z = G.reduce(GroupElement{});
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> c(-r, r);
  for (auto kind : {SectionKind::CB, SectionKind::BC}) {
    const SectionChart D = chart_on_lift(z.rep, z, r, r, kind, r);
    for (int i = 0; i < 500; ++i) {
      const LeafLabels lx{c(rng), c(rng)};
      const SectionCoords x = coords_from_labels(kind, lx);
      // y on the stable fibre of x shares the u label.
      const SectionCoords ys = coords_from_labels(kind, {lx.u, c(rng)});
      const SectionCoords a = bracket_in_section(D, x, ys).coords;
      CHECK(std::abs(a.u - ys.u) + std::abs(a.s - ys.s) < 1e-10);
      // y on the unstable fibre of x shares the sp label.
      const SectionCoords yu = coords_from_labels(kind, {c(rng), lx.sp});
      const SectionCoords b = bracket_in_section(D, yu, x).coords;
      CHECK(std::abs(b.u - yu.u) + std::abs(b.s - yu.s) < 1e-10);
    }
  }
}

TEST_CASE("bracket depends continuously on its arguments") {
  const auto& G = bolza();
  const double r = G.sigma_star() / 40;
  const QuotientPoint z = G.reduce(GroupElement{});
  const SectionChart D = chart_on_lift(z.rep, z, r, r, SectionKind::CB, r);
  const double h = r / 50;
  double worst = 0;
  for (double ux = -r; ux <= r; ux += r / 5)
    for (double sy = -r; sy <= r; sy += r / 5) {
      const SectionCoords x{ux, 0.3 * r, false}, y{-0.2 * r, sy, false};
      const SectionCoords base = bracket_in_section(D, x, y).coords;
      const SectionCoords dx = bracket_in_section(D, {ux + h, 0.3 * r, false}, y).coords;
      const SectionCoords dy = bracket_in_section(D, x, {-0.2 * r, sy + h, false}).coords;
      worst = std::max({worst, std::hypot(dx.u - base.u, dx.s - base.s) / h,
                        std::hypot(dy.u - base.u, dy.s - base.s) / h});
    }
  CHECK(worst <= 10);
}
