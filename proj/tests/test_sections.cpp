#include <cmath>

#include "doctest.h"
#include "geoflow/sections.hpp"
#include "support.hpp"

using namespace geoflow;
using testsupport::bolza;

namespace {

QuotientPoint random_point(std::mt19937_64& rng) {
  return bolza().reduce(testsupport::random_element(rng, 0.3));
}

}  // namespace

TEST_CASE("section size limits") {
  const auto& G = bolza();
  const double sig = G.sigma_star();
  const QuotientPoint z = G.reduce(GroupElement{});
  CHECK_NOTHROW(make_section(G, z, sig / 20, SectionKind::CB, sig / 20));
  CHECK_THROWS_AS(make_section(G, z, sig / 3, SectionKind::CB, sig / 3), SectionTooLarge);
  CHECK_NOTHROW(make_asym_section(G, z, sig / 10, sig / 20, SectionKind::BC, sig / 10));
  CHECK_THROWS_AS(make_asym_section(G, z, sig / 3, sig / 4, SectionKind::BC, sig / 10), SectionTooLarge);
}

TEST_CASE("section diameter") {
  const auto& G = bolza();
  std::mt19937_64 rng(21);
  const double eps = G.sigma_star() / 20;
  const SectionChart D = make_section(G, random_point(rng), eps, SectionKind::CB, eps);
  std::uniform_real_distribution<double> c(-eps, eps);
  double worst = 0;
  for (int i = 0; i < 300; ++i) {
    const QuotientPoint p = point_at(G, D, {c(rng), c(rng), false}), q = point_at(G, D, {c(rng), c(rng), false});
    worst = std::max(worst, G.quotient_dist(p, q));
  }
  CHECK(worst <= 4 * eps + 1e-9);
}

TEST_CASE("coordinates round trip on both chart kinds") {
  const auto& G = bolza();
  std::mt19937_64 rng(22);
  const double eps = G.sigma_star() / 20;
  std::uniform_real_distribution<double> c(-eps, eps);
  for (auto kind : {SectionKind::CB, SectionKind::BC}) {
    const SectionChart D = make_section(G, random_point(rng), eps, kind, eps);
    const bool primed = kind == SectionKind::BC;
    const SectionCoords origin = coords_of(G, D, D.base);
    CHECK(std::abs(origin.u) + std::abs(origin.s) < 1e-12);
    CHECK(approx_equal(point_at(G, D, {0, 0, primed}).rep, D.base.rep, 1e-12));
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
      const SectionCoords want{c(rng), c(rng), primed};
      const SectionCoords got = coords_of(G, D, point_at(G, D, want));
      worst = std::max({worst, std::abs(got.u - want.u), std::abs(got.s - want.s)});
    }
    CHECK(worst < 1e-9);
    CHECK_THROWS_AS(point_at(G, D, {2 * eps, 0, primed}), CoordsOutOfRange);
    CHECK_THROWS_AS(coords_of(G, D, flow(G, point_at(G, D, {0.5 * eps, 0.2 * eps, primed}), 0.01)), NotOnSection);
  }
}

TEST_CASE("chart kinds are related by the primed transition") {
  const auto& G = bolza();
  std::mt19937_64 rng(23);
  const double eps = G.sigma_star() / 20;
  const QuotientPoint z = random_point(rng);
  const SectionChart S = make_section(G, z, eps, SectionKind::CB, eps);
  const SectionChart T = make_section(G, z, 1.2 * eps, SectionKind::BC, eps);
  std::uniform_real_distribution<double> c(-eps, eps);
  double worst = 0;
  for (int i = 0; i < 500; ++i) {
    const double u = c(rng), s = c(rng);
    const Projection p = project_to_section(G, T, point_at(G, S, {u, s, false}), eps);
    // BC coordinates (s~, u~): s~ equals the CB label s/(1+us) and u~/(1+s~u~) equals u.
    const double st = p.coords.s, ut = p.coords.u;
    worst = std::max({worst, std::abs(st - s / (1 + u * s)), std::abs(ut / (1 + st * ut) - u),
                      std::abs(p.tau - 2 * std::log(1 + u * s))});
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("projection onto a section") {
  const auto& G = bolza();
  std::mt19937_64 rng(24);
  const double eps = G.sigma_star() / 20, alpha = G.sigma_star() / 20;
  const SectionChart D = make_section(G, random_point(rng), eps, SectionKind::CB, alpha);
  const QuotientPoint on = point_at(G, D, {0.3 * eps, -0.6 * eps, false});
  const Projection same = project_to_section(G, D, on, alpha);
  CHECK(std::abs(same.tau) < 1e-12);
  CHECK(approx_equal(same.point.rep, on.rep, 1e-10));
  const Projection back = project_to_section(G, D, flow(G, on, 0.1), alpha);
  CHECK(back.tau == doctest::Approx(-0.1).epsilon(1e-10));
  CHECK(approx_equal(back.point.rep, on.rep, 1e-9));
  CHECK_THROWS_AS(project_to_section(G, D, flow(G, on, 0.5), 0.2), NoIntersection);

  std::uniform_real_distribution<double> c(-eps, eps), t(-alpha, alpha);
  for (int i = 0; i < 300; ++i) {
    const QuotientPoint x = flow(G, point_at(G, D, {c(rng), c(rng), false}), t(rng));
    const Projection p = project_to_section(G, D, x, alpha);
    CHECK(std::abs(p.tau) <= alpha + 1e-12);
    const QuotientPoint landed = flow(G, x, p.tau);
    CHECK_NOTHROW(coords_of(G, D, landed, 1e-9));
  }
}

TEST_CASE("local cross section property") {
  const auto& G = bolza();
  std::mt19937_64 rng(25);
  const double eps = G.sigma_star() / 20, alpha = G.sigma_star() / 20;
  const SectionChart D = make_section(G, random_point(rng), eps, SectionKind::CB, alpha);
  std::uniform_real_distribution<double> c(-eps, eps), t(1e-6, alpha);
  int returns = 0;
  for (int i = 0; i < 1000; ++i) {
    const QuotientPoint x = point_at(G, D, {c(rng), c(rng), false});
    const double dt = (i % 2 ? 1 : -1) * t(rng);
    try {
      coords_of(G, D, flow(G, x, dt), 1e-9);
      ++returns;
    } catch (const NotOnSection&) {
    }
  }
  CHECK(returns == 0);
}

TEST_CASE("flows on the quotient") {
  const auto& G = bolza();
  std::mt19937_64 rng(26);
  for (int i = 0; i < 200; ++i) {
    const QuotientPoint x = random_point(rng);
    CHECK(approx_equal(flow(G, x, 0).rep, x.rep, 1e-12));
    CHECK(G.quotient_dist(flow(G, flow(G, x, 0.7), -0.2), flow(G, x, 0.5)) < 1e-10);
    CHECK(G.quotient_dist(hflow_s(G, x, 0.1), x) <= 0.1 + 1e-12);
    CHECK(G.quotient_dist(hflow_u(G, x, 0.1), x) <= 0.1 + 1e-12);
    const double s0 = 0.05;
    for (double tt = 0; tt <= 5; tt += 0.5) {
      const double d = G.quotient_dist(flow(G, hflow_s(G, x, s0), tt), flow(G, x, tt));
      CHECK(d <= s0 * std::exp(-tt) + 1e-9);
    }
  }
}
