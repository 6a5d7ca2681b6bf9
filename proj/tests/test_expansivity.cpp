#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <random>

#include "geoflow/expansivity.hpp"
#include "support.hpp"

using namespace geoflow;
using testsupport::bolza;

namespace {

ExpansivityConfig config_for(const FuchsianGroup& G) {
  ExpansivityConfig cfg;
  cfg.eps = G.sigma_star() / 10.0;
  return cfg;
}

QuotientPoint random_point(const FuchsianGroup& G, std::mt19937_64& rng) {
  return G.reduce(testsupport::random_element(rng, 0.3));
}

}  // namespace

TEST_CASE("reparametrization grid interpolates linearly") {
  const Reparam r = Reparam::sample([](double t) { return 2.0 * t; }, -1.0, 1.0, 0.1);
  CHECK(r.size() == 21);
  CHECK(r(0.25) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r(-0.93) == doctest::Approx(-1.86).epsilon(1e-12));
  CHECK(r(5.0) == doctest::Approx(2.0));
  CHECK(r.t1() == doctest::Approx(1.0));
}

TEST_CASE("reparametrization bound") {
  const auto& G = bolza();
  const auto cfg = config_for(G);
  std::mt19937_64 rng(11);
  const QuotientPoint x = random_point(G, rng);

  OrbitPair same{x, x, Reparam::identity(-3, 3), 3.0, cfg.delta_value()};
  const CheckReport r0 = check_reparam_bound(G, same, cfg.eps);
  CHECK(r0.passed);
  CHECK(r0.measured == 0.0);

  OrbitPair shifted{x, flow(G, x, 0.001), Reparam::identity(-3, 3), 3.0, cfg.delta_value()};
  const CheckReport r1 = check_reparam_bound(G, shifted, cfg.eps);
  CHECK(r1.passed);
  CHECK(r1.measured <= cfg.eps);
  CHECK(r1.params[2].second == doctest::Approx(0.001 / std::sqrt(2.0)).epsilon(1e-6));

  const double eps = cfg.eps;
  OrbitPair adversarial{x, x, Reparam::sample([eps](double t) { return t + 2 * eps; }, -3, 3), 3.0,
                        cfg.delta_value()};
  CHECK_THROWS_AS(check_reparam_bound(G, adversarial, cfg.eps), HypothesisViolated);
}

TEST_CASE("shadowing pairs are delta-close and extremal") {
  const auto& G = bolza();
  const auto cfg = config_for(G);
  std::mt19937_64 rng(12);
  for (double L : {2.0, 5.0}) {
    const QuotientPoint x = random_point(G, rng);
    const OrbitPair p = shadowing_pair(G, x, 0.7, -0.4, 0.3 * cfg.delta_value(), L, cfg);
    const double sep = max_separation(G, p.x, p.y, p.reparam);
    CHECK(sep <= cfg.delta_value());
    CHECK(sep >= 0.99 * cfg.delta_value());
    CHECK(check_reparam_bound(G, p, cfg.eps).passed);
  }
}

TEST_CASE("exponential closing") {
  const auto& G = bolza();
  const auto cfg = config_for(G);
  std::mt19937_64 rng(13);
  const QuotientPoint x = random_point(G, rng);

  SUBCASE("exact flow shift") {
    const double v = 0.5 * cfg.delta_value();
    OrbitPair p{x, flow(G, x, v),
                Reparam::sample([v](double t) { return std::abs(t) < 0.025 ? 0.0 : t - v; }, -4, 4), 4.0,
                cfg.delta_value()};
    const CheckReport r = check_exponential_closing(G, p, cfg.eps);
    CHECK(r.hypothesis);
    CHECK(r.measured < 1e-10);
    CHECK(r.passed);
  }

  SUBCASE("zero length window") {
    const OrbitPair p = shadowing_pair(G, x, 1.0, 1.0, 0.0, 0.0, cfg);
    const CheckReport r = check_exponential_closing(G, p, cfg.eps);
    CHECK(r.bound == doctest::Approx(2 * cfg.eps));
    CHECK(r.passed);
  }

  SUBCASE("decay sweep") {
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    std::vector<double> Ls, logs;
    for (double L : {2.0, 4.0, 6.0}) {
      double mean_log = 0.0;
      const int pairs = 6;
      for (int i = 0; i < pairs; ++i) {
        const QuotientPoint xi = random_point(G, rng);
        const OrbitPair p = shadowing_pair(G, xi, dir(rng), dir(rng), 0.2 * cfg.delta_value() * dir(rng), L, cfg);
        const CheckReport r = check_exponential_closing(G, p, cfg.eps);
        REQUIRE(r.hypothesis);
        CHECK(r.ratio() <= 1.0);
        // Step 3 of the closing argument: the distance is at most |s| + |u| of the bracket offsets.
        const BracketResult w = bracket(G, p.x, p.y, cfg.eps);
        CHECK(r.measured <= std::abs(w.s) + std::abs(w.u) + 1e-12);
        mean_log += std::log(r.measured) / pairs;
      }
      Ls.push_back(L);
      logs.push_back(mean_log);
    }
    const double slope = (logs[2] - logs[0]) / (Ls[2] - Ls[0]);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.15));
  }
}

TEST_CASE("bracket envelopes and long windows") {
  const auto& G = bolza();
  std::mt19937_64 rng(14);
  ExpansivityConfig cfg;
  cfg.eps = G.sigma_star() / 20.0;
  for (int i = 0; i < 4; ++i) {
    const QuotientPoint x = random_point(G, rng);
    const OrbitPair p = shadowing_pair(G, x, 0.3 + 0.1 * i, 0.8 - 0.2 * i, 0.1 * cfg.delta_value(), 10.0, cfg);
    const CheckReport closing = check_exponential_closing(G, p, cfg.eps);
    CHECK(closing.hypothesis);
    CHECK(closing.measured < 1e-3);
    const CheckReport env = check_envelopes(G, p, cfg.eps);
    CHECK(env.hypothesis);
    CHECK(env.passed);
  }
}

TEST_CASE("local orbit lemma") {
  const auto& G = bolza();
  const auto cfg = config_for(G);
  std::mt19937_64 rng(15);
  const QuotientPoint x = random_point(G, rng);
  const double L = 3.0;

  const CheckReport vacuous = check_eps0(G, x, 0.0, 0.0, L, TimeSide::Backward, cfg);
  CHECK(vacuous.passed);
  CHECK(vacuous.measured == 0.0);

  const double small = 0.5 * cfg.eps * std::exp(-L);
  const CheckReport back = check_eps0(G, x, 0.0, small, L, TimeSide::Backward, cfg);
  CHECK(back.hypothesis);
  CHECK(back.passed);
  const CheckReport fwd = check_eps0(G, x, small, 0.0, L, TimeSide::Forward, cfg);
  CHECK(fwd.hypothesis);
  CHECK(fwd.passed);

  const CheckReport forced = check_eps0(G, x, 0.0, cfg.eps, L, TimeSide::Backward, cfg);
  CHECK_FALSE(forced.hypothesis);
  CHECK(forced.measured > forced.bound);

  // Sweep: whenever closeness holds the offset bound holds.
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  for (int i = 0; i < 40; ++i) {
    const double s = off(rng) * cfg.eps * std::exp(-L) * 1.5;
    const double u = off(rng) * 0.01;
    const CheckReport r = check_eps0(G, x, u, s, L, TimeSide::Backward, cfg);
    CHECK(r.passed);
  }
}

TEST_CASE("bracket transport") {
  const auto& G = bolza();
  const auto cfg = config_for(G);
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> off(-1.0, 1.0);

  for (double T : {2.0, -2.0}) {
    CAPTURE(T);
    const QuotientPoint z = random_point(G, rng);
    const SectionChart D = make_section(G, z, cfg.eps, SectionKind::CB, 0.1);

    const SectionCoords x{0.3 * cfg.eps, -0.2 * cfg.eps, false};
    const TransportCase same = transport_case(G, D, x, x, T, 0.1 * cfg.eps, 0.05 * cfg.eps);
    const CheckReport r0 = check_bracket_transport(G, same.D, same.Dp, same.x, same.y, same.s, cfg);
    CHECK(r0.passed);
    CHECK(r0.measured < 1e-12);

    int checked = 0;
    for (int i = 0; i < 20; ++i) {
      const double scale = cfg.delta_value() * std::exp(-std::abs(T)) * 0.3;
      const SectionCoords y{x.u + scale * off(rng), x.s + scale * off(rng), false};
      const TransportCase c = transport_case(G, D, x, y, T, 0.2 * cfg.eps * off(rng), 0.2 * cfg.eps * off(rng));
      const CheckReport r = check_bracket_transport(G, c.D, c.Dp, c.x, c.y, c.s, cfg);
      CHECK(r.hypothesis);
      CHECK(r.measured <= 1e-7);
      ++checked;
    }
    CHECK(checked == 20);
  }
}

TEST_CASE("reports serialize as json lines") {
  CheckReport r;
  r.check = "demo";
  r.passed = true;
  r.bound = 2.0;
  r.measured = 0.5;
  r.params = {{"L", 4.0}};
  const std::string line = to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(line);
  CHECK(j["check"] == "demo");
  CHECK(j["margin"].get<double>() == doctest::Approx(1.5));
  CHECK(j["L"].get<double>() == 4.0);
}
