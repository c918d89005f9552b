#include <doctest.h>

#include "tcl/heuristic.hpp"

using namespace tcl;

namespace {

// Cheap deterministic oracle: mean squared distance to a fixed monotone target.
CostOracle distance_oracle() {
  return [](const ThresholdDistribution& u) {
    double s = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double x = 0.5 * k + 0.25;
      const double target = x < 40.0 ? 0.1 : (x < 70.0 ? 0.4 : 0.8);
      s += (u(x) - target) * (u(x) - target) / 200.0;
    }
    return CostEstimate{s, 0.0};
  };
}

}  // namespace

TEST_SUITE("heuristic") {

TEST_CASE("piecewise classes") {
  const auto c = PiecewiseDistribution::flat(100.0, 2, Shape::Constant, 0.3);
  CHECK(c.segments() == 4);
  const auto u = c.distribution();
  CHECK(u(10.0) == 0.3);
  CHECK(u(100.0) == 1.0);
  const auto r = c.refined();
  CHECK(r.level == 3);
  CHECK(r.alphas == std::vector<double>(8, 0.3));

  PiecewiseDistribution lin = PiecewiseDistribution::flat(100.0, 1, Shape::Linear, 0.0);
  lin.alphas = {0.2, 0.6};
  const auto lu = lin.distribution();
  CHECK(lu(0.0) == 0.0);
  CHECK(lu(25.0) == doctest::Approx(0.2));
  CHECK(lu(50.0) == doctest::Approx(0.4));
  CHECK(lu(100.0) == 1.0);
  const auto lr = lin.refined();
  for (std::size_t i = 0; i < lr.segments(); ++i) CHECK(lr.alphas[i] == doctest::Approx(lu(12.5 + 25.0 * i)));

  PiecewiseDistribution bad = c;
  bad.alphas = {0.5, 0.4, 0.6, 0.7};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("adaptation steps") {
  Rng rng = make_rng(1, 0);
  SUBCASE("no cost change leaves moved coordinates in place") {
    const auto next = adapt_step({0.2, 0.5}, {0.1, 0.4}, 1.0, 1.0, 1.0, rng);
    CHECK(next == std::vector<double>{0.2, 0.5});
  }
  SUBCASE("scalar quadratic descent") {
    // J(a) = (a - 0.6)^2 has secant slope a + b - 1.2 between a and b.
    double prev = 0.0, cur = 0.1;
    for (int k = 0; k < 40; ++k) {
      const auto j = [](double a) { return (a - 0.6) * (a - 0.6); };
      const double next = adapt_step({cur}, {prev}, j(cur), j(prev), 0.4, rng)[0];
      prev = cur;
      cur = next;
      if (std::abs(cur - prev) < 1e-5) break;
    }
    CHECK(cur == doctest::Approx(0.6).epsilon(1e-3));
  }
  SUBCASE("order is restored by projection") {
    const auto next = adapt_step({0.5, 0.5}, {0.4, 0.6}, 1.0, 0.0, 1.0, rng);
    for (std::size_t i = 1; i < next.size(); ++i) CHECK(next[i] >= next[i - 1]);
    for (double v : next) CHECK((v >= 0.0 && v <= 1.0));
  }
  SUBCASE("steps are capped") {
    const auto next = adapt_step({0.5}, {0.49}, 10.0, 0.0, 1.0, rng);
    CHECK(next[0] == doctest::Approx(0.25));
  }
  CHECK_THROWS_AS(adapt_step({0.5}, {0.4}, 0.0, 0.0, 0.0, rng), Error);
}

TEST_CASE("isotonic projection") {
  CHECK(isotonic_projection({0.1, 0.5, 0.3, 0.9}) == std::vector<double>{0.1, 0.4, 0.4, 0.9});
  CHECK(isotonic_projection({1.4, -0.2}) == std::vector<double>{0.6, 0.6});
  CHECK(isotonic_projection({-0.5, 2.0}) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("successive refinement against a deterministic oracle") {
  RefinementOptions opt;
  opt.max_level = 2;
  opt.delta_j = 1e-4;
  const auto r = successive_refinement(100.0, opt, distance_oracle());
  REQUIRE(r.best_per_level.size() == 3);
  for (std::size_t k = 1; k < r.best_per_level.size(); ++k) CHECK(r.best_per_level[k] <= r.best_per_level[k - 1]);
  CHECK(r.best.level == 2);
  CHECK(r.best_j < r.trace.front().j);
  int refinements = 0, level = 0;
  for (const auto& s : r.trace) {
    CHECK(s.level >= level);
    level = s.level;
    if (s.refinement) {
      ++refinements;
      CHECK(s.alphas.size() == (std::size_t{1} << s.level));
    }
  }
  CHECK(refinements == 2);
  double seen = 1e300;
  for (const auto& s : r.trace) seen = std::min(seen, s.j);
  CHECK(seen == r.best_j);
}

TEST_CASE("an unreachable threshold stops after the first level") {
  RefinementOptions opt;
  opt.max_level = 3;
  opt.delta_j = std::numeric_limits<double>::infinity();
  const auto r = successive_refinement(100.0, opt, distance_oracle());
  CHECK(r.best_per_level.size() == 1);
  for (const auto& s : r.trace) CHECK(s.level == 0);
}

TEST_CASE("simulated cost estimates") {
  const auto env = build_environment(two_state_rates(0.04, 0.04), two_state_rates(0.02, 0.02));
  const auto p = make_load_params(1.0, 1.1, {50, 100}, 2);
  Episode ep;
  ep.loads = 20;
  ep.sim.jumps = 20'000;
  ep.sim.seed = 3;
  const auto top_step = ThresholdDistribution({{0.0, 0.0, 0.0}, {100.0, 0.0, 1.0}});
  const auto a = estimate_cost(top_step, ep, env, p, 0.01);
  const auto b = estimate_cost(ThresholdDistribution::uniform(100.0), ep, env, p, 0.01);
  MESSAGE("all at the top " << a.j << ", uniform " << b.j);
  CHECK(a.j >= b.j);
  CHECK(a.se > 0.0);

  ep.sim.jumps = 0;
  CHECK_THROWS_AS(estimate_cost(top_step, ep, env, p, 0.01), Error);
}

}  // TEST_SUITE
