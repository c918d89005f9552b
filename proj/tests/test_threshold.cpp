#include <doctest.h>

#include "oracles.hpp"
#include "tcl/threshold.hpp"

using namespace tcl;

TEST_SUITE("threshold") {

TEST_CASE("uniform distribution") {
  const auto u = ThresholdDistribution::uniform(100.0);
  CHECK(u(0.0) == 0.0);
  CHECK(u(25.0) == doctest::Approx(0.25));
  CHECK(u(100.0) == 1.0);
  CHECK(u.integral(0.0, 100.0) == doctest::Approx(50.0));
  CHECK(u.integral_sq(0.0, 100.0) == doctest::Approx(100.0 / 3.0));
  const auto z = u.quantile_set_points(4);
  REQUIRE(z.size() == 4);
  CHECK(z[0] == doctest::Approx(12.5));
  CHECK(z[3] == doctest::Approx(87.5));
}

TEST_CASE("cells, jumps and limits") {
  const auto u = ThresholdDistribution::from_cells({0, 10, 20, 30}, {0.2, 0.2, 0.7});
  CHECK(u(0.0) == 0.2);
  CHECK(u.left_limit(0.0) == 0.0);
  CHECK(u(19.999) == 0.2);
  CHECK(u(20.0) == 0.7);
  CHECK(u.left_limit(20.0) == 0.2);
  const auto jumps = u.jumps();
  REQUIRE(jumps.size() == 3);
  CHECK(jumps[0].z == 0.0);
  CHECK(jumps[1].z == 20.0);
  CHECK(jumps[2].z == 30.0);
  CHECK(u.quantile(0.1) == 0.0);
  CHECK(u.quantile(0.5) == 20.0);
  CHECK(u.quantile(0.71) == 30.0);
  CHECK(u.integral(5.0, 25.0) == doctest::Approx(0.2 * 15 + 0.7 * 5));
}

TEST_CASE("empirical distribution of set-points") {
  const auto u = ThresholdDistribution::empirical({30, 10, 30, 50}, 100.0);
  CHECK(u(9.0) == 0.0);
  CHECK(u(10.0) == 0.25);
  CHECK(u(30.0) == 0.75);
  CHECK(u(60.0) == 1.0);
  const auto z = u.quantile_set_points(4);
  CHECK(z == std::vector<double>{10, 30, 30, 50});
}

TEST_CASE("invalid functions are rejected") {
  CHECK_THROWS_AS(ThresholdDistribution({{0, 0, 0.5}, {10, 0.4, 1}}), Error);
  CHECK_THROWS_AS(ThresholdDistribution({{0, 0, 0}, {10, 1, 0.9}}), Error);
  CHECK_THROWS_AS(ThresholdDistribution({{1, 0, 0}, {10, 1, 1}}), Error);
  CHECK_THROWS_AS(ThresholdDistribution::from_cells({0, 1}, {}), Error);
}

TEST_CASE("property: integrals of random step functions") {
  std::vector<double> nodes;
  for (int k = 0; k <= 40; ++k) nodes.push_back(2.5 * k);
  for (unsigned seed = 0; seed < 50; ++seed) {
    const auto v = oracle::random_monotone(40, seed);
    const auto u = ThresholdDistribution::from_cells(nodes, v);
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
      s += 2.5 * x;
      s2 += 2.5 * x * x;
    }
    CHECK(u.integral(0.0, 100.0) == doctest::Approx(s));
    CHECK(u.integral_sq(0.0, 100.0) == doctest::Approx(s2));
    const auto avg = u.cell_averages(nodes);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(avg[k] == doctest::Approx(v[k]));
    // Quantiles are a left inverse.
    for (double q : {0.05, 0.3, 0.77}) CHECK(u(u.quantile(q)) >= q - 1e-12);
  }
}

}  // TEST_SUITE
