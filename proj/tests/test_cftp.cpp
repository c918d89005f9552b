#include <doctest.h>

#include "tcl/cftp.hpp"
#include "tcl/costs.hpp"
#include "tcl/stationary.hpp"

using namespace tcl;

namespace {

LoadParams reference_params() { return make_load_params(1.0, 1.1, {50, 100}, 2); }

CftpConfig single_load(double z, std::uint64_t seed) {
  CftpConfig cfg;
  cfg.wind_generator = generator_from_rates(two_state_rates(0.04, 0.04));
  cfg.loads.push_back({reference_params(), z, generator_from_rates(two_state_rates(0.02, 0.02))});
  cfg.seed = seed;
  return cfg;
}

double sample_cdf(const std::vector<JointSample>& s, std::size_t load, double x) {
  double n = 0.0;
  for (const auto& v : s) n += v.temperatures[load] <= x ? 1.0 : 0.0;
  return n / static_cast<double>(s.size());
}

}  // namespace

TEST_SUITE("cftp") {

TEST_CASE("a nearly windless environment leaves loads parked") {
  CftpConfig cfg;
  cfg.wind_generator = generator_from_rates(two_state_rates(1e-6, 10.0));
  cfg.loads.push_back({make_load_params(1.0, 1.1, {60}, 2), 45.0, Eigen::MatrixXd::Zero(1, 1)});
  const auto s = cftp_samples(cfg, 200);
  int parked = 0;
  for (const auto& v : s) {
    parked += v.temperatures[0] == 45.0 ? 1 : 0;
    CHECK(v.sandwich_violations == 0);
  }
  CHECK(parked >= 198);
}

TEST_CASE("single load agrees with the stationary law") {
  const auto cfg = single_load(75.0, 3);
  const auto s = cftp_samples(cfg, 3000, 2);
  const auto d = solve_stationary(75.0, build_environment(two_state_rates(0.04, 0.04), two_state_rates(0.02, 0.02)),
                                  reference_params());
  double sup = 0.0;
  for (double x = 0.0; x <= 100.0; x += 0.5) sup = std::max(sup, std::abs(sample_cdf(s, 0, x) - d.cdf(x)));
  MESSAGE("sup CDF gap " << sup);
  CHECK(sup <= 0.03);
  for (const auto& v : s) CHECK(v.sandwich_violations == 0);
}

TEST_CASE("equal set-points under shared comfort coincide") {
  auto cfg = single_load(70.0, 5);
  cfg.loads.push_back(cfg.loads[0]);
  cfg.shared_comfort = true;
  for (const auto& v : cftp_samples(cfg, 300)) CHECK(v.temperatures[0] == v.temperatures[1]);
}

TEST_CASE("draws are reproducible per index") {
  const auto cfg = single_load(40.0, 9);
  const auto a = cftp_sample(cfg, 17);
  const auto b = cftp_sample(cfg, 17);
  CHECK(a.temperatures == b.temperatures);
  CHECK(a.slots == b.slots);
}

TEST_CASE("property: coalescence persists with longer horizons") {
  auto cfg = single_load(60.0, 11);
  cfg.loads.push_back({make_load_params(1.2, 1.0, {40, 90}, 2), 80.0, generator_from_rates(two_state_rates(0.03, 0.01))});
  for (std::uint64_t i = 0; i < 10; ++i) {
    bool met = false;
    for (std::int64_t slots = 8; slots <= 8 << 12; slots *= 2) {
      const bool now = coalesced_from(cfg, i, slots);
      if (met) CHECK(now);
      met = met || now;
    }
  }
}

TEST_CASE("joint cost estimates") {
  SUBCASE("empty input") {
    CHECK_THROWS_AS(estimate_joint_cost({}, single_load(10.0, 1), 0.0), Error);
  }
  SUBCASE("all loads free under wind") {
    auto cfg = single_load(50.0, 1);
    JointSample s;
    s.temperatures = {30.0};
    s.wind = 1;
    s.comfort = {1};
    const auto c = estimate_joint_cost({s, s}, cfg, 0.5);
    CHECK(c.report.power_cost == 0.0);
    CHECK(c.report.discomfort_cost == 0.0);
  }
  SUBCASE("one load against the finite-N cost") {
    const auto env = build_environment(two_state_rates(0.04, 0.04), two_state_rates(0.02, 0.02));
    const auto sc = sensitivity_curves(env, reference_params());
    const auto cfg = single_load(70.0, 21);
    const auto est = estimate_joint_cost(cftp_samples(cfg, 4000, 2), cfg, 0.01);
    const double exact = finite_cost({70.0}, sc, 0.01).total;
    MESSAGE("joint " << est.report.total << " +- " << est.se << ", exact " << exact);
    CHECK(std::abs(est.report.total - exact) <= 3.0 * est.se);
  }
}

TEST_CASE("box smoothing of a half step") {
  const ThresholdDistribution u({{0.0, 0.0, 0.0}, {30.0, 0.0, 0.5}, {100.0, 0.5, 1.0}});
  const auto sm = smooth_distribution(u, 5.0, Kernel::Box);
  CHECK(sm(24.0) == doctest::Approx(0.0));
  CHECK(sm(27.5) == doctest::Approx(0.125));
  CHECK(sm(30.0) == doctest::Approx(0.25));
  CHECK(sm(35.0) == doctest::Approx(0.5));
  CHECK(sm(60.0) == doctest::Approx(0.5));
  CHECK(sm(97.5) == doctest::Approx(0.625));
  CHECK(sm(100.0) == 1.0);
}

TEST_CASE("triangular smoothing ramps quadratically") {
  const ThresholdDistribution u({{0.0, 0.0, 0.0}, {30.0, 0.0, 0.5}, {100.0, 0.5, 1.0}});
  const auto sm = smooth_distribution(u, 5.0, Kernel::Triangular);
  CHECK(sm(27.5) == doctest::Approx(0.5 * 0.125));
  CHECK(sm(30.0) == doctest::Approx(0.25));
  CHECK(sm(32.5) == doctest::Approx(0.5 * 0.875));
  CHECK(kernel_cdf(Kernel::Triangular, -0.5) == doctest::Approx(0.125));
  CHECK(kernel_cdf(Kernel::Box, 2.0) == 1.0);
}

TEST_CASE("property: smoothing stays monotone and vanishes with the bandwidth") {
  const auto u = ThresholdDistribution::from_cells({0, 20, 40, 60, 80, 100}, {0.0, 0.1, 0.1, 0.6, 0.9});
  for (Kernel k : {Kernel::Box, Kernel::Triangular}) {
    for (double bw : {0.01, 1.0, 8.0}) {
      const auto sm = smooth_distribution(u, bw, k);
      double prev = 0.0;
      for (double x = 0.0; x <= 100.0; x += 0.25) {
        CHECK(sm(x) >= prev - 1e-12);
        prev = sm(x);
      }
    }
    const auto sharp = smooth_distribution(u, 1e-3, k);
    for (double x : {10.0, 30.0, 50.0, 70.0, 90.0}) CHECK(sharp(x) == doctest::Approx(u(x)).epsilon(1e-9));
  }
  CHECK_THROWS_AS(smooth_distribution(u, 0.0), Error);
}

TEST_CASE("histograms and total variation") {
  CHECK(total_variation({0.5, 0.5}, {1.0, 0.0}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(total_variation({1.0}, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(marginal_histogram({}, 0, 100.0, 10), Error);
}

}  // TEST_SUITE
