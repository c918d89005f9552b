#include <doctest.h>

#include "commands.hpp"
#include "config.hpp"

using namespace tclopt;

TEST_SUITE("cli") {

TEST_CASE("defaults fill an empty file") {
  const auto cfg = parse_config("{}");
  CHECK(cfg.model.h == 1.0);
  CHECK(cfg.model.comfort_levels == std::vector<double>{50, 100});
  CHECK(cfg.solver.gamma == 0.01);
  CHECK(cfg.simulate.policy == "optimal");
  CHECK(cfg.seed == 1);
  CHECK_FALSE(cfg.distribution.z.has_value());
  CHECK(cfg.model.environment().size() == 4);
}

TEST_CASE("sections are read") {
  const auto cfg = parse_config(R"({
    "seed": 42,
    "model": {"h": 1.2, "c": 1.0, "comfort_levels": [30, 60, 100],
              "comfort_up": [0.02, 0.01], "comfort_down": [0.03, 0.02]},
    "solver": {"gamma": 0.05},
    "distribution": {"z": 75},
    "simulate": {"loads": 7, "policy": "uniform"},
    "hjb": {"cells": 30, "convergence": [10, 20]}
  })");
  CHECK(cfg.seed == 42);
  CHECK(cfg.model.params().comfort_count() == 3);
  CHECK(cfg.solver.gamma == 0.05);
  CHECK(*cfg.distribution.z == 75.0);
  CHECK(cfg.simulate.loads == 7);
  CHECK(cfg.hjb.options.cells == 30);
  CHECK(cfg.hjb.convergence == std::vector<int>{10, 20});
}

TEST_CASE("schema problems are config errors") {
  CHECK_THROWS_AS(parse_config(R"({"modle": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"hh": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"h": "one"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"simulate": {"policy": "greedy"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2"), ConfigError);
}

TEST_CASE("model preconditions are solver errors") {
  CHECK_THROWS_AS(parse_config(R"({"model": {"h": -1}})"), tcl::Error);
  CHECK_THROWS_AS(parse_config(R"({"model": {"wind_up": [0]}})"), tcl::Error);
}

TEST_CASE("the content hash ignores formatting but not values") {
  const auto a = parse_config(R"({"seed": 3, "solver": {"gamma": 0.02}})");
  const auto b = parse_config("{\n  \"solver\" : { \"gamma\" : 0.02 },\n  \"seed\" : 3\n}");
  const auto c = parse_config(R"({"seed": 3, "solver": {"gamma": 0.03}})");
  CHECK(a.hash == b.hash);
  CHECK(a.hash != c.hash);
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("command lookup") {
  for (const char* name : {"distribution", "curves", "optimize", "simulate", "cftp", "heuristic", "hjb", "compare"}) {
    CHECK(find_command(name) != nullptr);
  }
  CHECK(find_command("plot") == nullptr);
}

}  // TEST_SUITE
