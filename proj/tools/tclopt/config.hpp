#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tcl/cftp.hpp"
#include "tcl/heuristic.hpp"
#include "tcl/hjb.hpp"
#include "tcl/model.hpp"

namespace tclopt {

inline constexpr const char* kVersion = "0.1.0";

/// Schema problems in the experiment file (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  double h = 1.0;
  double c = 1.1;
  std::vector<double> comfort_levels{50.0, 100.0};
  // Birth-death chains: up[i] = rate i -> i+1, down[i] = rate i+1 -> i.
  std::vector<double> wind_up{0.04};
  std::vector<double> wind_down{0.04};
  std::vector<double> comfort_up{0.02};
  std::vector<double> comfort_down{0.02};

  tcl::MarkovEnvironment environment() const;
  tcl::LoadParams params() const;
};

struct SolverConfig {
  double grid_step = 0.0;  // 0: top / 400
  double gamma = 0.01;
  double tol = 1e-9;
  int max_iter = 200;
};

struct DistributionConfig {
  std::optional<double> z;  // default: top comfort level
};

struct SimulateConfig {
  int loads = 100;
  std::int64_t jumps = 1'000'000;
  double burn_in = 0.1;
  std::string policy = "optimal";  // optimal | uniform
  int replications = 1;
  int bins = 200;
};

struct CftpLoadConfig {
  double h = 1.0;
  double c = 1.1;
  std::vector<double> comfort_levels;
  double set_point = 0.0;
  std::vector<double> comfort_up, comfort_down;
};

struct CftpSection {
  std::vector<CftpLoadConfig> loads;  // empty: two model loads at the quantiles of u*
  bool shared_comfort = false;
  std::size_t samples = 1000;
  double time_step = 0.0;
  int bins = 20;
  std::int64_t forward_slots = 0;  // 0 skips the forward comparison
};

struct HeuristicSection {
  int loads = 100;
  std::int64_t jumps = 100'000;
  std::string shape = "constant";
  tcl::RefinementOptions refinement;
};

struct StvSection {
  int loads = 10;
  double wind_total = 10.0;
  double activation = 60.0;
  double horizon = 20000.0;
  double dt = 0.05;
};

struct HjbSection {
  tcl::HjbOptions options;
  std::vector<int> convergence;  // nested grids for the self-convergence check
  StvSection stv;
};

struct CompareSection {
  std::vector<int> loads{10, 100};
  std::int64_t jumps = 100'000;
};

struct ExperimentConfig {
  ModelConfig model;
  SolverConfig solver;
  DistributionConfig distribution;
  SimulateConfig simulate;
  CftpSection cftp;
  HeuristicSection heuristic;
  HjbSection hjb;
  CompareSection compare;
  std::uint64_t seed = 1;

  std::uint64_t hash = 0;  // FNV-1a of the canonical JSON of the file
};

/// Parses and validates; unknown keys and wrong types raise ConfigError,
/// model preconditions raise tcl::Error.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a(const std::string& bytes);

}  // namespace tclopt
