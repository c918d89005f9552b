#pragma once

// Event-driven Monte Carlo simulation of a homogeneous ensemble under a
// shared wind/comfort path. Loads move along exact piecewise-linear paths;
// all time averages use exact dwell times.

#include <cstdint>
#include <vector>

#include "tcl/costs.hpp"
#include "tcl/model.hpp"
#include "tcl/stationary.hpp"
#include "tcl/threshold.hpp"

namespace tcl {

struct SimulationConfig {
  std::vector<double> set_points;  // one per load, any order
  std::int64_t jumps = 1'000'000;  // environment jumps simulated
  double burn_in = 0.1;            // fraction of jumps discarded
  std::uint64_t seed = 1;
  bool record_occupation = false;
  int occupation_bins = 2000;
  std::size_t snapshot_limit = 0;  // temperatures at jump instants after burn-in
  std::size_t trace_limit = 0;     // rows of per-load trace at jump instants
  int batches = 20;                // batch means for the standard error
};

/// Time a load spends in each temperature bin plus dwell time at rest points.
struct Occupation {
  double top = 0.0;
  std::vector<double> bins;  // continuous occupation per bin of width top / bins.size()
  std::vector<std::pair<double, double>> atoms;  // (location, time)
  double total_time = 0.0;

  /// P(X <= x), treating occupation as uniform inside a bin.
  double cdf(double x) const;
  /// Evaluation points where the estimate is exact: bin edges and atoms.
  std::vector<double> exact_points() const;
};

struct TraceRow {
  double t;
  int load;
  double x;
  int wind;
  int comfort;
  double grid_power;
  double wind_power;
};

struct SimulationResult {
  CostReport empirical_cost;
  double total_se = 0.0;  // batch-means standard error of the total
  double averaged_time = 0.0;
  std::vector<double> set_points;
  std::vector<Occupation> occupation;  // per load, when recorded
  std::vector<std::vector<double>> snapshots;
  std::vector<TraceRow> trace;
  double peak_grid_power = 0.0;  // max of the normalized aggregate after burn-in
};

SimulationResult simulate(const SimulationConfig& config, const MarkovEnvironment& env, const LoadParams& params,
                          double gamma);

/// Independent replications; replication r uses child_seed(config.seed, r).
std::vector<SimulationResult> simulate_replications(const SimulationConfig& config, const MarkovEnvironment& env,
                                                    const LoadParams& params, double gamma, int count,
                                                    int workers = 1);

struct EmpiricalCdf {
  std::vector<Occupation> per_load;
  Occupation aggregate;
};

EmpiricalCdf empirical_cdf(const SimulationResult& result);

/// sup over exact evaluation points of |F_emp - F_analytic|.
double cdf_sup_distance(const Occupation& occupation, const StationaryDistribution& dist);

struct DominanceReport {
  bool ok = true;
  std::size_t snapshot = 0;
  int lower = -1;  // load with the smaller set-point
  int upper = -1;
};

/// Z_i < Z_j must imply x_i <= x_j, and Z_i == Z_j must imply x_i == x_j.
DominanceReport check_dominance(const std::vector<double>& set_points,
                                const std::vector<std::vector<double>>& snapshots);
DominanceReport check_dominance(const SimulationResult& result);

}  // namespace tcl
