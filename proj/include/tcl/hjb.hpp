#pragma once

// Finite-horizon HJB solver for two homogeneous loads under stochastic
// threshold variation: wind on/off times two comfort levels, quadratic cost
// on total grid power, forced maximum grid power above the active level.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tcl/model.hpp"

namespace tcl {

struct HjbOptions {
  double wind_power = 0.0;  // W; 0 selects h + c
  double max_grid = 0.0;    // M; 0 selects h + c
  int cells = 100;          // per axis on [0, top]
  double horizon = 100.0;
  double time_step = 0.0;   // 0 selects a stable step
  int workers = 1;
  double tie_tolerance = 1e-9;  // relative gap below which wind choices count as tied
};

/// Values on an (n+1) x (n+1) node grid, one matrix per environment state;
/// entry (i, j) is at (x1, x2) = (i dx, j dx).
struct ValueGrid {
  double dx = 0.0;
  double horizon = 0.0;
  int steps = 0;
  std::vector<Eigen::MatrixXd> values;

  int nodes() const { return static_cast<int>(values.front().rows()); }
};

struct AllocationPolicy {
  std::vector<Eigen::MatrixXd> wind1, wind2, grid1, grid2;
  std::vector<Eigen::MatrixXd> drift1, drift2;  // h - used power
  std::vector<Eigen::MatrixXi> tie;  // wind choice tied (gradient tie set)
};

struct HjbSolution {
  ValueGrid value;
  AllocationPolicy policy;
  double wind_power = 0.0;
  double max_grid = 0.0;
  double time_step = 0.0;
};

/// Largest time step the scheme accepts: dx / (h + c + W).
double hjb_stability_bound(const LoadParams& params, const HjbOptions& options);

/// Needs two wind states and two comfort levels.
HjbSolution solve_hjb(const MarkovEnvironment& env, const LoadParams& params, const HjbOptions& options);

enum class PolicyLabel { Synchronizing, Desynchronizing, Neutral };

/// Sign of d|x1 - x2|/dt under the extracted policy, per node.
std::vector<std::vector<PolicyLabel>> classify_policy(const HjbSolution& solution, const LoadParams& params,
                                                      int state);

/// Nodes off the diagonal and off the tie set where wind goes to the cooler load.
int cooler_load_wind_cells(const HjbSolution& solution, int state);

/// Sup-norm differences of V between successive grids, sampled on the
/// coarsest grid's nodes. `cells` must be nested (each divides the next).
std::vector<double> self_convergence(const MarkovEnvironment& env, const LoadParams& params, HjbOptions options,
                                     const std::vector<int>& cells);

/// Wind allocation for an ensemble: hottest first normally; when the mean
/// temperature exceeds `activation` and wind cannot cool everyone, coolest
/// first. Each load takes at most h + c of wind. Grid power is M above the
/// active level and tops up to h at the level; otherwise zero.
std::vector<PowerDraw> coolest_first_heuristic(const std::vector<double>& temperatures, double wind_available,
                                               int comfort, const LoadParams& params, double max_grid,
                                               double activation);

struct StvRun {
  double peak_grid = 0.0;         // max normalized aggregate grid power
  double mean_switch_peak = 0.0;  // mean over down-switches of the peak until the next event
  double mean_sq_grid = 0.0;
  int down_switches = 0;
};

struct StvComparison {
  StvRun heuristic;
  StvRun baseline;  // hottest first, never switched
};

/// Both policies on one sampled environment path (fixed-step integration).
StvComparison compare_stv_policies(const MarkovEnvironment& env, const LoadParams& params, int loads,
                                   double wind_total, double max_grid, double activation, double horizon, double dt,
                                   std::uint64_t seed);

}  // namespace tcl
