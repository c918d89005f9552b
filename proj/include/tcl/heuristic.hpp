#pragma once

// Model-free tuning of a threshold distribution from aggregate cost
// estimates only: piecewise-constant or piecewise-linear classes on a
// dyadic partition of [0, top], refined by halving.

#include <cstdint>
#include <functional>
#include <vector>

#include "tcl/model.hpp"
#include "tcl/random.hpp"
#include "tcl/simulate.hpp"
#include "tcl/threshold.hpp"

namespace tcl {

enum class Shape { Constant, Linear };

struct PiecewiseDistribution {
  double top = 1.0;
  int level = 0;  // 2^level segments
  Shape shape = Shape::Constant;
  std::vector<double> alphas;  // nondecreasing, in [0, 1]

  static PiecewiseDistribution flat(double top, int level, Shape shape, double value);

  std::size_t segments() const { return std::size_t{1} << level; }
  void validate() const;
  /// Constant: u = alpha_i on segment i (u(top) = 1). Linear: u interpolates
  /// (0, 0), (midpoint_i, alpha_i), (top, 1).
  ThresholdDistribution distribution() const;
  /// Every segment split in two; the new levels reproduce the old function
  /// at the new midpoints.
  PiecewiseDistribution refined() const;
};

struct CostEstimate {
  double j = 0.0;
  double se = 0.0;
};

/// Anything that maps a distribution to an aggregate cost estimate.
using CostOracle = std::function<CostEstimate(const ThresholdDistribution&)>;

struct Episode {
  int loads = 100;
  SimulationConfig sim;  // set_points are filled from the distribution
};

/// Simulated cost of N quantile set-points. Only the aggregate cost and its
/// standard error leave the simulation.
CostEstimate estimate_cost(const ThresholdDistribution& dist, const Episode& episode, const MarkovEnvironment& env,
                           const LoadParams& params, double gamma);

CostOracle simulation_oracle(MarkovEnvironment env, LoadParams params, double gamma, Episode episode);

/// Least-squares nondecreasing fit (unit weights), clipped to [0, 1].
std::vector<double> isotonic_projection(const std::vector<double>& values);

/// alpha_i(k+1) = alpha_i(k) - epsilon (J(k) - J(k-1)) / (alpha_i(k) - alpha_i(k-1)),
/// for one coordinate (or all when coordinate < 0). Coordinates that did not
/// move get a random nudge of 0.01 / segments instead. Steps are capped at
/// `max_step`; the result is projected.
std::vector<double> adapt_step(const std::vector<double>& current, const std::vector<double>& previous, double j_current,
                               double j_previous, double epsilon, Rng& rng, int coordinate = -1,
                               double max_step = 0.25);

struct RefinementOptions {
  int initial_level = 0;
  int max_level = 3;
  Shape shape = Shape::Constant;
  double initial_value = 0.5;
  double epsilon = 1.0;
  double delta_j = 0.005;  // relative plateau / refinement threshold
  int patience = 5;        // coordinate visits without significant gain
  int max_visits_per_level = 24;
  int secant_steps = 2;    // updates per visit after the probe
  double probe = 0.05;
  std::uint64_t seed = 1;
};

struct AdaptationStep {
  int level = 0;
  int step = 0;  // coordinate visit within the level
  std::vector<double> alphas;
  double j = 0.0;
  bool refinement = false;  // first evaluation after a split
};

struct RefinementResult {
  PiecewiseDistribution best;
  double best_j = 0.0;
  std::vector<double> best_per_level;
  std::vector<AdaptationStep> trace;
};

RefinementResult successive_refinement(double top, const RefinementOptions& options, const CostOracle& oracle);

}  // namespace tcl
