#pragma once

// Euler-Lagrange candidate, the monotone projection P, and the fixed-point
// iteration over the level fractions u(level j) of the middle comfort levels.

#include <cstddef>
#include <vector>

#include "tcl/costs.hpp"
#include "tcl/threshold.hpp"

namespace tcl {

struct ElCandidate {
  std::vector<double> raw;      // per cell, before clamping
  std::vector<double> clamped;  // max(0, min(1, raw))
  std::vector<double> weight;   // w per cell, unclamped
  int nonpositive_weight_cells = 0;
};

/// Pointwise first-order condition of J for fixed level fractions
/// (one entry per comfort level; only middle levels matter, empty = zeros).
ElCandidate euler_lagrange(const SensitivityCurves& curves, double gamma,
                           const std::vector<double>& level_fractions = {});

/// Same candidate, with the middle-level fractions given as v = (v_2..v_{C-1}).
ElCandidate multiwind_euler_lagrange(const SensitivityCurves& curves, double gamma, const std::vector<double>& v);

struct PooledBlock {
  std::size_t first = 0;  // cells [first, last]
  std::size_t last = 0;
  double kappa = 0.0;       // pooled level before clipping
  double value = 0.0;       // level after clipping to [0, 1]
  double area_residual = 0.0;  // |sum (kappa - y) w dz| / sum w dz over the block
};

struct Projection {
  std::vector<double> nodes;
  std::vector<double> values;  // u* per cell
  std::vector<PooledBlock> blocks;  // blocks spanning more than one cell
  std::vector<double> costate;      // lambda at nodes
  double max_area_residual = 0.0;
  double min_costate = 0.0;

  ThresholdDistribution distribution() const { return ThresholdDistribution::from_cells(nodes, values); }
  /// Right-continuous value at a node.
  double at_node(std::size_t node) const;
};

/// Minimizer of sum_k w_k dz_k (u_k - y_k)^2 over nondecreasing u in [0, 1]:
/// weighted pool-adjacent-violators, then clipping. Weights <= 0 are
/// replaced by 1e-12 so flat stretches pool with their neighbours.
Projection project(const std::vector<double>& candidate, const std::vector<double>& weight,
                   const std::vector<double>& nodes);

struct FixedPointStep {
  double v = 0.0;
  double image = 0.0;  // P[u_EL(., v)](level)
  double up = 0.0;
  double down = 0.0;
};

struct FixedPointResult {
  std::vector<double> v;  // one per middle level
  std::vector<std::vector<FixedPointStep>> trace;  // per middle level, concatenated over sweeps
  Projection projection;
  ElCandidate candidate;
  int iterations = 0;
  double residual = 0.0;
};

/// P[u_EL(., v)] evaluated with middle-level fractions v.
Projection project_for(const SensitivityCurves& curves, double gamma, const std::vector<double>& v);

/// Bracketed bisection on v = P[u_EL(., v)](level) for every middle level
/// (round-robin when there is more than one).
FixedPointResult fixed_point(const SensitivityCurves& curves, double gamma, double tol = 1e-9, int max_iter = 200,
                             double v0 = 0.5);

struct OptimizationResult {
  ElCandidate candidate;
  Projection projection;
  ThresholdDistribution u;
  CostReport cost;
  std::vector<double> v;
  std::vector<std::vector<FixedPointStep>> trace;
};

/// Full pipeline: candidate, projection and, with three or more comfort
/// levels, the fixed point.
OptimizationResult optimize(const SensitivityCurves& curves, double gamma, double tol = 1e-9, int max_iter = 200);

}  // namespace tcl
