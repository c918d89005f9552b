#pragma once

// Cost evaluation for threshold-policy ensembles: the discomfort integral,
// point-mass sensitivities, the finite-N normalized cost and the continuum
// functional J[u].
//
// Every grid-power term has the form (alpha + beta u)^2 weighted by the
// probability that the dominance "cut" between parked/above and the rest
// of the ensemble falls at set-point z.

#include <string>
#include <vector>

#include "tcl/model.hpp"
#include "tcl/stationary.hpp"
#include "tcl/threshold.hpp"

namespace tcl {

struct CostReport {
  double power_cost = 0.0;
  double discomfort_cost = 0.0;
  double gamma = 0.0;
  double total = 0.0;
};

CostReport make_report(double power, double discomfort, double gamma);

/// One quadratic grid-power term.
struct CostTerm {
  std::string name;
  double alpha = 0.0;
  double beta = 0.0;
  int coupled_level = -1;  // if >= 0, alpha is scaled by (1 - u(level))
  bool increasing = false;  // curve grows with z (tail masses) or decays (parking masses)
  std::vector<double> curve;    // at nodes
  std::vector<double> density;  // per cell, |d curve / dz|
  double atom_low = 0.0;   // probability carried at u = 0
  double atom_high = 0.0;  // probability carried at u = 1
  std::vector<double> lead;  // decreasing terms: P(lowest load above the level) at nodes

  double alpha_for(const std::vector<double>& level_fractions) const;
};

/// Cell-based sensitivities: derivatives live on cells [z_k, z_{k+1}],
/// values (curves, Phi) on nodes. Comfort levels are always nodes.
struct SensitivityCurves {
  double h = 0.0;
  double c = 0.0;
  std::vector<double> comfort_levels;
  std::vector<double> nodes;
  std::vector<double> phi;        // at nodes
  std::vector<double> phi_prime;  // per cell
  std::vector<CostTerm> terms;
  int nonpositive_weight_cells = 0;  // diagnostic at the default v (= 0)

  std::size_t cells() const { return nodes.size() - 1; }
  double width(std::size_t k) const { return nodes[k + 1] - nodes[k]; }
  double midpoint(std::size_t k) const { return 0.5 * (nodes[k] + nodes[k + 1]); }
  double top() const { return nodes.back(); }

  /// Index of node equal to comfort level j.
  std::size_t level_node(int comfort) const;

  /// w = sum beta^2 D per cell (raw, may be <= 0 numerically).
  std::vector<double> weight() const;
  /// sum over terms of 2 alpha beta D per cell for the given level fractions.
  std::vector<double> cross(const std::vector<double>& level_fractions) const;

  /// Named views: top-level parking (D1), lowest-level parking (D2) and the
  /// summed intermediate-wind tail terms (D hat). Zero vectors if absent.
  std::vector<double> d_top() const;
  std::vector<double> d_first() const;
  std::vector<double> d_hat() const;

  double interpolate_phi(double z) const;
  double interpolate(const CostTerm& term, double z) const;
};

/// Node grid on [0, top] with the comfort levels as nodes and spacing close
/// to `dz` inside each comfort interval (`dz <= 0` selects top/400).
std::vector<double> make_z_grid(const LoadParams& params, double dz = 0.0);

SensitivityCurves sensitivity_curves(const MarkovEnvironment& env, const LoadParams& params,
                                     const std::vector<double>& nodes, int workers = 1);
SensitivityCurves sensitivity_curves(const MarkovEnvironment& env, const LoadParams& params, double dz = 0.0,
                                     int workers = 1);

/// Phi(z) from the exact stationary law.
double phi(double z, const MarkovEnvironment& env, const LoadParams& params);

/// Normalized finite-N cost for ascending set-points, with the single-load
/// curves linearly interpolated on the sensitivity grid.
CostReport finite_cost(const std::vector<double>& set_points, const SensitivityCurves& curves, double gamma);
CostReport finite_cost(const std::vector<double>& set_points, const MarkovEnvironment& env,
                       const LoadParams& params, double gamma);

/// J[u]. Level fractions for coupled terms default to u(level); pass
/// `level_fractions` (one entry per comfort level) to hold them fixed.
CostReport continuum_cost(const ThresholdDistribution& u, const SensitivityCurves& curves, double gamma,
                          const std::vector<double>* level_fractions = nullptr);

/// Level fractions u(level j) for every comfort level.
std::vector<double> level_fractions(const ThresholdDistribution& u, const SensitivityCurves& curves);

}  // namespace tcl
