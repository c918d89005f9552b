#pragma once

// Stationary law of one load under a fixed set-point z: per-state
// densities on the intervals between consecutive breakpoints
// {0, comfort levels below z, z} plus point masses at the breakpoints.

#include <vector>

#include <Eigen/Dense>

#include "tcl/model.hpp"

namespace tcl {

struct PointMass {
  double location = 0.0;
  int state = 0;  // environment index
  double mass = 0.0;
};

/// Density on one open interval (a, b) where the drift is constant.
/// p(x) = exp(A (x - a)) left, A = D^{-1} Q.
struct DensitySegment {
  double a = 0.0;
  double b = 0.0;
  Eigen::VectorXd drift;
  Eigen::VectorXd left;
  Eigen::MatrixXd transfer;  // A
  Eigen::MatrixXd m0, m1, m2;  // int_0^L t^k exp(A t) dt, L = b - a

  std::vector<double> xs;  // sampling grid, both ends included
  Eigen::MatrixXd values;  // values(r, s) = p_s(xs[r])

  double length() const { return b - a; }
  Eigen::VectorXd density(double x) const;
  /// Per-state integral of the density over [a, min(x, b)].
  Eigen::VectorXd mass_below(double x) const;
  Eigen::VectorXd mass() const { return m0 * left; }
};

class StationaryDistribution {
 public:
  double set_point = 0.0;
  int wind_states = 0;
  int comfort_count = 0;
  std::vector<double> comfort_levels;
  std::vector<DensitySegment> segments;
  std::vector<PointMass> point_masses;
  double system_residual = 0.0;  // max |row| of the full boundary system

  int state_count() const { return wind_states * comfort_count; }
  int index(int wind, int comfort) const { return wind * comfort_count + comfort; }

  double total_mass() const;
  /// Density vector at x (right limit at breakpoints; zero outside (0, z)).
  Eigen::VectorXd density(double x) const;
  double atom(double location, int state) const;
  /// Distinct locations carrying positive aggregate mass.
  std::vector<double> mass_locations(double threshold = 1e-12) const;
  /// P(X <= x) for the aggregate temperature.
  double cdf(double x) const;

  /// Wind-off mass parked at min(z, level j).
  double parked_mass(int comfort) const;
  /// Density mass strictly above level j in environment state (wind, comfort j).
  double above_mass(int wind, int comfort) const;
  /// Total mass at temperature 0.
  double floor_mass() const;
  /// P(X > level j) over all environment states.
  double tail_mass(int comfort) const;
  /// Sum over comfort levels j of E[((X - level j)^+)^2; comfort = j], exact.
  double phi() const;
};

/// `grid_step <= 0` selects top/400.
StationaryDistribution solve_stationary(double z, const MarkovEnvironment& env, const LoadParams& params,
                                        double grid_step = 0.0);

/// max over sampled grid points of |1' D(x) p(x)|.
double verify_conservation(const StationaryDistribution& dist);

/// Point-mass and tail curves of the stationary law as functions of z.
struct PointMassCurves {
  std::vector<double> z;
  std::vector<std::vector<double>> parked;               // [comfort][k]
  std::vector<std::vector<std::vector<double>>> above;   // [wind][comfort][k]
  std::vector<double> phi;
  std::vector<double> floor;
  std::vector<double> tail_first;  // P(X_z > level 1)

  /// delta_z^z: mass parked at the set-point under the top comfort level.
  const std::vector<double>& top() const { return parked.back(); }
};

PointMassCurves point_mass_curves(const MarkovEnvironment& env, const LoadParams& params,
                                  const std::vector<double>& z_grid, int workers = 1);

}  // namespace tcl
