#pragma once

#include <vector>

#include "tcl/error.hpp"

namespace tcl {

/// Breakpoint of a threshold distribution: the value just left of `z` and
/// the (right-continuous) value at `z`. Between consecutive knots the
/// function is linear from `right` of the first to `left` of the second.
struct Knot {
  double z = 0.0;
  double left = 0.0;
  double right = 0.0;
};

/// Nondecreasing u on [0, top]: u(z) is the fraction of loads with
/// set-point <= z. u(0-) = 0 and u(top) = 1; jumps at the ends are allowed.
class ThresholdDistribution {
 public:
  explicit ThresholdDistribution(std::vector<Knot> knots);

  /// Piecewise-constant u with value `values[k]` on [nodes[k], nodes[k+1]).
  static ThresholdDistribution from_cells(const std::vector<double>& nodes, const std::vector<double>& values);
  /// Empirical distribution function of a set-point list.
  static ThresholdDistribution empirical(std::vector<double> set_points, double top);
  static ThresholdDistribution uniform(double top);
  /// Piecewise-linear interpolation through (xs[k], ys[k]); ends forced to 0 and 1.
  static ThresholdDistribution from_samples(const std::vector<double>& xs, const std::vector<double>& ys);

  double top() const { return knots_.back().z; }
  const std::vector<Knot>& knots() const { return knots_; }

  double operator()(double z) const;
  double left_limit(double z) const;

  /// Exact integrals of u and u^2 over [a, b].
  double integral(double a, double b) const;
  double integral_sq(double a, double b) const;

  /// Left-continuous generalized inverse: inf{z : u(z) >= p}.
  double quantile(double p) const;
  /// Z_i = quantile((i - 1/2) / n), i = 1..n.
  std::vector<double> quantile_set_points(int n) const;

  std::vector<Knot> jumps(double min_size = 1e-12) const;

  /// Cell averages on a node grid.
  std::vector<double> cell_averages(const std::vector<double>& nodes) const;

 private:
  template <class Fn>
  double integrate(double a, double b, Fn&& piece) const;

  std::vector<Knot> knots_;
};

}  // namespace tcl
