#pragma once

// Coupling-from-the-past sampler for small heterogeneous ensembles: a shared
// wind chain, independent (or shared) comfort chains, per-load parameters.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tcl/costs.hpp"
#include "tcl/model.hpp"
#include "tcl/threshold.hpp"

namespace tcl {

struct CftpLoad {
  LoadParams params;
  double set_point = 0.0;
  Eigen::MatrixXd comfort_generator;  // column convention; 1x1 zero for a fixed level
};

struct CftpConfig {
  Eigen::MatrixXd wind_generator;
  std::vector<CftpLoad> loads;
  bool shared_comfort = false;  // every load follows the comfort chain of load 0
  double time_step = 0.0;       // 0 selects default_time_step()
  int initial_slots = 8;
  int max_doublings = 24;
  std::uint64_t seed = 1;

  void validate() const;
  /// 0.1 * min level 1 / max(h, c) over the loads.
  double default_time_step() const;
  double step() const { return time_step > 0.0 ? time_step : default_time_step(); }
};

struct JointSample {
  std::vector<double> temperatures;
  int wind = 0;
  std::vector<int> comfort;  // per load
  std::int64_t slots = 0;    // backward horizon that coalesced
  std::int64_t sandwich_violations = 0;
};

/// One exact draw; draw `index` uses the stream child_seed(config.seed, index).
JointSample cftp_sample(const CftpConfig& config, std::uint64_t index);
std::vector<JointSample> cftp_samples(const CftpConfig& config, std::size_t count, int workers = 1);

/// Whether top and bottom chains started `slots` steps back have met at time 0.
bool coalesced_from(const CftpConfig& config, std::uint64_t index, std::int64_t slots);

struct JointCost {
  CostReport report;
  double se = 0.0;  // standard error of the total
};

/// Parked loads draw h, loads above their level draw the violation power,
/// every other load draws nothing.
JointCost estimate_joint_cost(const std::vector<JointSample>& samples, const CftpConfig& config, double gamma);

/// Per-load temperature histograms sampled at slot boundaries of one long
/// forward run driven by the same environment model.
struct ForwardMarginals {
  std::vector<std::vector<double>> histogram;  // [load][bin], sums to 1
  std::int64_t samples = 0;
};

ForwardMarginals forward_marginals(const CftpConfig& config, std::int64_t slots, std::int64_t burn_in, int bins,
                                   std::uint64_t seed);

std::vector<double> marginal_histogram(const std::vector<JointSample>& samples, std::size_t load, double top,
                                       int bins);
double total_variation(const std::vector<double>& p, const std::vector<double>& q);

enum class Kernel { Box, Triangular };

/// K[u](x) = int g(x - z) du(z) for a symmetric kernel of half-width
/// `bandwidth`. Mass pushed outside [0, top] lands on the end points.
ThresholdDistribution smooth_distribution(const ThresholdDistribution& u, double bandwidth,
                                          Kernel kernel = Kernel::Box, int resolution = 2000);

/// Integral of the unit kernel from -inf to t / bandwidth.
double kernel_cdf(Kernel kernel, double t);

struct SetPointSearch {
  std::vector<double> set_points;
  JointCost cost;
  std::vector<std::pair<std::vector<double>, double>> trace;  // accepted points per sweep
  int evaluations = 0;
};

/// Coordinate descent over the set-points with golden-section line searches.
/// Every evaluation reuses draws 0..samples-1, so comparisons share randomness.
SetPointSearch optimize_set_points(CftpConfig config, double gamma, std::size_t samples, int sweeps = 3,
                                   double tol = 0.5, int workers = 1);

}  // namespace tcl
