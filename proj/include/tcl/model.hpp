#pragma once

// Domain types for thermostatically controlled loads under a threshold
// ("Z") policy, the joint wind/comfort Markov environment, and exact
// event-driven integration of single-load temperature paths.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tcl/error.hpp"

namespace tcl {

/// Off-diagonal transition rates, `rates[from][to]` (1/time). Diagonal
/// entries are ignored; a zero entry means "no direct transition".
using RateMatrix = std::vector<std::vector<double>>;

/// Two-state chain: state 0 leaves at `leave0`, state 1 leaves at `leave1`.
RateMatrix two_state_rates(double leave0, double leave1);

/// Birth-death chain with `up[i]` = rate i -> i+1 and `down[i]` = rate i+1 -> i.
RateMatrix birth_death_rates(const std::vector<double>& up, const std::vector<double>& down);

struct EnvState {
  int wind = 0;
  int comfort = 0;
  bool operator==(const EnvState&) const = default;
};

/// Joint (wind, comfort) continuous-time Markov chain. The generator uses the
/// column convention: Q(to, from), so columns sum to zero and dp/dt = Q p.
/// States are ordered lexicographically by (wind, comfort).
class MarkovEnvironment {
 public:
  MarkovEnvironment(int wind_states, int comfort_levels, Eigen::MatrixXd generator);

  int wind_states() const noexcept { return wind_states_; }
  int comfort_levels() const noexcept { return comfort_levels_; }
  int size() const noexcept { return wind_states_ * comfort_levels_; }

  int index(int wind, int comfort) const noexcept { return wind * comfort_levels_ + comfort; }
  int index(EnvState s) const noexcept { return index(s.wind, s.comfort); }
  EnvState state(int index) const noexcept {
    return {index / comfort_levels_, index % comfort_levels_};
  }

  const Eigen::MatrixXd& generator() const noexcept { return generator_; }
  double exit_rate(int index) const { return -generator_(index, index); }

  /// Stationary law of the environment (solves Q pi = 0, 1'pi = 1).
  Eigen::VectorXd stationary() const;

  /// Generator of the time-reversed stationary chain.
  Eigen::MatrixXd reversed_generator() const;

 private:
  int wind_states_;
  int comfort_levels_;
  Eigen::MatrixXd generator_;
};

/// Tensor-sum generator of independent wind and comfort chains.
MarkovEnvironment build_environment(const RateMatrix& wind_rates, const RateMatrix& comfort_rates);

/// Column-convention generator for a single chain given its rate matrix.
Eigen::MatrixXd generator_from_rates(const RateMatrix& rates);

struct LoadParams {
  double h = 1.0;                        // heating rate with no power drawn
  double c = 1.1;                        // maximum net cooling rate
  std::vector<double> comfort_levels;    // strictly increasing, all > 0
  std::vector<double> wind_cooling_rates;  // i*c/(W-1) for wind state i

  int wind_states() const noexcept { return static_cast<int>(wind_cooling_rates.size()); }
  int comfort_count() const noexcept { return static_cast<int>(comfort_levels.size()); }
  double top() const { return comfort_levels.back(); }
  double level(int comfort) const { return comfort_levels.at(static_cast<std::size_t>(comfort)); }
  double wind_rate(int wind) const { return wind_cooling_rates.at(static_cast<std::size_t>(wind)); }

  void validate() const;
};

LoadParams make_load_params(double h, double c, std::vector<double> comfort_levels, int wind_states);

struct LoadState {
  double temperature = 0.0;
  double set_point = 0.0;
};

struct PowerDraw {
  double wind_power = 0.0;
  double grid_power = 0.0;
};

/// Instantaneous temperature rate under the Z-policy.
double z_policy_drift(const LoadState& state, int wind, int comfort, const LoadParams& params);

PowerDraw power_draw(const LoadState& state, int wind, int comfort, const LoadParams& params);

/// One constant-rate piece of a temperature path.
struct PathPiece {
  double duration = 0.0;
  double x0 = 0.0;
  double rate = 0.0;
  PowerDraw power;

  double x1() const { return x0 + rate * duration; }
};

/// Exact path of one load over `dt` with the environment held fixed:
/// at most three constant-rate pieces, the last one possibly at rest.
struct Path {
  std::array<PathPiece, 3> pieces{};
  int count = 0;
  double end = 0.0;  // temperature after dt, snapped exactly onto targets

  std::span<const PathPiece> view() const { return {pieces.data(), static_cast<std::size_t>(count)}; }
};

Path plan_path(double x, double set_point, int wind, int comfort, const LoadParams& params, double dt);

/// Advance every load over `dt` with the environment fixed (callers split
/// at environment jumps). Hits of 0, the set-point and the comfort level are
/// resolved in closed form.
std::vector<LoadState> step_ensemble(std::span<const LoadState> states, EnvState env, double dt,
                                     const LoadParams& params);

}  // namespace tcl
