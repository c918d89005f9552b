#include "tcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tcl {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NonPositiveRate: return "NonPositiveRate";
    case ErrorKind::InvalidGenerator: return "InvalidGenerator";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::InvalidSetPoint: return "InvalidSetPoint";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::UnsortedInput: return "UnsortedInput";
    case ErrorKind::NotADistribution: return "NotADistribution";
    case ErrorKind::NonPositiveWeight: return "NonPositiveWeight";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::MissingOccupation: return "MissingOccupation";
    case ErrorKind::EmptySamples: return "EmptySamples";
    case ErrorKind::NoCoalescence: return "NoCoalescence";
    case ErrorKind::UnstableScheme: return "UnstableScheme";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

RateMatrix two_state_rates(double leave0, double leave1) {
  return {{0.0, leave0}, {leave1, 0.0}};
}

RateMatrix birth_death_rates(const std::vector<double>& up, const std::vector<double>& down) {
  if (up.size() != down.size()) {
    throw Error(ErrorKind::InvalidParams, "birth-death chain needs matching up/down rate lists");
  }
  const std::size_t n = up.size() + 1;
  RateMatrix rates(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    rates[i][i + 1] = up[i];
    rates[i + 1][i] = down[i];
  }
  return rates;
}

Eigen::MatrixXd generator_from_rates(const RateMatrix& rates) {
  const auto n = static_cast<Eigen::Index>(rates.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index from = 0; from < n; ++from) {
    const auto& row = rates[static_cast<std::size_t>(from)];
    if (static_cast<Eigen::Index>(row.size()) != n) {
      throw Error(ErrorKind::InvalidParams, "rate matrix must be square");
    }
    double exit = 0.0;
    for (Eigen::Index to = 0; to < n; ++to) {
      if (to == from) continue;
      const double r = row[static_cast<std::size_t>(to)];
      if (!(r >= 0.0) || !std::isfinite(r)) {
        std::ostringstream msg;
        msg << "rate " << from << "->" << to << " = " << r;
        throw Error(ErrorKind::NonPositiveRate, msg.str());
      }
      q(to, from) = r;
      exit += r;
    }
    if (n > 1 && exit <= 0.0) {
      std::ostringstream msg;
      msg << "state " << from << " has no positive exit rate";
      throw Error(ErrorKind::NonPositiveRate, msg.str());
    }
    q(from, from) = -exit;
  }
  return q;
}

MarkovEnvironment::MarkovEnvironment(int wind_states, int comfort_levels, Eigen::MatrixXd generator)
    : wind_states_(wind_states), comfort_levels_(comfort_levels), generator_(std::move(generator)) {
  if (wind_states_ < 1 || comfort_levels_ < 1) {
    throw Error(ErrorKind::InvalidGenerator, "need at least one wind state and one comfort level");
  }
  const Eigen::Index n = size();
  if (generator_.rows() != n || generator_.cols() != n) {
    throw Error(ErrorKind::InvalidGenerator, "generator size does not match W*C");
  }
  const double scale = std::max(1.0, generator_.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j && generator_(i, j) < 0.0) {
        throw Error(ErrorKind::InvalidGenerator, "negative off-diagonal generator entry");
      }
    }
    if (std::abs(generator_.col(j).sum()) > 1e-12 * scale) {
      throw Error(ErrorKind::InvalidGenerator, "generator column does not sum to zero");
    }
  }
}

Eigen::VectorXd MarkovEnvironment::stationary() const {
  const Eigen::Index n = size();
  Eigen::MatrixXd a(n + 1, n);
  a.topRows(n) = generator_;
  a.row(n).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);
  for (Eigen::Index i = 0; i < n; ++i) pi(i) = std::max(pi(i), 0.0);
  return pi / pi.sum();
}

Eigen::MatrixXd MarkovEnvironment::reversed_generator() const {
  // Reversed rates: rev(to <- from) = pi(to) Q(from <- to) / pi(from).
  const Eigen::VectorXd pi = stationary();
  const Eigen::Index n = size();
  Eigen::MatrixXd rev = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index from = 0; from < n; ++from) {
    if (pi(from) <= 0.0) continue;
    double exit = 0.0;
    for (Eigen::Index to = 0; to < n; ++to) {
      if (to == from) continue;
      const double r = pi(to) * generator_(from, to) / pi(from);
      rev(to, from) = r;
      exit += r;
    }
    rev(from, from) = -exit;
  }
  return rev;
}

MarkovEnvironment build_environment(const RateMatrix& wind_rates, const RateMatrix& comfort_rates) {
  const int w = static_cast<int>(wind_rates.size());
  const int c = comfort_rates.empty() ? 1 : static_cast<int>(comfort_rates.size());
  if (w < 2) throw Error(ErrorKind::InvalidParams, "need at least two wind states");
  const Eigen::MatrixXd qw = generator_from_rates(wind_rates);
  const Eigen::MatrixXd qc =
      comfort_rates.empty() ? Eigen::MatrixXd::Zero(1, 1) : generator_from_rates(comfort_rates);
  // Q = Qw (x) I_C + I_W (x) Qc with index = wind*C + comfort.
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(w * c, w * c);
  for (int wt = 0; wt < w; ++wt) {
    for (int wf = 0; wf < w; ++wf) {
      for (int k = 0; k < c; ++k) q(wt * c + k, wf * c + k) += qw(wt, wf);
    }
  }
  for (int wi = 0; wi < w; ++wi) {
    for (int ct = 0; ct < c; ++ct) {
      for (int cf = 0; cf < c; ++cf) q(wi * c + ct, wi * c + cf) += qc(ct, cf);
    }
  }
  return MarkovEnvironment(w, c, std::move(q));
}

void LoadParams::validate() const {
  if (!(h > 0.0) || !(c > 0.0)) throw Error(ErrorKind::InvalidParams, "h and c must be positive");
  if (comfort_levels.empty()) throw Error(ErrorKind::InvalidParams, "no comfort levels");
  for (std::size_t j = 0; j < comfort_levels.size(); ++j) {
    if (!(comfort_levels[j] > 0.0)) throw Error(ErrorKind::InvalidParams, "comfort levels must be > 0");
    if (j > 0 && !(comfort_levels[j] > comfort_levels[j - 1])) {
      throw Error(ErrorKind::InvalidParams, "comfort levels must be strictly increasing");
    }
  }
  if (wind_cooling_rates.size() < 2) throw Error(ErrorKind::InvalidParams, "need >= 2 wind states");
  if (wind_cooling_rates.front() != 0.0 || wind_cooling_rates.back() != c) {
    throw Error(ErrorKind::InvalidParams, "wind cooling rates must run from 0 to c");
  }
}

LoadParams make_load_params(double h, double c, std::vector<double> comfort_levels, int wind_states) {
  LoadParams p;
  p.h = h;
  p.c = c;
  p.comfort_levels = std::move(comfort_levels);
  if (wind_states < 2) throw Error(ErrorKind::InvalidParams, "need >= 2 wind states");
  p.wind_cooling_rates.resize(static_cast<std::size_t>(wind_states));
  for (int i = 0; i < wind_states; ++i) {
    p.wind_cooling_rates[static_cast<std::size_t>(i)] =
        i == wind_states - 1 ? c : i * c / (wind_states - 1);
  }
  p.validate();
  return p;
}

double z_policy_drift(const LoadState& state, int wind, int comfort, const LoadParams& params) {
  const double x = state.temperature;
  const double theta = params.level(comfort);
  if (wind == 0) {
    const double target = std::min(state.set_point, theta);
    if (x < target) return params.h;
    if (x > target) return -params.c;
    return 0.0;
  }
  if (x > theta) return -params.c;
  if (x > 0.0) return -params.wind_rate(wind);
  return 0.0;
}

PowerDraw power_draw(const LoadState& state, int wind, int comfort, const LoadParams& params) {
  const double x = state.temperature;
  const double theta = params.level(comfort);
  const double h = params.h;
  const double c = params.c;
  if (wind == 0) {
    const double target = std::min(state.set_point, theta);
    if (x > target) return {0.0, h + c};
    if (x == target) return {0.0, h};
    return {0.0, 0.0};
  }
  const double k = params.wind_rate(wind);
  if (x > theta) return {h + k, c - k};
  if (x > 0.0) return {h + k, 0.0};
  return {h, 0.0};
}

namespace {

void push(Path& path, double duration, double x0, double rate, PowerDraw power) {
  if (duration <= 0.0) return;
  path.pieces[static_cast<std::size_t>(path.count++)] = {duration, x0, rate, power};
}

}  // namespace

Path plan_path(double x, double set_point, int wind, int comfort, const LoadParams& params, double dt) {
  Path path;
  const double h = params.h;
  const double c = params.c;
  const double theta = params.level(comfort);
  double remaining = dt;

  if (wind == 0) {
    const double target = std::min(set_point, theta);
    if (x < target) {
      const double hit = (target - x) / h;
      if (hit >= remaining) {
        push(path, remaining, x, h, {0.0, 0.0});
        path.end = std::min(x + h * remaining, target);
        return path;
      }
      push(path, hit, x, h, {0.0, 0.0});
      remaining -= hit;
    } else if (x > target) {
      const double hit = (x - target) / c;
      if (hit >= remaining) {
        push(path, remaining, x, -c, {0.0, h + c});
        path.end = std::max(x - c * remaining, target);
        return path;
      }
      push(path, hit, x, -c, {0.0, h + c});
      remaining -= hit;
    }
    push(path, remaining, target, 0.0, {0.0, h});
    path.end = target;
    return path;
  }

  const double k = params.wind_rate(wind);
  if (x > theta) {
    const double hit = (x - theta) / c;
    if (hit >= remaining) {
      push(path, remaining, x, -c, {h + k, c - k});
      path.end = std::max(x - c * remaining, theta);
      return path;
    }
    push(path, hit, x, -c, {h + k, c - k});
    remaining -= hit;
    x = theta;
  }
  if (x > 0.0) {
    const double hit = x / k;
    if (hit >= remaining) {
      push(path, remaining, x, -k, {h + k, 0.0});
      path.end = std::max(x - k * remaining, 0.0);
      return path;
    }
    push(path, hit, x, -k, {h + k, 0.0});
    remaining -= hit;
  }
  push(path, remaining, 0.0, 0.0, {h, 0.0});
  path.end = 0.0;
  return path;
}

std::vector<LoadState> step_ensemble(std::span<const LoadState> states, EnvState env, double dt,
                                     const LoadParams& params) {
  std::vector<LoadState> out(states.begin(), states.end());
  for (auto& s : out) {
    s.temperature = plan_path(s.temperature, s.set_point, env.wind, env.comfort, params, dt).end;
  }
  return out;
}

}  // namespace tcl
