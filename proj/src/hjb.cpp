#include "tcl/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tcl/parallel.hpp"
#include "tcl/random.hpp"

namespace tcl {

namespace {

struct Limits {
  double wind = 0.0;
  double grid = 0.0;
};

Limits resolve(const LoadParams& params, const HjbOptions& options) {
  return {options.wind_power > 0.0 ? options.wind_power : params.h + params.c,
          options.max_grid > 0.0 ? options.max_grid : params.h + params.c};
}

void check_instance(const MarkovEnvironment& env, const LoadParams& params, const HjbOptions& options) {
  params.validate();
  if (env.wind_states() != 2 || env.comfort_levels() != 2 || params.comfort_count() != 2) {
    throw Error(ErrorKind::InvalidParams, "the two-load solver needs wind on/off and two comfort levels");
  }
  if (options.cells < 2) throw Error(ErrorKind::InvalidParams, "need at least two cells per axis");
  if (!(options.horizon > 0.0)) throw Error(ErrorKind::InvalidParams, "horizon must be positive");
  if (options.wind_power < 0.0 || options.max_grid < 0.0 || options.time_step < 0.0) {
    throw Error(ErrorKind::InvalidParams, "negative power or time step");
  }
}

struct Choice {
  double h = std::numeric_limits<double>::infinity();
  double wind1 = 0.0, wind2 = 0.0, grid1 = 0.0, grid2 = 0.0, drift1 = 0.0, drift2 = 0.0;
};

// Per-load geometry of one node for one comfort level.
struct Side {
  double back = 0.0, fwd = 0.0;  // one-sided differences, inward at the edges
  bool forced = false, at_level = false, at_zero = false;
};

double upwind(const Side& s, double drift) { return drift >= 0.0 ? s.fwd : s.back; }

// Best action for one wind split: both loads at their lower grid bound, or
// the closed-form extra grid power on one load using either one-sided
// gradient.
Choice best_for_wind(const Side& a, const Side& b, double w1, double w2, double h, double m) {
  auto bounds = [&](const Side& s, double w, double& used, double& lo, double& hi) {
    used = s.at_zero ? std::min(w, h) : w;
    if (s.forced) {
      lo = hi = m;
    } else {
      lo = s.at_level ? std::max(0.0, h - w) : 0.0;
      hi = s.at_zero ? std::max(0.0, h - used) : m;
      lo = std::min(lo, hi);
    }
  };
  double u1, lo1, hi1, u2, lo2, hi2;
  bounds(a, w1, u1, lo1, hi1);
  bounds(b, w2, u2, lo2, hi2);

  Choice best;
  auto consider = [&](double g1, double g2) {
    const double f1 = h - u1 - g1;
    const double f2 = h - u2 - g2;
    const double total = g1 + g2;
    const double value = total * total + f1 * upwind(a, f1) + f2 * upwind(b, f2);
    if (value < best.h) best = {value, w1, w2, g1, g2, f1, f2};
  };
  consider(lo1, lo2);
  const double base = lo1 + lo2;
  for (double g : {a.back, a.fwd}) consider(lo1 + std::clamp(0.5 * g - base, 0.0, hi1 - lo1), lo2);
  for (double g : {b.back, b.fwd}) consider(lo1, lo2 + std::clamp(0.5 * g - base, 0.0, hi2 - lo2));
  return best;
}

}  // namespace

double hjb_stability_bound(const LoadParams& params, const HjbOptions& options) {
  const Limits lim = resolve(params, options);
  const double dx = params.top() / options.cells;
  return dx / (params.h + params.c + lim.wind);
}

HjbSolution solve_hjb(const MarkovEnvironment& env, const LoadParams& params, const HjbOptions& options) {
  check_instance(env, params, options);
  const Limits lim = resolve(params, options);
  const int n = options.cells + 1;
  const double dx = params.top() / options.cells;
  const double bound = hjb_stability_bound(params, options);
  const Eigen::MatrixXd& q = env.generator();
  const int states = env.size();

  double dt_max = options.time_step;
  if (dt_max > bound * (1.0 + 1e-12)) {
    throw Error(ErrorKind::UnstableScheme, "time step exceeds grid step / (h + c + W)");
  }
  if (dt_max == 0.0) {
    // Keeps every update a convex combination: two drifts plus switching.
    double exit = 0.0;
    for (int s = 0; s < states; ++s) exit = std::max(exit, env.exit_rate(s));
    dt_max = 1.0 / (2.0 / bound + exit);
  }
  const int steps = static_cast<int>(std::ceil(options.horizon / dt_max - 1e-9));
  const double dt = options.horizon / steps;

  HjbSolution out;
  out.wind_power = lim.wind;
  out.max_grid = lim.grid;
  out.time_step = dt;
  out.value.dx = dx;
  out.value.horizon = options.horizon;
  out.value.steps = steps;
  std::vector<Eigen::MatrixXd> v(static_cast<std::size_t>(states), Eigen::MatrixXd::Zero(n, n));
  std::vector<Eigen::MatrixXd> next = v;

  AllocationPolicy& pol = out.policy;
  for (auto* field : {&pol.wind1, &pol.wind2, &pol.grid1, &pol.grid2, &pol.drift1, &pol.drift2}) {
    field->assign(static_cast<std::size_t>(states), Eigen::MatrixXd::Zero(n, n));
  }
  pol.tie.assign(static_cast<std::size_t>(states), Eigen::MatrixXi::Zero(n, n));

  const double tol_level = 1e-9 * dx;
  auto side = [&](const Eigen::MatrixXd& m, int i, int j, bool first, double level) {
    const int k = first ? i : j;
    auto at = [&](int kk) { return first ? m(kk, j) : m(i, kk); };
    Side s;
    const double here = at(k);
    const double back = k > 0 ? (here - at(k - 1)) / dx : (at(k + 1) - here) / dx;
    const double fwd = k < n - 1 ? (at(k + 1) - here) / dx : back;
    s.back = back;
    s.fwd = fwd;
    const double x = k * dx;
    s.forced = x > level + tol_level;
    s.at_level = !s.forced && x >= level - tol_level;
    s.at_zero = k == 0;
    return s;
  };

  for (int step = 1; step <= steps; ++step) {
    const bool last = step == steps;
    parallel_for(static_cast<std::size_t>(states * n), options.workers, [&](std::size_t task) {
      const int s = static_cast<int>(task) / n;
      const int i = static_cast<int>(task) % n;
      const EnvState e = env.state(s);
      const double level = params.level(e.comfort);
      const auto& cur = v[static_cast<std::size_t>(s)];
      for (int j = 0; j < n; ++j) {
        const Side a = side(cur, i, j, true, level);
        const Side b = side(cur, i, j, false, level);
        Choice best;
        bool tie = false;
        if (e.wind == 0) {
          best = best_for_wind(a, b, 0.0, 0.0, params.h, lim.grid);
        } else {
          const Choice c1 = best_for_wind(a, b, lim.wind, 0.0, params.h, lim.grid);
          const Choice c2 = best_for_wind(a, b, 0.0, lim.wind, params.h, lim.grid);
          best = c2.h < c1.h ? c2 : c1;
          tie = std::abs(c1.h - c2.h) <= options.tie_tolerance * std::max(1.0, std::abs(best.h));
        }
        double switching = 0.0;
        for (int t = 0; t < states; ++t) {
          if (t != s) switching += q(t, s) * (v[static_cast<std::size_t>(t)](i, j) - cur(i, j));
        }
        next[static_cast<std::size_t>(s)](i, j) = cur(i, j) + dt * (best.h + switching);
        if (last) {
          const auto ss = static_cast<std::size_t>(s);
          pol.wind1[ss](i, j) = best.wind1;
          pol.wind2[ss](i, j) = best.wind2;
          pol.grid1[ss](i, j) = best.grid1;
          pol.grid2[ss](i, j) = best.grid2;
          pol.drift1[ss](i, j) = best.drift1;
          pol.drift2[ss](i, j) = best.drift2;
          pol.tie[ss](i, j) = tie ? 1 : 0;
        }
      }
    });
    std::swap(v, next);
  }
  out.value.values = std::move(v);
  return out;
}

std::vector<std::vector<PolicyLabel>> classify_policy(const HjbSolution& solution, const LoadParams& params,
                                                      int state) {
  (void)params;
  const auto s = static_cast<std::size_t>(state);
  if (s >= solution.policy.drift1.size()) throw Error(ErrorKind::InvalidParams, "no such environment state");
  const int n = solution.value.nodes();
  const double eps = 1e-9;
  std::vector<std::vector<PolicyLabel>> out(static_cast<std::size_t>(n),
                                            std::vector<PolicyLabel>(static_cast<std::size_t>(n), PolicyLabel::Neutral));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double rate = (i > j ? 1.0 : -1.0) * (solution.policy.drift1[s](i, j) - solution.policy.drift2[s](i, j));
      auto& label = out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (rate < -eps) label = PolicyLabel::Synchronizing;
      else if (rate > eps) label = PolicyLabel::Desynchronizing;
    }
  }
  return out;
}

int cooler_load_wind_cells(const HjbSolution& solution, int state) {
  const auto s = static_cast<std::size_t>(state);
  if (s >= solution.policy.wind1.size()) throw Error(ErrorKind::InvalidParams, "no such environment state");
  const auto& p = solution.policy;
  const int n = solution.value.nodes();
  int count = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j || p.tie[s](i, j) != 0) continue;
      const bool to1 = p.wind1[s](i, j) > 0.0;
      const bool to2 = p.wind2[s](i, j) > 0.0;
      if ((i < j && to1 && !to2) || (j < i && to2 && !to1)) ++count;
    }
  }
  return count;
}

std::vector<double> self_convergence(const MarkovEnvironment& env, const LoadParams& params, HjbOptions options,
                                     const std::vector<int>& cells) {
  if (cells.size() < 2) throw Error(ErrorKind::InvalidParams, "need at least two grids");
  for (std::size_t k = 1; k < cells.size(); ++k) {
    if (cells[k] <= cells[k - 1] || cells[k] % cells[0] != 0) {
      throw Error(ErrorKind::InvalidParams, "grids must be nested and increasing");
    }
  }
  std::vector<ValueGrid> grids;
  for (int m : cells) {
    options.cells = m;
    options.time_step = 0.0;
    grids.push_back(solve_hjb(env, params, options).value);
  }
  const int coarse = cells[0];
  std::vector<double> out;
  for (std::size_t k = 1; k < grids.size(); ++k) {
    const int ra = cells[k - 1] / coarse;
    const int rb = cells[k] / coarse;
    double sup = 0.0;
    for (std::size_t s = 0; s < grids[k].values.size(); ++s) {
      for (int i = 0; i <= coarse; ++i) {
        for (int j = 0; j <= coarse; ++j) {
          sup = std::max(sup, std::abs(grids[k].values[s](i * rb, j * rb) - grids[k - 1].values[s](i * ra, j * ra)));
        }
      }
    }
    out.push_back(sup);
  }
  return out;
}

std::vector<PowerDraw> coolest_first_heuristic(const std::vector<double>& temperatures, double wind_available,
                                               int comfort, const LoadParams& params, double max_grid,
                                               double activation) {
  const std::size_t n = temperatures.size();
  std::vector<PowerDraw> out(n);
  if (n == 0) return out;
  const double level = params.level(comfort);
  auto cap = [&](std::size_t k) { return temperatures[k] <= 0.0 ? params.h : params.h + params.c; };

  double need = 0.0;
  for (std::size_t k = 0; k < n; ++k) need += cap(k);
  const double mean = std::accumulate(temperatures.begin(), temperatures.end(), 0.0) / static_cast<double>(n);
  const bool coolest = wind_available < need && mean > activation;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return coolest ? temperatures[a] < temperatures[b] : temperatures[a] > temperatures[b];
  });
  double left = std::max(0.0, wind_available);
  for (std::size_t k : order) {
    const double w = std::min(left, cap(k));
    out[k].wind_power = w;
    left -= w;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (temperatures[k] > level) out[k].grid_power = max_grid;
    else if (temperatures[k] >= level) out[k].grid_power = std::max(0.0, params.h - out[k].wind_power);
  }
  return out;
}

StvComparison compare_stv_policies(const MarkovEnvironment& env, const LoadParams& params, int loads,
                                   double wind_total, double max_grid, double activation, double horizon, double dt,
                                   std::uint64_t seed) {
  params.validate();
  if (env.wind_states() != 2 || env.comfort_levels() != 2 || params.comfort_count() != 2) {
    throw Error(ErrorKind::InvalidParams, "needs wind on/off and two comfort levels");
  }
  if (loads < 1 || !(horizon > 0.0) || !(dt > 0.0)) throw Error(ErrorKind::InvalidParams, "bad run settings");
  const double m = max_grid > 0.0 ? max_grid : params.h + params.c;

  // Shared environment path.
  Rng rng = make_rng(seed, 0);
  const Eigen::VectorXd pi = env.stationary();
  int s = 0;
  for (double u = uniform01(rng), acc = 0.0; s < env.size() - 1; ++s) {
    acc += pi(s);
    if (u < acc) break;
  }
  std::vector<std::pair<double, int>> path{{0.0, s}};
  for (double t = 0.0;;) {
    const double rate = env.exit_rate(s);
    if (rate <= 0.0) break;
    t += exponential(rng, rate);
    if (t >= horizon) break;
    double u = uniform01(rng) * rate, acc = 0.0;
    int to = s;
    for (int k = 0; k < env.size(); ++k) {
      if (k == s) continue;
      acc += env.generator()(k, s);
      to = k;
      if (u < acc) break;
    }
    s = to;
    path.emplace_back(t, s);
  }

  auto run = [&](double active) {
    StvRun r;
    std::vector<double> x(static_cast<std::size_t>(loads), 0.0);
    std::size_t seg = 0;
    double sq = 0.0, window = 0.0;
    bool in_window = false;
    const auto steps = static_cast<std::int64_t>(std::ceil(horizon / dt));
    for (std::int64_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      while (seg + 1 < path.size() && path[seg + 1].first <= t) {
        const EnvState from = env.state(path[seg].second);
        ++seg;
        const EnvState to = env.state(path[seg].second);
        if (in_window) r.mean_switch_peak += window;
        in_window = to.comfort < from.comfort;
        if (in_window) {
          ++r.down_switches;
          window = 0.0;
        }
      }
      const EnvState e = env.state(path[seg].second);
      const auto draw = coolest_first_heuristic(x, e.wind == 1 ? wind_total : 0.0, e.comfort, params, m, active);
      double grid = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        grid += draw[i].grid_power;
        x[i] = std::clamp(x[i] + dt * (params.h - draw[i].wind_power - draw[i].grid_power), 0.0, params.top());
      }
      grid /= loads;
      r.peak_grid = std::max(r.peak_grid, grid);
      if (in_window) window = std::max(window, grid);
      sq += grid * grid * dt;
    }
    if (in_window) r.mean_switch_peak += window;
    if (r.down_switches > 0) r.mean_switch_peak /= r.down_switches;
    r.mean_sq_grid = sq / (static_cast<double>(steps) * dt);
    return r;
  };
  return {run(activation), run(std::numeric_limits<double>::infinity())};
}

}  // namespace tcl
