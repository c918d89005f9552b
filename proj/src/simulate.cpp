#include "tcl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tcl/parallel.hpp"
#include "tcl/random.hpp"

namespace tcl {

namespace {

// int_0^d ((e0 + slope t)^+)^2 dt for the linear excess e(t).
double excess_sq_integral(double e0, double e1, double d) {
  if (e0 <= 0.0 && e1 <= 0.0) return 0.0;
  if (e0 >= 0.0 && e1 >= 0.0) return d * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0;
  const double peak = std::max(e0, e1);
  const double len = d * peak / std::abs(e1 - e0);
  return len * peak * peak / 3.0;
}

class OccupationBuilder {
 public:
  OccupationBuilder(double top, int bins)
      : top_(top), width_(top / bins), slope_(static_cast<std::size_t>(bins) + 2, 0.0),
        icpt_(static_cast<std::size_t>(bins) + 2, 0.0) {}

  void rest(double x, double d) {
    for (auto& a : atoms_) {
      if (a.first == x) {
        a.second += d;
        return;
      }
    }
    atoms_.emplace_back(x, d);
  }

  void move(double x0, double x1, double d) {
    const double lo = std::min(x0, x1);
    const double hi = std::max(x0, x1);
    if (!(hi > lo)) {
      rest(lo, d);
      return;
    }
    const double c = d / (hi - lo);
    const std::size_t last = slope_.size() - 1;
    const std::size_t i1 = std::min(last, static_cast<std::size_t>(std::ceil(lo / width_)));
    const std::size_t i2 = std::min(last, static_cast<std::size_t>(std::ceil(hi / width_)));
    slope_[i1] += c;
    slope_[i2] -= c;
    icpt_[i1] -= c * lo;
    icpt_[i2] += c * lo + c * (hi - lo);
  }

  Occupation finish(double total_time) const {
    Occupation occ;
    occ.top = top_;
    const std::size_t bins = slope_.size() - 2;
    occ.bins.resize(bins);
    double s = 0.0, b = 0.0, prev = 0.0;
    for (std::size_t i = 0; i <= bins; ++i) {
      s += slope_[i];
      b += icpt_[i];
      const double g = s * (static_cast<double>(i) * width_) + b;
      if (i > 0) occ.bins[i - 1] = std::max(0.0, g - prev);
      prev = g;
    }
    occ.atoms = atoms_;
    std::sort(occ.atoms.begin(), occ.atoms.end());
    occ.total_time = total_time;
    return occ;
  }

 private:
  double top_;
  double width_;
  std::vector<double> slope_;
  std::vector<double> icpt_;
  std::vector<std::pair<double, double>> atoms_;
};

struct JumpTable {
  std::vector<std::vector<std::pair<int, double>>> next;  // cumulative targets per state
  std::vector<double> exit;
};

JumpTable jump_table(const MarkovEnvironment& env) {
  JumpTable t;
  const int n = env.size();
  t.next.resize(static_cast<std::size_t>(n));
  t.exit.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    double cum = 0.0;
    for (int to = 0; to < n; ++to) {
      if (to == s) continue;
      const double r = env.generator()(to, s);
      if (r <= 0.0) continue;
      cum += r;
      t.next[static_cast<std::size_t>(s)].emplace_back(to, cum);
    }
    t.exit[static_cast<std::size_t>(s)] = cum;
  }
  return t;
}

int sample_index(const Eigen::VectorXd& p, Rng& rng) {
  const double u = uniform01(rng) * p.sum();
  double cum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    cum += p(i);
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

}  // namespace

double Occupation::cdf(double x) const {
  if (total_time <= 0.0) throw Error(ErrorKind::MissingOccupation, "no occupation time recorded");
  if (x < 0.0) return 0.0;
  double t = 0.0;
  for (const auto& a : atoms) {
    if (a.first <= x) t += a.second;
  }
  const double width = top / static_cast<double>(bins.size());
  const double pos = std::min(x, top) / width;
  const std::size_t full = std::min(bins.size(), static_cast<std::size_t>(pos));
  for (std::size_t b = 0; b < full; ++b) t += bins[b];
  if (full < bins.size()) t += bins[full] * (pos - static_cast<double>(full));
  return std::min(1.0, t / total_time);
}

std::vector<double> Occupation::exact_points() const {
  std::vector<double> pts;
  pts.reserve(bins.size() + 1 + atoms.size());
  const double width = top / static_cast<double>(bins.size());
  for (std::size_t i = 0; i <= bins.size(); ++i) pts.push_back(static_cast<double>(i) * width);
  for (const auto& a : atoms) pts.push_back(a.first);
  std::sort(pts.begin(), pts.end());
  return pts;
}

SimulationResult simulate(const SimulationConfig& config, const MarkovEnvironment& env, const LoadParams& params,
                          double gamma) {
  params.validate();
  if (config.set_points.empty()) throw Error(ErrorKind::InvalidParams, "simulation needs at least one load");
  if (config.jumps <= 0) throw Error(ErrorKind::InvalidParams, "horizon must be positive");
  for (double z : config.set_points) {
    if (!(z >= 0.0) || z > params.top()) throw Error(ErrorKind::InvalidSetPoint, "set-point outside [0, top]");
  }
  const std::size_t n = config.set_points.size();
  const double nn = static_cast<double>(n);
  const auto& zs = config.set_points;

  Rng rng = make_rng(config.seed, 0);
  const JumpTable table = jump_table(env);
  int state = sample_index(env.stationary(), rng);
  std::vector<double> x(n, 0.0);

  const std::int64_t burn = static_cast<std::int64_t>(config.burn_in * static_cast<double>(config.jumps));
  const std::int64_t measured = config.jumps - burn;
  const int batches = std::max(1, static_cast<int>(std::min<std::int64_t>(config.batches, measured)));
  std::vector<double> batch_time(static_cast<std::size_t>(batches), 0.0);
  std::vector<double> batch_cost(static_cast<std::size_t>(batches), 0.0);

  std::vector<OccupationBuilder> occ;
  if (config.record_occupation) occ.assign(n, OccupationBuilder(params.top(), config.occupation_bins));

  SimulationResult res;
  res.set_points = zs;
  double total_time = 0.0, power_int = 0.0, disc_int = 0.0;
  std::vector<std::pair<double, double>> events;
  events.reserve(2 * n);
  // A stuck environment still needs finite intervals to advance the loads.
  const double idle = 10.0 * params.top() / std::min(params.h, params.c);

  for (std::int64_t jump = 0; jump < config.jumps; ++jump) {
    const double exit = table.exit[static_cast<std::size_t>(state)];
    const double tau = exit > 0.0 ? exponential(rng, exit) : idle;
    const EnvState e = env.state(state);
    const double theta = params.level(e.comfort);
    const bool measuring = jump >= burn;

    if (measuring && res.snapshots.size() < config.snapshot_limit) res.snapshots.push_back(x);
    if (measuring && res.trace.size() < config.trace_limit) {
      for (std::size_t i = 0; i < n; ++i) {
        const PowerDraw p = power_draw({x[i], zs[i]}, e.wind, e.comfort, params);
        res.trace.push_back({total_time, static_cast<int>(i), x[i], e.wind, e.comfort, p.grid_power, p.wind_power});
      }
    }

    double p0 = 0.0, disc = 0.0;
    events.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Path path = plan_path(x[i], zs[i], e.wind, e.comfort, params, tau);
      if (measuring) {
        double t = 0.0;
        for (int k = 0; k < path.count; ++k) {
          const PathPiece& pc = path.pieces[static_cast<std::size_t>(k)];
          if (k == 0) {
            p0 += pc.power.grid_power;
          } else {
            const double delta = pc.power.grid_power - path.pieces[static_cast<std::size_t>(k) - 1].power.grid_power;
            if (delta != 0.0) events.emplace_back(t, delta);
          }
          const double x1 = k + 1 < path.count ? path.pieces[static_cast<std::size_t>(k) + 1].x0 : path.end;
          disc += excess_sq_integral(pc.x0 - theta, x1 - theta, pc.duration);
          if (!occ.empty()) {
            if (pc.rate == 0.0) {
              occ[i].rest(pc.x0, pc.duration);
            } else {
              occ[i].move(pc.x0, x1, pc.duration);
            }
          }
          t += pc.duration;
        }
      }
      x[i] = path.end;
    }

    if (measuring) {
      std::sort(events.begin(), events.end());
      double cur = p0, last = 0.0, area = 0.0;
      double peak = cur;
      for (const auto& ev : events) {
        area += cur * cur * (ev.first - last);
        cur += ev.second;
        last = ev.first;
        peak = std::max(peak, cur);
      }
      area += cur * cur * (tau - last);
      const double power = area / (nn * nn);
      const double discomfort = disc / nn;
      res.peak_grid_power = std::max(res.peak_grid_power, peak / nn);
      power_int += power;
      disc_int += discomfort;
      total_time += tau;
      const auto b = static_cast<std::size_t>((jump - burn) * batches / measured);
      batch_time[b] += tau;
      batch_cost[b] += power + gamma * discomfort;
    }

    if (exit > 0.0) {
      const double u = uniform01(rng) * exit;
      const auto& next = table.next[static_cast<std::size_t>(state)];
      int to = next.back().first;
      for (const auto& [target, cum] : next) {
        if (u < cum) {
          to = target;
          break;
        }
      }
      state = to;
    }
  }

  res.averaged_time = total_time;
  res.empirical_cost = make_report(power_int / total_time, disc_int / total_time, gamma);
  if (batches > 1) {
    double mean = 0.0, m2 = 0.0;
    for (int b = 0; b < batches; ++b) mean += batch_cost[static_cast<std::size_t>(b)] / batch_time[static_cast<std::size_t>(b)];
    mean /= batches;
    for (int b = 0; b < batches; ++b) {
      const double d = batch_cost[static_cast<std::size_t>(b)] / batch_time[static_cast<std::size_t>(b)] - mean;
      m2 += d * d;
    }
    res.total_se = std::sqrt(m2 / (batches - 1) / batches);
  } else {
    res.total_se = std::numeric_limits<double>::infinity();
  }
  for (auto& o : occ) res.occupation.push_back(o.finish(total_time));
  return res;
}

std::vector<SimulationResult> simulate_replications(const SimulationConfig& config, const MarkovEnvironment& env,
                                                    const LoadParams& params, double gamma, int count, int workers) {
  std::vector<SimulationResult> out(static_cast<std::size_t>(std::max(0, count)));
  parallel_for(out.size(), workers, [&](std::size_t r) {
    SimulationConfig c = config;
    c.seed = child_seed(config.seed, r);
    out[r] = simulate(c, env, params, gamma);
  });
  return out;
}

EmpiricalCdf empirical_cdf(const SimulationResult& result) {
  if (result.occupation.empty()) throw Error(ErrorKind::MissingOccupation, "occupation was not recorded");
  EmpiricalCdf out;
  out.per_load = result.occupation;
  Occupation agg = result.occupation.front();
  const double loads = static_cast<double>(result.occupation.size());
  std::fill(agg.bins.begin(), agg.bins.end(), 0.0);
  agg.atoms.clear();
  for (const auto& o : result.occupation) {
    for (std::size_t b = 0; b < agg.bins.size(); ++b) agg.bins[b] += o.bins[b] / loads;
    for (const auto& a : o.atoms) {
      auto it = std::find_if(agg.atoms.begin(), agg.atoms.end(), [&](const auto& p) { return p.first == a.first; });
      if (it == agg.atoms.end()) {
        agg.atoms.emplace_back(a.first, a.second / loads);
      } else {
        it->second += a.second / loads;
      }
    }
  }
  std::sort(agg.atoms.begin(), agg.atoms.end());
  out.aggregate = std::move(agg);
  return out;
}

double cdf_sup_distance(const Occupation& occupation, const StationaryDistribution& dist) {
  double worst = 0.0;
  for (double p : occupation.exact_points()) {
    const double emp = occupation.cdf(p);
    const double ana = dist.cdf(p);
    worst = std::max(worst, std::abs(emp - ana));
    // Left limits matter at atoms.
    double emp_atom = 0.0;
    for (const auto& a : occupation.atoms) {
      if (a.first == p) emp_atom += a.second / occupation.total_time;
    }
    double ana_atom = 0.0;
    for (const auto& pm : dist.point_masses) {
      if (pm.location == p) ana_atom += pm.mass;
    }
    worst = std::max(worst, std::abs((emp - emp_atom) - (ana - ana_atom)));
  }
  return worst;
}

DominanceReport check_dominance(const std::vector<double>& set_points,
                                const std::vector<std::vector<double>>& snapshots) {
  std::vector<int> order(set_points.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return set_points[static_cast<std::size_t>(a)] < set_points[static_cast<std::size_t>(b)]; });
  DominanceReport rep;
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    const auto& x = snapshots[s];
    // Highest temperature among strictly smaller set-points seen so far.
    double prev_max = -std::numeric_limits<double>::infinity();
    int prev_arg = -1;
    double group_max = -std::numeric_limits<double>::infinity();
    int group_arg = -1;
    for (std::size_t k = 0; k < order.size(); ++k) {
      const int i = order[k];
      const double zi = set_points[static_cast<std::size_t>(i)];
      if (k > 0 && zi != set_points[static_cast<std::size_t>(order[k - 1])]) {
        if (group_max > prev_max) {
          prev_max = group_max;
          prev_arg = group_arg;
        }
        group_max = -std::numeric_limits<double>::infinity();
      } else if (k > 0 && x[static_cast<std::size_t>(i)] != x[static_cast<std::size_t>(order[k - 1])]) {
        return {false, s, order[k - 1], i};
      }
      if (x[static_cast<std::size_t>(i)] < prev_max) return {false, s, prev_arg, i};
      if (x[static_cast<std::size_t>(i)] > group_max) {
        group_max = x[static_cast<std::size_t>(i)];
        group_arg = i;
      }
    }
  }
  return rep;
}

DominanceReport check_dominance(const SimulationResult& result) {
  return check_dominance(result.set_points, result.snapshots);
}

}  // namespace tcl
