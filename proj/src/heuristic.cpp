#include "tcl/heuristic.hpp"

#include <algorithm>
#include <cmath>

namespace tcl {

PiecewiseDistribution PiecewiseDistribution::flat(double top, int level, Shape shape, double value) {
  PiecewiseDistribution d;
  d.top = top;
  d.level = level;
  d.shape = shape;
  d.alphas.assign(d.segments(), value);
  d.validate();
  return d;
}

void PiecewiseDistribution::validate() const {
  if (!(top > 0.0) || level < 0 || level > 20) throw Error(ErrorKind::InvalidParams, "bad partition");
  if (alphas.size() != segments()) throw Error(ErrorKind::NotADistribution, "one level per segment expected");
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0) || alphas[i] > 1.0 || (i > 0 && alphas[i] < alphas[i - 1])) {
      throw Error(ErrorKind::NotADistribution, "levels must be nondecreasing in [0, 1]");
    }
  }
}

ThresholdDistribution PiecewiseDistribution::distribution() const {
  validate();
  const std::size_t m = segments();
  const double width = top / static_cast<double>(m);
  std::vector<Knot> knots;
  if (shape == Shape::Constant) {
    knots.push_back({0.0, 0.0, alphas[0]});
    for (std::size_t i = 1; i < m; ++i) knots.push_back({width * static_cast<double>(i), alphas[i - 1], alphas[i]});
    knots.push_back({top, alphas[m - 1], 1.0});
  } else {
    knots.push_back({0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < m; ++i) {
      const double mid = width * (static_cast<double>(i) + 0.5);
      knots.push_back({mid, alphas[i], alphas[i]});
    }
    knots.push_back({top, 1.0, 1.0});
  }
  return ThresholdDistribution(std::move(knots));
}

PiecewiseDistribution PiecewiseDistribution::refined() const {
  PiecewiseDistribution out = *this;
  out.level = level + 1;
  out.alphas.clear();
  if (shape == Shape::Constant) {
    for (double a : alphas) {
      out.alphas.push_back(a);
      out.alphas.push_back(a);
    }
  } else {
    const ThresholdDistribution u = distribution();
    const double width = top / static_cast<double>(out.segments());
    for (std::size_t i = 0; i < out.segments(); ++i) out.alphas.push_back(u(width * (static_cast<double>(i) + 0.5)));
  }
  return out;
}

CostEstimate estimate_cost(const ThresholdDistribution& dist, const Episode& episode, const MarkovEnvironment& env,
                           const LoadParams& params, double gamma) {
  SimulationConfig cfg = episode.sim;
  cfg.set_points = dist.quantile_set_points(episode.loads);
  cfg.record_occupation = false;
  cfg.snapshot_limit = 0;
  cfg.trace_limit = 0;
  const SimulationResult r = simulate(cfg, env, params, gamma);
  return {r.empirical_cost.total, r.total_se};
}

CostOracle simulation_oracle(MarkovEnvironment env, LoadParams params, double gamma, Episode episode) {
  return [env = std::move(env), params = std::move(params), gamma, episode = std::move(episode)](
             const ThresholdDistribution& u) { return estimate_cost(u, episode, env, params, gamma); };
}

std::vector<double> isotonic_projection(const std::vector<double>& values) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> stack;
  for (double v : values) {
    stack.push_back({v, 1});
    while (stack.size() > 1) {
      const Block& b = stack.back();
      const Block& a = stack[stack.size() - 2];
      if (a.sum / static_cast<double>(a.count) <= b.sum / static_cast<double>(b.count)) break;
      const Block merged{a.sum + b.sum, a.count + b.count};
      stack.pop_back();
      stack.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : stack) out.insert(out.end(), b.count, std::clamp(b.sum / static_cast<double>(b.count), 0.0, 1.0));
  return out;
}

std::vector<double> adapt_step(const std::vector<double>& current, const std::vector<double>& previous, double j_current,
                               double j_previous, double epsilon, Rng& rng, int coordinate, double max_step) {
  if (current.size() != previous.size()) throw Error(ErrorKind::InvalidParams, "level vectors differ in length");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidParams, "learning rate must be positive");
  std::vector<double> next = current;
  const double nudge = 0.01 / static_cast<double>(current.size());
  for (std::size_t i = 0; i < current.size(); ++i) {
    if (coordinate >= 0 && static_cast<std::size_t>(coordinate) != i) continue;
    const double d = current[i] - previous[i];
    if (std::abs(d) < 1e-6) {
      next[i] += (2.0 * uniform01(rng) - 1.0) * nudge;
    } else {
      next[i] -= std::clamp(epsilon * (j_current - j_previous) / d, -max_step, max_step);
    }
  }
  return isotonic_projection(next);
}

RefinementResult successive_refinement(double top, const RefinementOptions& options, const CostOracle& oracle) {
  if (options.initial_level < 0 || options.max_level < options.initial_level) {
    throw Error(ErrorKind::InvalidParams, "bad refinement levels");
  }
  Rng rng = make_rng(options.seed, 0);
  RefinementResult res;
  PiecewiseDistribution cur = PiecewiseDistribution::flat(top, options.initial_level, options.shape, options.initial_value);

  auto evaluate = [&](const PiecewiseDistribution& d, int step, bool refinement) {
    const double j = oracle(d.distribution()).j;
    res.trace.push_back({d.level, step, d.alphas, j, refinement});
    if (res.trace.size() == 1 || j < res.best_j) {
      res.best = d;
      res.best_j = j;
    }
    return j;
  };

  double jc = evaluate(cur, 0, false);
  for (int level = options.initial_level;; ++level) {
    const double start = res.best_j;
    const std::size_t m = cur.segments();
    int calm = 0;
    for (int visit = 1; visit <= options.max_visits_per_level && calm < options.patience; ++visit) {
      const int i = static_cast<int>(static_cast<std::size_t>(visit - 1) % m);
      // Secant iterations on coordinate i alone, so every cost difference
      // is attributable to it.
      PiecewiseDistribution prev = cur;
      PiecewiseDistribution now = cur;
      now.alphas[static_cast<std::size_t>(i)] += options.probe;
      now.alphas = isotonic_projection(now.alphas);
      if (std::abs(now.alphas[static_cast<std::size_t>(i)] - cur.alphas[static_cast<std::size_t>(i)]) < 1e-9) {
        now.alphas = cur.alphas;
        now.alphas[static_cast<std::size_t>(i)] -= options.probe;
        now.alphas = isotonic_projection(now.alphas);
      }
      double j_prev = jc;
      double j_now = evaluate(now, visit, false);
      PiecewiseDistribution keep = j_now < jc ? now : cur;
      double j_keep = std::min(j_now, jc);
      for (int s = 0; s < options.secant_steps; ++s) {
        PiecewiseDistribution next = now;
        next.alphas = adapt_step(now.alphas, prev.alphas, j_now, j_prev, options.epsilon, rng, i);
        const double j_next = evaluate(next, visit, false);
        if (j_next < j_keep) {
          keep = next;
          j_keep = j_next;
        }
        prev = std::move(now);
        j_prev = j_now;
        now = std::move(next);
        j_now = j_next;
      }
      calm = jc - j_keep < options.delta_j * std::abs(jc) ? calm + 1 : 0;
      cur = std::move(keep);
      jc = j_keep;
    }
    res.best_per_level.push_back(res.best_j);
    if (level >= options.max_level) break;
    // No significant gain at this level: further splitting is not worth it.
    if (!(start - res.best_j >= options.delta_j * std::abs(res.best_j))) break;
    cur = res.best.refined();
    jc = evaluate(cur, 0, true);
  }
  return res;
}

}  // namespace tcl
