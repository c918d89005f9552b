#include "tcl/variational.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tcl {

namespace {

constexpr double kWeightFloor = 1e-12;

std::vector<double> fractions_from_v(const SensitivityCurves& curves, const std::vector<double>& v) {
  const std::size_t levels = curves.comfort_levels.size();
  const std::size_t middle = levels >= 2 ? levels - 2 : 0;
  if (v.size() != middle) {
    std::ostringstream msg;
    msg << "expected " << middle << " middle-level fractions, got " << v.size();
    throw Error(ErrorKind::InvalidParams, msg.str());
  }
  std::vector<double> f(levels, 0.0);
  for (std::size_t m = 0; m < middle; ++m) f[m + 1] = v[m];
  return f;
}

}  // namespace

ElCandidate euler_lagrange(const SensitivityCurves& curves, double gamma,
                           const std::vector<double>& level_fractions) {
  const std::vector<double> fractions =
      level_fractions.empty() ? std::vector<double>(curves.comfort_levels.size(), 0.0) : level_fractions;
  ElCandidate out;
  out.weight = curves.weight();
  const std::vector<double> cross = curves.cross(fractions);
  const std::size_t cells = curves.cells();
  out.raw.resize(cells);
  out.clamped.resize(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    const double w = out.weight[k];
    if (!(w > 0.0)) ++out.nonpositive_weight_cells;
    out.raw[k] = (gamma * curves.phi_prime[k] - cross[k]) / (2.0 * std::max(w, kWeightFloor));
    out.clamped[k] = std::clamp(out.raw[k], 0.0, 1.0);
  }
  return out;
}

ElCandidate multiwind_euler_lagrange(const SensitivityCurves& curves, double gamma, const std::vector<double>& v) {
  return euler_lagrange(curves, gamma, fractions_from_v(curves, v));
}

double Projection::at_node(std::size_t node) const {
  if (node >= values.size()) return 1.0;
  return values[node];
}

Projection project(const std::vector<double>& candidate, const std::vector<double>& weight,
                   const std::vector<double>& nodes) {
  const std::size_t n = candidate.size();
  if (weight.size() != n || nodes.size() != n + 1) {
    throw Error(ErrorKind::InvalidParams, "projection inputs disagree in length");
  }
  struct Block {
    double sum_wy, sum_w;
    std::size_t first, last;
  };
  std::vector<double> omega(n);
  for (std::size_t k = 0; k < n; ++k) omega[k] = std::max(weight[k], kWeightFloor) * (nodes[k + 1] - nodes[k]);

  std::vector<Block> stack;
  stack.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    stack.push_back({omega[k] * candidate[k], omega[k], k, k});
    while (stack.size() > 1) {
      const Block& b = stack.back();
      const Block& a = stack[stack.size() - 2];
      if (a.sum_wy / a.sum_w <= b.sum_wy / b.sum_w) break;
      Block merged{a.sum_wy + b.sum_wy, a.sum_w + b.sum_w, a.first, b.last};
      stack.pop_back();
      stack.back() = merged;
    }
  }

  Projection out;
  out.nodes = nodes;
  out.values.resize(n);
  for (const auto& b : stack) {
    const double kappa = b.sum_wy / b.sum_w;
    const double value = std::clamp(kappa, 0.0, 1.0);
    for (std::size_t k = b.first; k <= b.last; ++k) out.values[k] = value;
    if (b.last > b.first) {
      double resid = 0.0;
      for (std::size_t k = b.first; k <= b.last; ++k) resid += (kappa - candidate[k]) * omega[k];
      PooledBlock pb{b.first, b.last, kappa, value, std::abs(resid) / b.sum_w};
      out.max_area_residual = std::max(out.max_area_residual, pb.area_residual);
      out.blocks.push_back(pb);
    }
  }

  // lambda(z) = -2 int_0^z (u* - u_EL) w. Cells held at a bound are left
  // out: their residual belongs to the bound multiplier, not the costate.
  out.costate.assign(n + 1, 0.0);
  double lambda = 0.0;
  double floor = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = out.values[k];
    if (v > 0.0 && v < 1.0) lambda -= 2.0 * (v - candidate[k]) * omega[k];
    out.costate[k + 1] = lambda;
    floor = std::min(floor, lambda);
  }
  out.min_costate = floor;
  return out;
}

Projection project_for(const SensitivityCurves& curves, double gamma, const std::vector<double>& v) {
  const ElCandidate cand = multiwind_euler_lagrange(curves, gamma, v);
  return project(cand.raw, cand.weight, curves.nodes);
}

FixedPointResult fixed_point(const SensitivityCurves& curves, double gamma, double tol, int max_iter, double v0) {
  if (!(tol > 0.0)) throw Error(ErrorKind::InvalidParams, "tolerance must be positive");
  const std::size_t levels = curves.comfort_levels.size();
  const std::size_t middle = levels >= 2 ? levels - 2 : 0;
  FixedPointResult res;
  res.v.assign(middle, std::clamp(v0, 0.0, 1.0));
  res.trace.resize(middle);

  std::vector<std::size_t> level_nodes(middle);
  for (std::size_t m = 0; m < middle; ++m) level_nodes[m] = curves.level_node(static_cast<int>(m + 1));

  auto image = [&](const std::vector<double>& v, std::size_t m) {
    ++res.iterations;
    return project_for(curves, gamma, v).at_node(level_nodes[m]);
  };
  auto residual_of = [&](std::size_t m) {
    std::vector<double> v = res.v;
    return std::abs(v[m] - image(v, m));
  };

  int evaluations_left = max_iter;
  auto solve_coordinate = [&](std::size_t m) {
    auto& trace = res.trace[m];
    std::vector<double> v = res.v;
    const double f0 = image(v, m);
    double up = std::max(v[m], f0);
    double down = std::min(v[m], f0);
    trace.push_back({v[m], f0, up, down});
    if (std::abs(v[m] - f0) <= tol) return;
    // The image itself is the first candidate: it is exact when the middle
    // level does not feed back into the candidate.
    {
      std::vector<double> trial = v;
      trial[m] = f0;
      const double f1 = image(trial, m);
      if (std::abs(f0 - f1) <= tol) {
        res.v[m] = f0;
        return;
      }
    }
    while (true) {
      if (--evaluations_left < 0) {
        std::ostringstream msg;
        msg << "bracket [" << down << ", " << up << "] after " << max_iter << " iterations";
        throw Error(ErrorKind::NoConvergence, msg.str());
      }
      v[m] = 0.5 * (up + down);
      const double f = image(v, m);
      up = std::min(up, std::max(v[m], f));
      down = std::max(down, std::min(v[m], f));
      trace.push_back({v[m], f, up, down});
      if (std::abs(v[m] - f) <= tol) break;
    }
    res.v[m] = v[m];
  };

  for (int sweep = 0; middle > 0; ++sweep) {
    for (std::size_t m = 0; m < middle; ++m) solve_coordinate(m);
    double worst = 0.0;
    for (std::size_t m = 0; m < middle; ++m) worst = std::max(worst, residual_of(m));
    res.residual = worst;
    if (worst <= tol || middle == 1) break;
    if (evaluations_left <= 0 || sweep >= max_iter) {
      throw Error(ErrorKind::NoConvergence, "round-robin sweeps did not settle");
    }
  }
  res.candidate = multiwind_euler_lagrange(curves, gamma, res.v);
  res.projection = project(res.candidate.raw, res.candidate.weight, curves.nodes);
  return res;
}

OptimizationResult optimize(const SensitivityCurves& curves, double gamma, double tol, int max_iter) {
  FixedPointResult fp = fixed_point(curves, gamma, tol, max_iter);
  OptimizationResult out{fp.candidate, fp.projection, fp.projection.distribution(), {}, fp.v, fp.trace};
  out.cost = continuum_cost(out.u, curves, gamma);
  return out;
}

}  // namespace tcl
