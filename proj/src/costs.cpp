#include "tcl/costs.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tcl {

CostReport make_report(double power, double discomfort, double gamma) {
  return {power, discomfort, gamma, power + gamma * discomfort};
}

double CostTerm::alpha_for(const std::vector<double>& level_fractions) const {
  if (coupled_level < 0) return alpha;
  return alpha * (1.0 - level_fractions.at(static_cast<std::size_t>(coupled_level)));
}

std::size_t SensitivityCurves::level_node(int comfort) const {
  const double theta = comfort_levels.at(static_cast<std::size_t>(comfort));
  auto it = std::lower_bound(nodes.begin(), nodes.end(), theta);
  if (it == nodes.end() || *it != theta) throw Error(ErrorKind::InvalidParams, "comfort level is not a grid node");
  return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<double> SensitivityCurves::weight() const {
  std::vector<double> w(cells(), 0.0);
  for (const auto& t : terms) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] += t.beta * t.beta * t.density[k];
  }
  return w;
}

std::vector<double> SensitivityCurves::cross(const std::vector<double>& level_fractions) const {
  std::vector<double> out(cells(), 0.0);
  for (const auto& t : terms) {
    const double ab = 2.0 * t.alpha_for(level_fractions) * t.beta;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += ab * t.density[k];
  }
  return out;
}

namespace {

std::vector<double> named(const SensitivityCurves& curves, const std::string& prefix) {
  std::vector<double> out(curves.cells(), 0.0);
  for (const auto& t : curves.terms) {
    if (t.name.rfind(prefix, 0) != 0) continue;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += t.density[k];
  }
  return out;
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - xs.begin()) - 1;
  const double t = (x - xs[k]) / (xs[k + 1] - xs[k]);
  return ys[k] + t * (ys[k + 1] - ys[k]);
}

}  // namespace

std::vector<double> SensitivityCurves::d_top() const { return named(*this, "top"); }
std::vector<double> SensitivityCurves::d_first() const { return named(*this, "first"); }
std::vector<double> SensitivityCurves::d_hat() const { return named(*this, "tail"); }

double SensitivityCurves::interpolate_phi(double z) const { return interp(nodes, phi, z); }
double SensitivityCurves::interpolate(const CostTerm& term, double z) const { return interp(nodes, term.curve, z); }

std::vector<double> make_z_grid(const LoadParams& params, double dz) {
  if (dz <= 0.0) dz = params.top() / 400.0;
  std::vector<double> nodes{0.0};
  double lo = 0.0;
  for (double theta : params.comfort_levels) {
    if (theta <= lo) continue;
    const int cells = std::max(1, static_cast<int>(std::lround((theta - lo) / dz)));
    for (int i = 1; i < cells; ++i) nodes.push_back(lo + (theta - lo) * i / cells);
    nodes.push_back(theta);
    lo = theta;
  }
  return nodes;
}

SensitivityCurves sensitivity_curves(const MarkovEnvironment& env, const LoadParams& params,
                                     const std::vector<double>& nodes, int workers) {
  if (nodes.size() < 2 || nodes.front() != 0.0 || nodes.back() != params.top()) {
    throw Error(ErrorKind::InvalidParams, "grid must span [0, top]");
  }
  const PointMassCurves pm = point_mass_curves(env, params, nodes, workers);
  SensitivityCurves out;
  out.h = params.h;
  out.c = params.c;
  out.comfort_levels = params.comfort_levels;
  out.nodes = nodes;
  out.phi = pm.phi;
  const std::size_t cells = nodes.size() - 1;
  out.phi_prime.resize(cells);
  for (std::size_t k = 0; k < cells; ++k) out.phi_prime[k] = (pm.phi[k + 1] - pm.phi[k]) / out.width(k);

  const double h = params.h;
  const double c = params.c;
  const int levels = params.comfort_count();
  auto add = [&](std::string name, double alpha, double beta, int coupled, bool increasing,
                 const std::vector<double>& curve, const std::vector<double>* lead = nullptr) {
    CostTerm t;
    t.name = std::move(name);
    t.alpha = alpha;
    t.beta = beta;
    t.coupled_level = coupled;
    t.increasing = increasing;
    t.curve = curve;
    if (lead) t.lead = *lead;
    t.density.resize(cells);
    for (std::size_t k = 0; k < cells; ++k) {
      const double diff = curve[k + 1] - curve[k];
      t.density[k] = (increasing ? diff : -diff) / out.width(k);
    }
    if (increasing) {
      t.atom_low = curve.front();
    } else {
      t.atom_high = curve.back();
    }
    out.terms.push_back(std::move(t));
  };
  for (int j = 0; j < levels; ++j) {
    if (!std::binary_search(nodes.begin(), nodes.end(), params.level(j))) {
      throw Error(ErrorKind::InvalidParams, "comfort levels must be grid nodes");
    }
  }

  // Wind off: parked loads draw h; under the top level nobody is above.
  const auto& parked = pm.parked;
  add("top", 0.0, h, -1, false, parked[static_cast<std::size_t>(levels - 1)]);
  for (int j = 0; j + 1 < levels; ++j) {
    const auto& lead = pm.above[0][static_cast<std::size_t>(j)];
    if (j == 0) {
      add("first", h + c, -c, -1, false, parked[0], &lead);
    } else {
      std::ostringstream name;
      name << "level" << j;
      add(name.str(), h + c, -c, j, false, parked[static_cast<std::size_t>(j)], &lead);
    }
  }
  // Intermediate wind: loads above the level need c - kappa_i from the grid.
  for (int i = 1; i + 1 < params.wind_states(); ++i) {
    const double gap = c - params.wind_rate(i);
    for (int j = 0; j + 1 < levels; ++j) {
      std::ostringstream name;
      name << "tail w" << i << " l" << j;
      add(name.str(), gap, -gap, -1, true, pm.above[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
  }

  const auto w = out.weight();
  for (std::size_t k = 0; k < cells; ++k) {
    if (!(w[k] > 0.0)) ++out.nonpositive_weight_cells;
  }
  return out;
}

SensitivityCurves sensitivity_curves(const MarkovEnvironment& env, const LoadParams& params, double dz,
                                     int workers) {
  return sensitivity_curves(env, params, make_z_grid(params, dz), workers);
}

double phi(double z, const MarkovEnvironment& env, const LoadParams& params) {
  return solve_stationary(z, env, params, params.top()).phi();
}

CostReport finite_cost(const std::vector<double>& set_points, const SensitivityCurves& curves, double gamma) {
  if (set_points.empty()) throw Error(ErrorKind::InvalidParams, "no set-points");
  for (std::size_t k = 1; k < set_points.size(); ++k) {
    if (set_points[k] < set_points[k - 1]) throw Error(ErrorKind::UnsortedInput, "set-points must be ascending");
  }
  if (set_points.front() < 0.0 || set_points.back() > curves.top()) {
    throw Error(ErrorKind::InvalidSetPoint, "set-point outside [0, top]");
  }
  const std::size_t n = set_points.size();
  const double nn = static_cast<double>(n);

  std::vector<double> fractions(curves.comfort_levels.size());
  for (std::size_t j = 0; j < fractions.size(); ++j) {
    const auto below = std::upper_bound(set_points.begin(), set_points.end(), curves.comfort_levels[j]);
    fractions[j] = static_cast<double>(below - set_points.begin()) / nn;
  }

  double power = 0.0;
  std::vector<double> f(n);
  for (const auto& t : curves.terms) {
    const double a = t.alpha_for(fractions);
    for (std::size_t k = 0; k < n; ++k) f[k] = curves.interpolate(t, set_points[k]);
    // cut[k]: probability that exactly k of the N loads sit on the low side.
    for (std::size_t k = 0; k <= n; ++k) {
      double p;
      if (t.increasing) {
        const double hi = k < n ? f[k] : t.curve.back();
        const double lo = k > 0 ? f[k - 1] : 0.0;
        p = hi - lo;
      } else if (k == 0) {
        // No load parked: every load sits above the level.
        p = t.lead.empty() ? 0.0 : interp(curves.nodes, t.lead, set_points[0]);
      } else {
        p = f[k - 1] - (k < n ? f[k] : 0.0);
      }
      const double g = a + t.beta * static_cast<double>(k) / nn;
      power += g * g * p;
    }
  }
  double discomfort = 0.0;
  for (double z : set_points) discomfort += curves.interpolate_phi(z);
  discomfort /= nn;
  return make_report(power, discomfort, gamma);
}

CostReport finite_cost(const std::vector<double>& set_points, const MarkovEnvironment& env,
                       const LoadParams& params, double gamma) {
  return finite_cost(set_points, sensitivity_curves(env, params), gamma);
}

std::vector<double> level_fractions(const ThresholdDistribution& u, const SensitivityCurves& curves) {
  std::vector<double> out;
  out.reserve(curves.comfort_levels.size());
  for (double theta : curves.comfort_levels) out.push_back(u(theta));
  return out;
}

CostReport continuum_cost(const ThresholdDistribution& u, const SensitivityCurves& curves, double gamma,
                          const std::vector<double>* fixed_fractions) {
  if (std::abs(u.top() - curves.top()) > 1e-12 * curves.top()) {
    throw Error(ErrorKind::NotADistribution, "distribution domain does not match the curve grid");
  }
  const std::vector<double> fractions = fixed_fractions ? *fixed_fractions : level_fractions(u, curves);
  const std::size_t cells = curves.cells();
  std::vector<double> i1(cells), i2(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    i1[k] = u.integral(curves.nodes[k], curves.nodes[k + 1]);
    i2[k] = u.integral_sq(curves.nodes[k], curves.nodes[k + 1]);
  }
  double power = 0.0;
  for (const auto& t : curves.terms) {
    const double a = t.alpha_for(fractions);
    const double b = t.beta;
    for (std::size_t k = 0; k < cells; ++k) {
      power += t.density[k] * (a * a * curves.width(k) + 2.0 * a * b * i1[k] + b * b * i2[k]);
    }
    power += a * a * t.atom_low + (a + b) * (a + b) * t.atom_high;
  }
  double discomfort = curves.phi.back();  // by parts
  for (std::size_t k = 0; k < cells; ++k) discomfort -= curves.phi_prime[k] * i1[k];
  return make_report(power, std::max(0.0, discomfort), gamma);
}

}  // namespace tcl
