#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace oracle {

namespace {

double drift(double x, double z, int wind, double level, const tcl::LoadParams& p) {
  if (wind == 0) {
    const double target = std::min(z, level);
    if (x < target - 1e-12) return p.h;
    if (x > target + 1e-12) return -p.c;
    return 0.0;
  }
  if (x > level + 1e-12) return -p.c;
  if (x > 1e-12) return -p.wind_rate(wind);
  return 0.0;
}

double grid_power(double x, double z, int wind, double level, const tcl::LoadParams& p) {
  if (wind == 0) {
    const double target = std::min(z, level);
    if (x > target + 1e-12) return p.h + p.c;
    if (x > target - 1e-12) return p.h;
    return 0.0;
  }
  return x > level + 1e-12 ? p.c - p.wind_rate(wind) : 0.0;
}

}  // namespace

double GridLaw::cdf(double x) const {
  double s = 0.0;
  for (const auto& m : mass) {
    for (std::size_t k = 0; k < m.size(); ++k) {
      if (static_cast<double>(k) * dx <= x + 1e-12) s += m[k];
    }
  }
  return s;
}

double GridLaw::at(double x, int state) const {
  const auto k = static_cast<std::size_t>(std::lround(x / dx));
  return mass.at(static_cast<std::size_t>(state)).at(k);
}

GridLaw fluid_grid_law(double z, const tcl::MarkovEnvironment& env, const tcl::LoadParams& params, double dx) {
  const int points = static_cast<int>(std::lround(params.top() / dx)) + 1;
  const int states = env.size();
  const int n = points * states;
  auto id = [&](int k, int s) { return s * points + k; };

  // Row-convention generator transposed: A(to, from), then replace one
  // balance row by the normalization.
  std::vector<Eigen::Triplet<double>> t;
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < states; ++s) {
    const tcl::EnvState e = env.state(s);
    const double level = params.level(e.comfort);
    for (int k = 0; k < points; ++k) {
      const double x = k * dx;
      const double d = drift(x, z, e.wind, level, params);
      const int from = id(k, s);
      if (d > 0.0 && k + 1 < points) {
        t.emplace_back(id(k + 1, s), from, d / dx);
        diag[static_cast<std::size_t>(from)] -= d / dx;
      } else if (d < 0.0 && k > 0) {
        t.emplace_back(id(k - 1, s), from, -d / dx);
        diag[static_cast<std::size_t>(from)] -= -d / dx;
      }
      for (int r = 0; r < states; ++r) {
        if (r == s) continue;
        const double rate = env.generator()(r, s);
        if (rate <= 0.0) continue;
        t.emplace_back(id(k, r), from, rate);
        diag[static_cast<std::size_t>(from)] -= rate;
      }
    }
  }
  for (int i = 0; i < n; ++i) t.emplace_back(i, i, diag[static_cast<std::size_t>(i)]);
  std::vector<Eigen::Triplet<double>> kept;
  for (const auto& e : t) {
    if (e.row() != 0) kept.push_back(e);
  }
  for (int i = 0; i < n; ++i) kept.emplace_back(0, i, 1.0);
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(kept.begin(), kept.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(0) = 1.0;
  const Eigen::VectorXd p = lu.solve(rhs);

  GridLaw law;
  law.dx = dx;
  law.mass.assign(static_cast<std::size_t>(states), std::vector<double>(static_cast<std::size_t>(points), 0.0));
  for (int s = 0; s < states; ++s) {
    for (int k = 0; k < points; ++k) law.mass[static_cast<std::size_t>(s)][static_cast<std::size_t>(k)] = p(id(k, s));
  }
  return law;
}

tcl::CostReport single_load_cost(const tcl::StationaryDistribution& dist, const tcl::MarkovEnvironment& env,
                                 const tcl::LoadParams& params, double gamma) {
  double power = 0.0, discomfort = 0.0;
  for (const auto& a : dist.point_masses) {
    const tcl::EnvState e = env.state(a.state);
    const double g = grid_power(a.location, dist.set_point, e.wind, params.level(e.comfort), params);
    power += g * g * a.mass;
  }
  constexpr int kPanels = 400;  // even
  for (const auto& seg : dist.segments) {
    const double hstep = seg.length() / kPanels;
    if (hstep <= 0.0) continue;
    for (int s = 0; s < env.size(); ++s) {
      const tcl::EnvState e = env.state(s);
      const double level = params.level(e.comfort);
      const double mid = 0.5 * (seg.a + seg.b);
      const double g = grid_power(mid, dist.set_point, e.wind, level, params);
      double mass = 0.0, disc = 0.0;
      for (int i = 0; i <= kPanels; ++i) {
        const double x = seg.a + i * hstep;
        const double wgt = (i == 0 || i == kPanels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double p = seg.density(x)(s);
        const double ex = std::max(0.0, x - level);
        mass += wgt * p;
        disc += wgt * ex * ex * p;
      }
      power += g * g * mass * hstep / 3.0;
      discomfort += disc * hstep / 3.0;
    }
  }
  return tcl::make_report(power, discomfort, gamma);
}

namespace {

// Euclidean projection onto {d >= 0, sum d <= 1}.
void project_capped(std::vector<double>& d) {
  double pos = 0.0;
  for (double v : d) pos += std::max(0.0, v);
  if (pos <= 1.0) {
    for (double& v : d) v = std::max(0.0, v);
    return;
  }
  std::vector<double> s = d;
  std::sort(s.begin(), s.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    cum += s[i];
    const double th = (cum - 1.0) / static_cast<double>(i + 1);
    if (s[i] - th > 0.0) theta = th;
  }
  for (double& v : d) v = std::max(0.0, v - theta);
}

}  // namespace

std::vector<double> isotonic_qp(const std::vector<double>& y, const std::vector<double>& w, int iterations) {
  const std::size_t n = y.size();
  auto gradient = [&](const std::vector<double>& d) {
    std::vector<double> g(n);
    double c = 0.0;
    std::vector<double> r(n);
    for (std::size_t k = 0; k < n; ++k) {
      c += d[k];
      r[k] = 2.0 * w[k] * (c - y[k]);
    }
    double acc = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      acc += r[k];
      g[k] = acc;
    }
    return g;
  };
  // Lipschitz constant of the gradient by power iteration.
  std::vector<double> v(n, 1.0), zero(n, 0.0);
  double lip = 1.0;
  for (int it = 0; it < 200; ++it) {
    std::vector<double> g = gradient(v);
    const std::vector<double> g0 = gradient(zero);
    for (std::size_t k = 0; k < n; ++k) g[k] -= g0[k];
    const double norm = std::sqrt(std::inner_product(g.begin(), g.end(), g.begin(), 0.0));
    lip = norm / std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (std::size_t k = 0; k < n; ++k) v[k] = g[k] / norm;
  }
  lip *= 1.01;

  std::vector<double> d(n, 0.0), prev = d, yk = d;
  double t = 1.0;
  for (int it = 0; it < iterations; ++it) {
    const std::vector<double> g = gradient(yk);
    std::vector<double> next(n);
    for (std::size_t k = 0; k < n; ++k) next[k] = yk[k] - g[k] / lip;
    project_capped(next);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    for (std::size_t k = 0; k < n; ++k) yk[k] = next[k] + (t - 1.0) / tn * (next[k] - d[k]);
    prev = d;
    d = std::move(next);
    t = tn;
  }
  std::vector<double> u(n);
  double c = 0.0;
  for (std::size_t k = 0; k < n; ++k) u[k] = (c += d[k]);
  return u;
}

std::vector<double> random_monotone(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int jumps = 1 + static_cast<int>(unit(rng) * 8);
  std::vector<double> levels(static_cast<std::size_t>(jumps));
  for (double& l : levels) l = unit(rng);
  std::sort(levels.begin(), levels.end());
  std::vector<int> cuts(static_cast<std::size_t>(jumps));
  for (int& c : cuts) c = static_cast<int>(unit(rng) * n);
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> u(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < jumps; ++j) {
      if (k >= cuts[static_cast<std::size_t>(j)]) u[static_cast<std::size_t>(k)] = levels[static_cast<std::size_t>(j)];
    }
  }
  return u;
}

}  // namespace oracle
