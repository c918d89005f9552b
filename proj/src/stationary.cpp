#include "tcl/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "tcl/parallel.hpp"

namespace tcl {

namespace {

// exp of the block matrix [[A, I, 0, 0], [0, 0, I, 0], [0, 0, 0, I], 0] * L
// yields the first three moments of exp(A t) on [0, L] (Van Loan).
struct Moments {
  Eigen::MatrixXd expm, m0, m1, m2;
};

Moments moments(const Eigen::MatrixXd& a, double length) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  big.topLeftCorner(n, n) = a;
  big.block(0, n, n, n).setIdentity();
  big.block(n, 2 * n, n, n).setIdentity();
  big.block(2 * n, 3 * n, n, n).setIdentity();
  const Eigen::MatrixXd e = (big * length).exp();
  Moments m;
  m.expm = e.topLeftCorner(n, n);
  m.m0 = e.block(0, n, n, n);
  const Eigen::MatrixXd x13 = e.block(0, 2 * n, n, n);
  const Eigen::MatrixXd x14 = e.block(0, 3 * n, n, n);
  m.m1 = length * m.m0 - x13;
  m.m2 = 2.0 * x14 - length * length * m.m0 + 2.0 * length * m.m1;
  return m;
}

Eigen::MatrixXd integral_exp(const Eigen::MatrixXd& a, double length) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  big.topLeftCorner(n, n) = a;
  big.topRightCorner(n, n).setIdentity();
  return (big * length).exp().topRightCorner(n, n);
}

std::vector<double> breakpoints(double z, const LoadParams& params) {
  std::vector<double> pts{0.0};
  for (double theta : params.comfort_levels) {
    if (theta > 0.0 && theta < z) pts.push_back(theta);
  }
  pts.push_back(z);
  return pts;
}

Eigen::VectorXd interval_drift(double a, double b, double z, const MarkovEnvironment& env,
                               const LoadParams& params) {
  const int n = env.size();
  Eigen::VectorXd d(n);
  const LoadState probe{0.5 * (a + b), z};
  for (int s = 0; s < n; ++s) {
    const EnvState e = env.state(s);
    d(s) = z_policy_drift(probe, e.wind, e.comfort, params);
  }
  return d;
}

void sample_grid(DensitySegment& seg, double step) {
  const int cells = std::max(1, static_cast<int>(std::ceil(seg.length() / step - 1e-9)));
  const double h = seg.length() / cells;
  seg.xs.resize(static_cast<std::size_t>(cells) + 1);
  seg.values.resize(cells + 1, seg.left.size());
  const Eigen::MatrixXd stepper = (seg.transfer * h).exp();
  Eigen::VectorXd p = seg.left;
  for (int r = 0; r <= cells; ++r) {
    seg.xs[static_cast<std::size_t>(r)] = r == cells ? seg.b : seg.a + r * h;
    seg.values.row(r) = p.transpose();
    p = stepper * p;
  }
}

}  // namespace

Eigen::VectorXd DensitySegment::density(double x) const {
  return (transfer * (x - a)).exp() * left;
}

Eigen::VectorXd DensitySegment::mass_below(double x) const {
  if (x <= a) return Eigen::VectorXd::Zero(left.size());
  if (x >= b) return mass();
  return integral_exp(transfer, x - a) * left;
}

double StationaryDistribution::total_mass() const {
  double total = 0.0;
  for (const auto& seg : segments) total += seg.mass().sum();
  for (const auto& pm : point_masses) total += pm.mass;
  return total;
}

Eigen::VectorXd StationaryDistribution::density(double x) const {
  for (const auto& seg : segments) {
    if (x >= seg.a && x < seg.b) return seg.density(x);
  }
  return Eigen::VectorXd::Zero(state_count());
}

double StationaryDistribution::atom(double location, int state) const {
  double m = 0.0;
  for (const auto& pm : point_masses) {
    if (pm.location == location && pm.state == state) m += pm.mass;
  }
  return m;
}

std::vector<double> StationaryDistribution::mass_locations(double threshold) const {
  std::vector<double> locs;
  for (const auto& pm : point_masses) {
    if (pm.mass <= threshold) continue;
    if (std::find(locs.begin(), locs.end(), pm.location) == locs.end()) locs.push_back(pm.location);
  }
  std::sort(locs.begin(), locs.end());
  return locs;
}

double StationaryDistribution::cdf(double x) const {
  if (x < 0.0) return 0.0;
  double total = 0.0;
  for (const auto& pm : point_masses) {
    if (pm.location <= x) total += pm.mass;
  }
  for (const auto& seg : segments) total += seg.mass_below(x).sum();
  return std::min(total, 1.0);
}

double StationaryDistribution::parked_mass(int comfort) const {
  const double loc = std::min(set_point, comfort_levels.at(static_cast<std::size_t>(comfort)));
  return atom(loc, index(0, comfort));
}

double StationaryDistribution::above_mass(int wind, int comfort) const {
  const double theta = comfort_levels.at(static_cast<std::size_t>(comfort));
  const int s = index(wind, comfort);
  double m = 0.0;
  for (const auto& seg : segments) {
    if (seg.a >= theta) m += seg.mass()(s);
  }
  return m;
}

double StationaryDistribution::floor_mass() const {
  double m = 0.0;
  for (const auto& pm : point_masses) {
    if (pm.location == 0.0) m += pm.mass;
  }
  return m;
}

double StationaryDistribution::tail_mass(int comfort) const {
  const double theta = comfort_levels.at(static_cast<std::size_t>(comfort));
  double m = 0.0;
  for (const auto& seg : segments) {
    if (seg.a >= theta) m += seg.mass().sum();
  }
  for (const auto& pm : point_masses) {
    if (pm.location > theta) m += pm.mass;
  }
  return m;
}

double StationaryDistribution::phi() const {
  double total = 0.0;
  for (int j = 0; j < comfort_count; ++j) {
    const double theta = comfort_levels[static_cast<std::size_t>(j)];
    for (const auto& seg : segments) {
      if (seg.a < theta) continue;
      const double d = seg.a - theta;
      const Eigen::VectorXd q = (d * d) * (seg.m0 * seg.left) + (2.0 * d) * (seg.m1 * seg.left) + seg.m2 * seg.left;
      for (int w = 0; w < wind_states; ++w) total += q(index(w, j));
    }
  }
  return total;
}

StationaryDistribution solve_stationary(double z, const MarkovEnvironment& env, const LoadParams& params,
                                        double grid_step) {
  params.validate();
  if (env.wind_states() != params.wind_states() || env.comfort_levels() != params.comfort_count()) {
    throw Error(ErrorKind::InvalidParams, "environment and load parameters disagree on W or C");
  }
  if (!(z >= 0.0) || z > params.top()) {
    std::ostringstream msg;
    msg << "z = " << z << " outside [0, " << params.top() << "]";
    throw Error(ErrorKind::InvalidSetPoint, msg.str());
  }
  if (grid_step <= 0.0) grid_step = params.top() / 400.0;

  StationaryDistribution dist;
  dist.set_point = z;
  dist.wind_states = env.wind_states();
  dist.comfort_count = env.comfort_levels();
  dist.comfort_levels = params.comfort_levels;
  const int n = env.size();
  const Eigen::MatrixXd& q = env.generator();

  if (z == 0.0) {
    // Every state is held at the floor.
    const Eigen::VectorXd pi = env.stationary();
    for (int s = 0; s < n; ++s) dist.point_masses.push_back({0.0, s, pi(s)});
    return dist;
  }

  const std::vector<double> pts = breakpoints(z, params);
  const int m = static_cast<int>(pts.size()) - 1;
  std::vector<Moments> mom(static_cast<std::size_t>(m));
  dist.segments.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    auto& seg = dist.segments[static_cast<std::size_t>(k)];
    seg.a = pts[static_cast<std::size_t>(k)];
    seg.b = pts[static_cast<std::size_t>(k) + 1];
    seg.drift = interval_drift(seg.a, seg.b, z, env, params);
    seg.transfer = seg.drift.cwiseInverse().asDiagonal() * q;
    mom[static_cast<std::size_t>(k)] = moments(seg.transfer, seg.length());
  }

  // A state can hold an atom at a breakpoint only if the flow on both sides
  // points into it (or the breakpoint is the edge of the support).
  struct AtomSlot {
    int point, state;
  };
  std::vector<AtomSlot> slots;
  for (int r = 0; r <= m; ++r) {
    for (int s = 0; s < n; ++s) {
      const bool in_left = r == 0 || dist.segments[static_cast<std::size_t>(r) - 1].drift(s) > 0.0;
      const bool in_right = r == m || dist.segments[static_cast<std::size_t>(r)].drift(s) < 0.0;
      if (in_left && in_right) slots.push_back({r, s});
    }
  }

  const int unknowns = m * n + static_cast<int>(slots.size());
  const int rows = (m + 1) * n;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(rows, unknowns);
  for (int r = 0; r <= m; ++r) {
    for (int s = 0; s < n; ++s) {
      const int row = r * n + s;
      if (r > 0) {
        const auto& left = dist.segments[static_cast<std::size_t>(r) - 1];
        const Eigen::MatrixXd& e = mom[static_cast<std::size_t>(r) - 1].expm;
        sys.block(row, (r - 1) * n, 1, n) += left.drift(s) * e.row(s);
      }
      if (r < m) sys(row, r * n + s) -= dist.segments[static_cast<std::size_t>(r)].drift(s);
    }
  }
  for (std::size_t a = 0; a < slots.size(); ++a) {
    const int col = m * n + static_cast<int>(a);
    for (int s = 0; s < n; ++s) sys(slots[a].point * n + s, col) = q(s, slots[a].state);
  }

  // One balance equation is implied by the others; swap it for normalization.
  Eigen::MatrixXd square = sys;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  if (unknowns != rows) {
    std::ostringstream msg;
    msg << "boundary system has " << unknowns << " unknowns for " << rows << " equations";
    throw Error(ErrorKind::SingularSystem, msg.str());
  }
  square.row(rows - 1).setZero();
  for (int k = 0; k < m; ++k) {
    square.block(rows - 1, k * n, 1, n) = mom[static_cast<std::size_t>(k)].m0.colwise().sum();
  }
  for (std::size_t a = 0; a < slots.size(); ++a) square(rows - 1, m * n + static_cast<int>(a)) = 1.0;
  rhs(rows - 1) = 1.0;

  // Transient states can make exp(A L) huge; equilibrate columns then rows
  // so the rank test sees the structure rather than the scaling.
  Eigen::VectorXd col_scale = square.cwiseAbs().colwise().maxCoeff().transpose();
  for (Eigen::Index j = 0; j < col_scale.size(); ++j) col_scale(j) = col_scale(j) > 0.0 ? 1.0 / col_scale(j) : 1.0;
  Eigen::MatrixXd scaled = square * col_scale.asDiagonal();
  Eigen::VectorXd row_scale = scaled.cwiseAbs().rowwise().maxCoeff();
  for (Eigen::Index i = 0; i < row_scale.size(); ++i) row_scale(i) = row_scale(i) > 0.0 ? 1.0 / row_scale(i) : 1.0;
  scaled = row_scale.asDiagonal() * scaled;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(scaled);
  lu.setThreshold(1e-11);
  if (lu.rank() < unknowns) {
    std::ostringstream msg;
    msg << "rank " << lu.rank() << " < " << unknowns;
    throw Error(ErrorKind::SingularSystem, msg.str());
  }
  Eigen::VectorXd sol = col_scale.asDiagonal() * lu.solve(row_scale.asDiagonal() * rhs);
  dist.system_residual = (sys * sol).cwiseAbs().maxCoeff();
  dist.system_residual = std::max(dist.system_residual, std::abs((square * sol - rhs)(rows - 1)));

  for (int k = 0; k < m; ++k) {
    auto& seg = dist.segments[static_cast<std::size_t>(k)];
    const auto& mk = mom[static_cast<std::size_t>(k)];
    seg.left = sol.segment(k * n, n);
    seg.m0 = mk.m0;
    seg.m1 = mk.m1;
    seg.m2 = mk.m2;
    sample_grid(seg, grid_step);
  }
  for (std::size_t a = 0; a < slots.size(); ++a) {
    dist.point_masses.push_back(
        {pts[static_cast<std::size_t>(slots[a].point)], slots[a].state, sol(m * n + static_cast<int>(a))});
  }

  // Round-off can leave tiny negative values; anything larger is a failure.
  constexpr double kNegTol = 1e-10;
  bool clamped = false;
  for (auto& pm : dist.point_masses) {
    if (pm.mass < -kNegTol) throw Error(ErrorKind::SingularSystem, "negative point mass");
    if (pm.mass < 0.0) {
      pm.mass = 0.0;
      clamped = true;
    }
  }
  for (auto& seg : dist.segments) {
    if (seg.values.minCoeff() < -kNegTol) throw Error(ErrorKind::SingularSystem, "negative density");
    if (seg.values.minCoeff() < 0.0) {
      seg.values = seg.values.cwiseMax(0.0);
      clamped = true;
    }
  }
  if (clamped) {
    const double total = dist.total_mass();
    for (auto& pm : dist.point_masses) pm.mass /= total;
    for (auto& seg : dist.segments) {
      seg.left /= total;
      seg.values /= total;
    }
  }
  return dist;
}

double verify_conservation(const StationaryDistribution& dist) {
  double worst = 0.0;
  for (const auto& seg : dist.segments) {
    for (Eigen::Index r = 0; r < seg.values.rows(); ++r) {
      worst = std::max(worst, std::abs(seg.values.row(r).dot(seg.drift)));
    }
  }
  return worst;
}

PointMassCurves point_mass_curves(const MarkovEnvironment& env, const LoadParams& params,
                                  const std::vector<double>& z_grid, int workers) {
  for (std::size_t k = 1; k < z_grid.size(); ++k) {
    if (!(z_grid[k] > z_grid[k - 1])) throw Error(ErrorKind::UnsortedInput, "z grid must be ascending");
  }
  const int w = params.wind_states();
  const int c = params.comfort_count();
  const std::size_t len = z_grid.size();
  PointMassCurves out;
  out.z = z_grid;
  out.parked.assign(static_cast<std::size_t>(c), std::vector<double>(len));
  out.above.assign(static_cast<std::size_t>(w),
                   std::vector<std::vector<double>>(static_cast<std::size_t>(c), std::vector<double>(len)));
  out.phi.resize(len);
  out.floor.resize(len);
  out.tail_first.resize(len);
  // A coarse sampling grid: only the analytic pieces are used here.
  const double coarse = params.top();
  parallel_for(len, workers, [&](std::size_t k) {
    const auto dist = solve_stationary(z_grid[k], env, params, coarse);
    for (int j = 0; j < c; ++j) {
      out.parked[static_cast<std::size_t>(j)][k] = dist.parked_mass(j);
      for (int i = 0; i < w; ++i) {
        out.above[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][k] = dist.above_mass(i, j);
      }
    }
    out.phi[k] = dist.phi();
    out.floor[k] = dist.floor_mass();
    out.tail_first[k] = dist.tail_mass(0);
  });
  return out;
}

}  // namespace tcl
