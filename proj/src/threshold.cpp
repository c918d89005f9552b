#include "tcl/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tcl {

namespace {

constexpr double kTol = 1e-12;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::NotADistribution, what); }

}  // namespace

ThresholdDistribution::ThresholdDistribution(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) fail("need knots at 0 and at the top");
  if (knots_.front().z != 0.0) fail("first knot must sit at 0");
  if (!(knots_.back().z > 0.0)) fail("top must be positive");
  if (std::abs(knots_.front().left) > kTol) fail("u(0-) must be 0");
  if (std::abs(knots_.back().right - 1.0) > kTol) fail("u(top) must be 1");
  knots_.front().left = 0.0;
  knots_.back().right = 1.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    auto& kn = knots_[k];
    if (k > 0 && !(kn.z > knots_[k - 1].z)) fail("knots must be strictly increasing");
    if (kn.left < prev - kTol || kn.right < kn.left - kTol) {
      std::ostringstream msg;
      msg << "u decreases near z = " << kn.z;
      fail(msg.str());
    }
    if (kn.left < -kTol || kn.right > 1.0 + kTol) fail("u outside [0, 1]");
    kn.left = std::clamp(std::max(kn.left, prev), 0.0, 1.0);
    kn.right = std::clamp(std::max(kn.right, kn.left), 0.0, 1.0);
    prev = kn.right;
  }
}

ThresholdDistribution ThresholdDistribution::from_cells(const std::vector<double>& nodes,
                                                        const std::vector<double>& values) {
  if (nodes.size() != values.size() + 1 || values.empty()) fail("need one value per cell");
  std::vector<Knot> knots;
  knots.reserve(nodes.size());
  knots.push_back({nodes.front(), 0.0, values.front()});
  for (std::size_t k = 1; k + 1 < nodes.size(); ++k) {
    if (values[k] == values[k - 1]) continue;
    knots.push_back({nodes[k], values[k - 1], values[k]});
  }
  knots.push_back({nodes.back(), values.back(), 1.0});
  return ThresholdDistribution(std::move(knots));
}

ThresholdDistribution ThresholdDistribution::empirical(std::vector<double> set_points, double top) {
  if (set_points.empty()) fail("empty set-point list");
  std::sort(set_points.begin(), set_points.end());
  if (set_points.front() < 0.0 || set_points.back() > top) fail("set-points outside [0, top]");
  const double n = static_cast<double>(set_points.size());
  std::vector<Knot> knots;
  std::size_t i = 0;
  if (set_points.front() > 0.0) knots.push_back({0.0, 0.0, 0.0});
  while (i < set_points.size()) {
    const double z = set_points[i];
    std::size_t j = i;
    while (j < set_points.size() && set_points[j] == z) ++j;
    knots.push_back({z, static_cast<double>(i) / n, static_cast<double>(j) / n});
    i = j;
  }
  if (knots.back().z < top) knots.push_back({top, 1.0, 1.0});
  knots.back().right = 1.0;
  return ThresholdDistribution(std::move(knots));
}

ThresholdDistribution ThresholdDistribution::uniform(double top) {
  return ThresholdDistribution({{0.0, 0.0, 0.0}, {top, 1.0, 1.0}});
}

ThresholdDistribution ThresholdDistribution::from_samples(const std::vector<double>& xs,
                                                          const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) fail("need matching sample lists");
  std::vector<Knot> knots;
  knots.reserve(xs.size());
  for (std::size_t k = 0; k < xs.size(); ++k) knots.push_back({xs[k], ys[k], ys[k]});
  knots.front().left = 0.0;
  knots.back().right = 1.0;
  return ThresholdDistribution(std::move(knots));
}

double ThresholdDistribution::operator()(double z) const {
  if (z < 0.0) return 0.0;
  if (z >= top()) return 1.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), z, [](double v, const Knot& k) { return v < k.z; });
  const Knot& lo = *(it - 1);
  if (lo.z == z) return lo.right;
  const Knot& hi = *it;
  return lo.right + (hi.left - lo.right) * (z - lo.z) / (hi.z - lo.z);
}

double ThresholdDistribution::left_limit(double z) const {
  if (z <= 0.0) return 0.0;
  if (z > top()) return 1.0;
  auto it = std::lower_bound(knots_.begin(), knots_.end(), z, [](const Knot& k, double v) { return k.z < v; });
  if (it != knots_.end() && it->z == z) return it->left;
  const Knot& lo = *(it - 1);
  const Knot& hi = *it;
  return lo.right + (hi.left - lo.right) * (z - lo.z) / (hi.z - lo.z);
}

template <class Fn>
double ThresholdDistribution::integrate(double a, double b, Fn&& piece) const {
  a = std::max(a, 0.0);
  b = std::min(b, top());
  if (!(b > a)) return 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    const Knot& lo = knots_[k];
    const Knot& hi = knots_[k + 1];
    const double s = std::max(a, lo.z);
    const double e = std::min(b, hi.z);
    if (!(e > s)) continue;
    const double slope = (hi.left - lo.right) / (hi.z - lo.z);
    const double y0 = lo.right + slope * (s - lo.z);
    const double y1 = lo.right + slope * (e - lo.z);
    total += piece(e - s, y0, y1);
  }
  return total;
}

double ThresholdDistribution::integral(double a, double b) const {
  return integrate(a, b, [](double len, double y0, double y1) { return 0.5 * len * (y0 + y1); });
}

double ThresholdDistribution::integral_sq(double a, double b) const {
  return integrate(a, b, [](double len, double y0, double y1) {
    return len * (y0 * y0 + y0 * y1 + y1 * y1) / 3.0;
  });
}

double ThresholdDistribution::quantile(double p) const {
  if (p <= 0.0) return 0.0;
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    const Knot& kn = knots_[k];
    if (k > 0) {
      const Knot& prev = knots_[k - 1];
      if (kn.left >= p && prev.right < p) {
        return prev.z + (p - prev.right) / (kn.left - prev.right) * (kn.z - prev.z);
      }
    }
    if (kn.right >= p) return kn.z;
  }
  return top();
}

std::vector<double> ThresholdDistribution::quantile_set_points(int n) const {
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = quantile((i + 0.5) / n);
  return z;
}

std::vector<Knot> ThresholdDistribution::jumps(double min_size) const {
  std::vector<Knot> out;
  for (const auto& k : knots_) {
    if (k.right - k.left > min_size) out.push_back(k);
  }
  return out;
}

std::vector<double> ThresholdDistribution::cell_averages(const std::vector<double>& nodes) const {
  std::vector<double> out;
  out.reserve(nodes.size() - 1);
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    out.push_back(integral(nodes[k], nodes[k + 1]) / (nodes[k + 1] - nodes[k]));
  }
  return out;
}

}  // namespace tcl
