#include "tcl/cftp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tcl/parallel.hpp"
#include "tcl/random.hpp"

namespace tcl {

namespace {

struct Chain {
  Eigen::MatrixXd forward;
  Eigen::MatrixXd reversed;
  Eigen::VectorXd pi;
};

Chain make_chain(const Eigen::MatrixXd& q) {
  Chain c;
  c.forward = q;
  if (q.rows() == 1) {
    c.reversed = q;
    c.pi = Eigen::VectorXd::Ones(1);
    return c;
  }
  const MarkovEnvironment env(static_cast<int>(q.rows()), 1, q);
  c.pi = env.stationary();
  c.reversed = env.reversed_generator();
  return c;
}

int draw_state(const Eigen::VectorXd& p, Rng& rng) {
  const double u = uniform01(rng);
  double cum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    cum += p(i);
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(p.size()) - 1;
}

struct Jump {
  double t;
  int state;
};

// Path of a chain over [0, d] from `s`; jump times measured from the start.
void run_chain(const Eigen::MatrixXd& g, int s, double d, Rng& rng, std::vector<Jump>& out) {
  out.clear();
  double t = 0.0;
  while (true) {
    const double exit = -g(s, s);
    if (!(exit > 0.0)) return;
    t += exponential(rng, exit);
    if (t >= d) return;
    double u = uniform01(rng) * exit;
    int to = s;
    for (Eigen::Index k = 0; k < g.rows(); ++k) {
      if (k == s || g(k, s) <= 0.0) continue;
      to = static_cast<int>(k);
      u -= g(k, s);
      if (u < 0.0) break;
    }
    s = to;
    out.push_back({t, s});
  }
}

struct Event {
  double t;
  int component;
  int state;
  bool operator<(const Event& o) const { return t < o.t || (t == o.t && component < o.component); }
};

struct Slot {
  std::vector<int> start;  // component states at the slot start
  std::vector<Event> events;
};

class Model {
 public:
  explicit Model(const CftpConfig& config) : config_(config), dt_(config.step()) {
    config.validate();
    chains_.push_back(make_chain(config.wind_generator));
    const std::size_t comfort_chains = config.shared_comfort ? 1 : config.loads.size();
    for (std::size_t l = 0; l < comfort_chains; ++l) chains_.push_back(make_chain(config.loads[l].comfort_generator));
  }

  double dt() const { return dt_; }
  std::size_t components() const { return chains_.size(); }
  std::size_t loads() const { return config_.loads.size(); }
  const CftpLoad& load(std::size_t l) const { return config_.loads[l]; }

  int comfort_of(const std::vector<int>& state, std::size_t l) const {
    return state[config_.shared_comfort ? 1 : 1 + l];
  }

  std::vector<int> stationary_state(Rng& rng) const {
    std::vector<int> s(chains_.size());
    for (std::size_t c = 0; c < chains_.size(); ++c) s[c] = draw_state(chains_[c].pi, rng);
    return s;
  }

  // Slot ending in `end`, built backwards with the reversed chains.
  Slot backward_slot(const std::vector<int>& end, Rng& rng) const {
    Slot slot;
    slot.start = end;
    std::vector<Jump> jumps;
    for (std::size_t c = 0; c < chains_.size(); ++c) {
      run_chain(chains_[c].reversed, end[c], dt_, rng, jumps);
      if (jumps.empty()) continue;
      slot.start[c] = jumps.back().state;
      for (std::size_t m = jumps.size(); m-- > 0;) {
        const int later = m == 0 ? end[c] : jumps[m - 1].state;
        slot.events.push_back({dt_ - jumps[m].t, static_cast<int>(c), later});
      }
    }
    std::sort(slot.events.begin(), slot.events.end());
    return slot;
  }

  Slot forward_slot(const std::vector<int>& start, Rng& rng) const {
    Slot slot;
    slot.start = start;
    std::vector<Jump> jumps;
    for (std::size_t c = 0; c < chains_.size(); ++c) {
      run_chain(chains_[c].forward, start[c], dt_, rng, jumps);
      for (const auto& j : jumps) slot.events.push_back({j.t, static_cast<int>(c), j.state});
    }
    std::sort(slot.events.begin(), slot.events.end());
    return slot;
  }

  std::vector<int> end_state(const Slot& slot) const {
    std::vector<int> s = slot.start;
    for (const auto& e : slot.events) s[static_cast<std::size_t>(e.component)] = e.state;
    return s;
  }

  void advance(std::vector<double>& x, const std::vector<int>& state, double d) const {
    for (std::size_t l = 0; l < x.size(); ++l) {
      const CftpLoad& ld = config_.loads[l];
      x[l] = plan_path(x[l], ld.set_point, state[0], comfort_of(state, l), ld.params, d).end;
    }
  }

  // Runs both chains through a slot; returns sandwich violations seen at
  // event boundaries.
  std::int64_t run_pair(const Slot& slot, std::vector<double>& top, std::vector<double>& bottom) const {
    std::vector<int> state = slot.start;
    double t = 0.0;
    std::int64_t bad = 0;
    auto step = [&](double until) {
      if (until > t) {
        advance(top, state, until - t);
        advance(bottom, state, until - t);
        t = until;
      }
      for (std::size_t l = 0; l < top.size(); ++l) {
        if (bottom[l] > top[l] + 1e-12) ++bad;
      }
    };
    for (const auto& e : slot.events) {
      step(e.t);
      state[static_cast<std::size_t>(e.component)] = e.state;
    }
    step(dt_);
    return bad;
  }

  void run_single(const Slot& slot, std::vector<double>& x) const {
    std::vector<int> state = slot.start;
    double t = 0.0;
    for (const auto& e : slot.events) {
      if (e.t > t) advance(x, state, e.t - t);
      t = e.t;
      state[static_cast<std::size_t>(e.component)] = e.state;
    }
    if (dt_ > t) advance(x, state, dt_ - t);
  }

 private:
  const CftpConfig& config_;
  double dt_;
  std::vector<Chain> chains_;
};

// Backward slots of one draw, generated on demand and kept for replay.
class BackwardPath {
 public:
  BackwardPath(const Model& model, std::uint64_t seed) : model_(model), seed_(seed) {
    Rng rng = make_rng(seed_, 0);
    now_ = model_.stationary_state(rng);
    earliest_ = now_;
  }

  const std::vector<int>& now() const { return now_; }

  const Slot& slot(std::int64_t k) {
    while (static_cast<std::int64_t>(slots_.size()) <= k) {
      Rng rng = make_rng(seed_, slots_.size() + 1);
      slots_.push_back(model_.backward_slot(earliest_, rng));
      earliest_ = slots_.back().start;
    }
    return slots_[static_cast<std::size_t>(k)];
  }

 private:
  const Model& model_;
  std::uint64_t seed_;
  std::vector<int> now_;
  std::vector<int> earliest_;
  std::vector<Slot> slots_;
};

struct PairRun {
  std::vector<double> top;
  std::vector<double> bottom;
  std::int64_t violations = 0;
  bool met = false;
};

PairRun run_from(const Model& model, BackwardPath& path, std::int64_t slots) {
  PairRun r;
  r.top.resize(model.loads());
  r.bottom.assign(model.loads(), 0.0);
  for (std::size_t l = 0; l < model.loads(); ++l) r.top[l] = model.load(l).params.top();
  for (std::int64_t k = slots - 1; k >= 0; --k) r.violations += model.run_pair(path.slot(k), r.top, r.bottom);
  r.met = true;
  for (std::size_t l = 0; l < model.loads(); ++l) {
    if (std::abs(r.top[l] - r.bottom[l]) > 1e-9) r.met = false;
  }
  return r;
}

int bin_of(double x, double top, int bins) {
  const int b = static_cast<int>(std::floor(x / top * bins));
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

void CftpConfig::validate() const {
  if (loads.empty()) throw Error(ErrorKind::InvalidConfig, "no loads");
  const Eigen::Index w = wind_generator.rows();
  if (w < 2 || wind_generator.cols() != w) throw Error(ErrorKind::InvalidGenerator, "wind generator must be square, W >= 2");
  for (const auto& l : loads) {
    l.params.validate();
    if (l.params.wind_states() != w) throw Error(ErrorKind::InvalidParams, "load wind states disagree with the wind chain");
    if (!(l.set_point >= 0.0) || l.set_point > l.params.top()) throw Error(ErrorKind::InvalidSetPoint, "set-point outside [0, top]");
    if (l.comfort_generator.rows() != l.params.comfort_count() || l.comfort_generator.cols() != l.comfort_generator.rows()) {
      throw Error(ErrorKind::InvalidGenerator, "comfort generator size must match the load's comfort levels");
    }
  }
  if (shared_comfort) {
    for (const auto& l : loads) {
      if (l.params.comfort_count() != loads.front().params.comfort_count()) {
        throw Error(ErrorKind::InvalidConfig, "shared comfort needs equal comfort counts");
      }
    }
  }
  if (time_step < 0.0) throw Error(ErrorKind::InvalidConfig, "time step must be positive");
  if (initial_slots < 1 || max_doublings < 0) throw Error(ErrorKind::InvalidConfig, "bad doubling schedule");
}

double CftpConfig::default_time_step() const {
  double lo = std::numeric_limits<double>::infinity(), rate = 0.0;
  for (const auto& l : loads) {
    lo = std::min(lo, l.params.level(0) > 0.0 ? l.params.level(0) : l.params.top());
    rate = std::max({rate, l.params.h, l.params.c});
  }
  return 0.1 * lo / rate;
}

JointSample cftp_sample(const CftpConfig& config, std::uint64_t index) {
  const Model model(config);
  BackwardPath path(model, child_seed(config.seed, index));
  std::int64_t slots = config.initial_slots;
  std::int64_t violations = 0;
  for (int d = 0; d <= config.max_doublings; ++d, slots *= 2) {
    PairRun r = run_from(model, path, slots);
    violations += r.violations;
    if (!r.met) continue;
    JointSample s;
    s.temperatures = std::move(r.top);
    s.wind = path.now()[0];
    for (std::size_t l = 0; l < model.loads(); ++l) s.comfort.push_back(model.comfort_of(path.now(), l));
    s.slots = slots;
    s.sandwich_violations = violations;
    return s;
  }
  std::ostringstream msg;
  msg << "no coalescence from " << slots / 2 << " slots back";
  throw Error(ErrorKind::NoCoalescence, msg.str());
}

std::vector<JointSample> cftp_samples(const CftpConfig& config, std::size_t count, int workers) {
  std::vector<JointSample> out(count);
  parallel_for(count, workers, [&](std::size_t i) { out[i] = cftp_sample(config, i); });
  return out;
}

bool coalesced_from(const CftpConfig& config, std::uint64_t index, std::int64_t slots) {
  const Model model(config);
  BackwardPath path(model, child_seed(config.seed, index));
  return run_from(model, path, slots).met;
}

JointCost estimate_joint_cost(const std::vector<JointSample>& samples, const CftpConfig& config, double gamma) {
  if (samples.empty()) throw Error(ErrorKind::EmptySamples, "no samples");
  const double n = static_cast<double>(config.loads.size());
  double power = 0.0, disc = 0.0, sum = 0.0, sum_sq = 0.0;
  for (const auto& s : samples) {
    double p = 0.0, d = 0.0;
    for (std::size_t l = 0; l < config.loads.size(); ++l) {
      const CftpLoad& ld = config.loads[l];
      const int j = s.comfort[l];
      p += power_draw({s.temperatures[l], ld.set_point}, s.wind, j, ld.params).grid_power;
      const double excess = std::max(0.0, s.temperatures[l] - ld.params.level(j));
      d += excess * excess;
    }
    p /= n;
    d /= n;
    power += p * p;
    disc += d;
    const double total = p * p + gamma * d;
    sum += total;
    sum_sq += total * total;
  }
  const double m = static_cast<double>(samples.size());
  JointCost out;
  out.report = make_report(power / m, disc / m, gamma);
  const double var = m > 1 ? std::max(0.0, (sum_sq - sum * sum / m) / (m - 1)) : 0.0;
  out.se = m > 1 ? std::sqrt(var / m) : std::numeric_limits<double>::infinity();
  return out;
}

ForwardMarginals forward_marginals(const CftpConfig& config, std::int64_t slots, std::int64_t burn_in, int bins,
                                   std::uint64_t seed) {
  const Model model(config);
  Rng rng = make_rng(seed, 0);
  std::vector<int> state = model.stationary_state(rng);
  std::vector<double> x(model.loads(), 0.0);
  ForwardMarginals out;
  out.histogram.assign(model.loads(), std::vector<double>(static_cast<std::size_t>(bins), 0.0));
  for (std::int64_t k = 0; k < slots; ++k) {
    const Slot slot = model.forward_slot(state, rng);
    model.run_single(slot, x);
    state = model.end_state(slot);
    if (k < burn_in) continue;
    ++out.samples;
    for (std::size_t l = 0; l < x.size(); ++l) {
      out.histogram[l][static_cast<std::size_t>(bin_of(x[l], model.load(l).params.top(), bins))] += 1.0;
    }
  }
  for (auto& h : out.histogram) {
    for (double& v : h) v /= static_cast<double>(std::max<std::int64_t>(1, out.samples));
  }
  return out;
}

std::vector<double> marginal_histogram(const std::vector<JointSample>& samples, std::size_t load, double top,
                                       int bins) {
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  if (samples.empty()) throw Error(ErrorKind::EmptySamples, "no samples");
  for (const auto& s : samples) h[static_cast<std::size_t>(bin_of(s.temperatures.at(load), top, bins))] += 1.0;
  for (double& v : h) v /= static_cast<double>(samples.size());
  return h;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error(ErrorKind::InvalidParams, "histograms differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double kernel_cdf(Kernel kernel, double t) {
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  if (kernel == Kernel::Box) return 0.5 * (t + 1.0);
  return t <= 0.0 ? 0.5 * (1.0 + t) * (1.0 + t) : 1.0 - 0.5 * (1.0 - t) * (1.0 - t);
}

namespace {

// Antiderivative of kernel_cdf, zero left of the support.
double kernel_cdf_integral(Kernel kernel, double t) {
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return t;
  if (kernel == Kernel::Box) return 0.25 * (t + 1.0) * (t + 1.0);
  if (t <= 0.0) return std::pow(1.0 + t, 3) / 6.0;
  return t + std::pow(1.0 - t, 3) / 6.0;
}

}  // namespace

ThresholdDistribution smooth_distribution(const ThresholdDistribution& u, double bandwidth, Kernel kernel,
                                          int resolution) {
  if (!(bandwidth > 0.0)) throw Error(ErrorKind::InvalidParams, "bandwidth must be positive");
  const double top = u.top();
  const auto& knots = u.knots();
  struct Ramp {
    double a, b, density;
  };
  std::vector<std::pair<double, double>> jumps;
  std::vector<Ramp> ramps;
  double prev = 0.0;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    const Knot& kn = knots[k];
    const double left = k == 0 ? 0.0 : kn.left;
    const double right = k + 1 == knots.size() ? 1.0 : kn.right;
    if (k > 0 && left > prev) ramps.push_back({knots[k - 1].z, kn.z, (left - prev) / (kn.z - knots[k - 1].z)});
    if (right > left) jumps.emplace_back(kn.z, right - left);
    prev = right;
  }

  auto value = [&](double x) {
    double v = 0.0;
    for (const auto& [z, s] : jumps) v += s * kernel_cdf(kernel, (x - z) / bandwidth);
    for (const auto& r : ramps) {
      v += r.density * bandwidth *
           (kernel_cdf_integral(kernel, (x - r.a) / bandwidth) - kernel_cdf_integral(kernel, (x - r.b) / bandwidth));
    }
    return std::clamp(v, 0.0, 1.0);
  };

  std::vector<double> xs;
  for (int i = 0; i <= resolution; ++i) xs.push_back(top * i / resolution);
  auto add_kinks = [&](double z) {
    for (double x : {z - bandwidth, z, z + bandwidth}) {
      if (x > 0.0 && x < top) xs.push_back(x);
    }
  };
  for (const auto& j : jumps) add_kinks(j.first);
  for (const auto& r : ramps) {
    add_kinks(r.a);
    add_kinks(r.b);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end(), [&](double a, double b) { return b - a <= 1e-12 * top; }), xs.end());
  xs.back() = top;

  std::vector<Knot> out;
  out.reserve(xs.size());
  double running = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // Monotone by construction; the max only absorbs rounding.
    const double v = std::max(running, value(xs[i]));
    if (i == 0) {
      out.push_back({0.0, 0.0, v});
    } else if (i + 1 == xs.size()) {
      out.push_back({top, v, 1.0});
    } else {
      out.push_back({xs[i], v, v});
    }
    running = v;
  }
  return ThresholdDistribution(std::move(out));
}

SetPointSearch optimize_set_points(CftpConfig config, double gamma, std::size_t samples, int sweeps, double tol,
                                   int workers) {
  SetPointSearch out;
  auto evaluate = [&](const CftpConfig& c) {
    ++out.evaluations;
    return estimate_joint_cost(cftp_samples(c, samples, workers), c, gamma);
  };
  JointCost best = evaluate(config);
  constexpr double golden = 0.6180339887498949;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t l = 0; l < config.loads.size(); ++l) {
      double a = 0.0, b = config.loads[l].params.top();
      auto at = [&](double z) {
        CftpConfig c = config;
        c.loads[l].set_point = z;
        return evaluate(c);
      };
      double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
      JointCost f1 = at(x1), f2 = at(x2);
      while (b - a > tol) {
        if (f1.report.total <= f2.report.total) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - golden * (b - a);
          f1 = at(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + golden * (b - a);
          f2 = at(x2);
        }
      }
      const bool first = f1.report.total <= f2.report.total;
      const double z = first ? x1 : x2;
      const JointCost& f = first ? f1 : f2;
      if (f.report.total < best.report.total) {
        config.loads[l].set_point = z;
        best = f;
      }
    }
    std::vector<double> zs;
    for (const auto& ld : config.loads) zs.push_back(ld.set_point);
    out.trace.emplace_back(zs, best.report.total);
  }
  for (const auto& ld : config.loads) out.set_points.push_back(ld.set_point);
  out.cost = best;
  return out;
}

}  // namespace tcl
