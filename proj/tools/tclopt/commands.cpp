#include "commands.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tcl/costs.hpp"
#include "tcl/simulate.hpp"
#include "tcl/stationary.hpp"
#include "tcl/variational.hpp"

namespace tclopt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : columns_(header.size()) { row_strings(header); }

  template <class... T>
  void row(const T&... values) {
    std::vector<std::string> cells{cell(values)...};
    row_strings(cells);
  }
  void row_values(const std::vector<double>& values) {
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(num(v));
    row_strings(cells);
  }
  std::string str() const { return body_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }

  void row_strings(const std::vector<std::string>& cells) {
    if (cells.size() != columns_) throw std::logic_error("csv row width");
    for (std::size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
    body_ << '\n';
  }

  std::size_t columns_;
  std::ostringstream body_;
};

class Output {
 public:
  explicit Output(const RunContext& ctx) : ctx_(ctx) { fs::create_directories(ctx.out); }

  void csv(const std::string& name, const Csv& table) const {
    write(name, "# tclopt " + std::string(kVersion) + " config=" + hex(ctx_.config.hash) +
                    " seed=" + std::to_string(ctx_.config.seed) + "\n" + table.str());
  }

  void json_file(const std::string& name, json body) const {
    body["meta"] = {{"version", kVersion}, {"config_hash", hex(ctx_.config.hash)}, {"seed", ctx_.config.seed}};
    write(name, body.dump(2) + "\n");
  }

 private:
  void write(const std::string& name, const std::string& text) const {
    std::ofstream f(ctx_.out / name, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + (ctx_.out / name).string());
    f << text;
  }

  const RunContext& ctx_;
};

json report_json(const tcl::CostReport& r) {
  return {{"power", r.power_cost}, {"discomfort", r.discomfort_cost}, {"gamma", r.gamma}, {"total", r.total}};
}

struct Model {
  tcl::MarkovEnvironment env;
  tcl::LoadParams params;
};

Model model(const RunContext& ctx) { return {ctx.config.model.environment(), ctx.config.model.params()}; }

tcl::SensitivityCurves curves(const RunContext& ctx, const Model& m) {
  return tcl::sensitivity_curves(m.env, m.params, ctx.config.solver.grid_step, ctx.workers);
}

tcl::OptimizationResult solve(const RunContext& ctx, const tcl::SensitivityCurves& sc) {
  return tcl::optimize(sc, ctx.config.solver.gamma, ctx.config.solver.tol, ctx.config.solver.max_iter);
}

json jumps_json(const tcl::ThresholdDistribution& u) {
  json out = json::array();
  for (const auto& k : u.jumps(1e-9)) out.push_back({{"z", k.z}, {"from", k.left}, {"to", k.right}});
  return out;
}

}  // namespace

Command find_command(const std::string& name) {
  static const std::map<std::string, Command> table{
      {"distribution", cmd_distribution}, {"curves", cmd_curves},       {"optimize", cmd_optimize},
      {"simulate", cmd_simulate},         {"cftp", cmd_cftp},           {"heuristic", cmd_heuristic},
      {"hjb", cmd_hjb},                   {"compare", cmd_compare},
  };
  const auto it = table.find(name);
  return it == table.end() ? nullptr : it->second;
}

void cmd_distribution(const RunContext& ctx) {
  const Model m = model(ctx);
  const double z = ctx.config.distribution.z.value_or(m.params.top());
  const tcl::StationaryDistribution d = tcl::solve_stationary(z, m.env, m.params, ctx.config.solver.grid_step);
  Output out(ctx);

  std::vector<std::string> header{"x"};
  for (int s = 0; s < d.state_count(); ++s) {
    const tcl::EnvState e = m.env.state(s);
    header.push_back("p_w" + std::to_string(e.wind) + "_c" + std::to_string(e.comfort));
  }
  Csv density(header);
  for (const auto& seg : d.segments) {
    for (std::size_t r = 0; r < seg.xs.size(); ++r) {
      std::vector<double> row{seg.xs[r]};
      for (int s = 0; s < d.state_count(); ++s) row.push_back(seg.values(static_cast<Eigen::Index>(r), s));
      density.row_values(row);
    }
  }
  out.csv("density.csv", density);

  Csv masses({"location", "wind", "comfort", "mass"});
  for (const auto& a : d.point_masses) {
    const tcl::EnvState e = m.env.state(a.state);
    masses.row(a.location, e.wind, e.comfort, a.mass);
  }
  out.csv("masses.csv", masses);

  out.json_file("report.json", {{"z", z},
                                {"states", d.state_count()},
                                {"total_mass", d.total_mass()},
                                {"conservation", tcl::verify_conservation(d)},
                                {"system_residual", d.system_residual},
                                {"mass_locations", d.mass_locations()}});
}

void cmd_curves(const RunContext& ctx) {
  const Model m = model(ctx);
  const tcl::SensitivityCurves sc = curves(ctx, m);
  Output out(ctx);

  std::vector<std::string> header{"z", "phi"};
  for (const auto& t : sc.terms) header.push_back(t.name);
  Csv nodes(header);
  for (std::size_t k = 0; k < sc.nodes.size(); ++k) {
    std::vector<double> row{sc.nodes[k], sc.phi[k]};
    for (const auto& t : sc.terms) row.push_back(t.curve[k]);
    nodes.row_values(row);
  }
  out.csv("curves.csv", nodes);

  const auto w = sc.weight();
  const auto d1 = sc.d_top();
  const auto d2 = sc.d_first();
  const auto dh = sc.d_hat();
  Csv cells({"z_mid", "width", "phi_prime", "weight", "d_top", "d_first", "d_hat"});
  for (std::size_t k = 0; k < sc.cells(); ++k) {
    cells.row_values({sc.midpoint(k), sc.width(k), sc.phi_prime[k], w[k], d1[k], d2[k], dh[k]});
  }
  out.csv("sensitivities.csv", cells);
}

void cmd_optimize(const RunContext& ctx) {
  const Model m = model(ctx);
  const tcl::SensitivityCurves sc = curves(ctx, m);
  const tcl::OptimizationResult r = solve(ctx, sc);
  Output out(ctx);

  Csv u({"z_left", "z_right", "u", "u_el_raw", "weight", "costate_left"});
  for (std::size_t k = 0; k < sc.cells(); ++k) {
    u.row(sc.nodes[k], sc.nodes[k + 1], r.projection.values[k], r.candidate.raw[k], r.candidate.weight[k],
          r.projection.costate[k]);
  }
  out.csv("ustar.csv", u);

  Csv trace({"level", "iteration", "v", "image", "up", "down"});
  for (std::size_t l = 0; l < r.trace.size(); ++l) {
    for (std::size_t i = 0; i < r.trace[l].size(); ++i) {
      const auto& s = r.trace[l][i];
      trace.row(l + 1, i, s.v, s.image, s.up, s.down);
    }
  }
  out.csv("fixed_point.csv", trace);

  out.json_file("cost.json", {{"cost", report_json(r.cost)},
                              {"v", r.v},
                              {"jumps", jumps_json(r.u)},
                              {"max_area_residual", r.projection.max_area_residual},
                              {"min_costate", r.projection.min_costate},
                              {"nonpositive_weight_cells", r.candidate.nonpositive_weight_cells}});
}

void cmd_simulate(const RunContext& ctx) {
  const Model m = model(ctx);
  const auto& sc_cfg = ctx.config.simulate;
  const tcl::SensitivityCurves sc = curves(ctx, m);
  const double gamma = ctx.config.solver.gamma;
  const tcl::ThresholdDistribution u =
      sc_cfg.policy == "uniform" ? tcl::ThresholdDistribution::uniform(m.params.top()) : solve(ctx, sc).u;

  tcl::SimulationConfig sim;
  sim.set_points = u.quantile_set_points(sc_cfg.loads);
  sim.jumps = sc_cfg.jumps;
  sim.burn_in = sc_cfg.burn_in;
  sim.seed = ctx.config.seed;
  sim.record_occupation = true;
  sim.occupation_bins = sc_cfg.bins;
  const auto runs = tcl::simulate_replications(sim, m.env, m.params, gamma, sc_cfg.replications, ctx.workers);

  Output out(ctx);
  Csv reps({"replication", "power", "discomfort", "total", "se", "peak_grid_power"});
  double mean = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& c = runs[r].empirical_cost;
    reps.row(r, c.power_cost, c.discomfort_cost, c.total, runs[r].total_se, runs[r].peak_grid_power);
    mean += c.total / static_cast<double>(runs.size());
  }
  out.csv("replications.csv", reps);

  const tcl::EmpiricalCdf cdf = tcl::empirical_cdf(runs.front());
  Csv cdf_csv({"x", "cdf"});
  for (double x : cdf.aggregate.exact_points()) cdf_csv.row(x, cdf.aggregate.cdf(x));
  out.csv("cdf.csv", cdf_csv);

  const tcl::CostReport finite = tcl::finite_cost(sim.set_points, sc, gamma);
  const tcl::CostReport cont = tcl::continuum_cost(u, sc, gamma);
  out.json_file("simulate.json", {{"policy", sc_cfg.policy},
                                  {"loads", sc_cfg.loads},
                                  {"jumps", sc_cfg.jumps},
                                  {"simulated_total_mean", mean},
                                  {"simulated", report_json(runs.front().empirical_cost)},
                                  {"finite_cost", report_json(finite)},
                                  {"continuum_cost", report_json(cont)},
                                  {"relative_gap_to_continuum", (mean - cont.total) / cont.total},
                                  {"dominance_ok", tcl::check_dominance(runs.front()).ok}});
}

namespace {

tcl::CftpConfig cftp_config(const RunContext& ctx, const Model& m) {
  const auto& cs = ctx.config.cftp;
  tcl::CftpConfig cfg;
  cfg.wind_generator = tcl::generator_from_rates(
      tcl::birth_death_rates(ctx.config.model.wind_up, ctx.config.model.wind_down));
  cfg.shared_comfort = cs.shared_comfort;
  cfg.time_step = cs.time_step;
  cfg.seed = ctx.config.seed;
  const int wind_states = static_cast<int>(ctx.config.model.wind_up.size()) + 1;
  if (cs.loads.empty()) {
    const tcl::SensitivityCurves sc = curves(ctx, m);
    const auto z = solve(ctx, sc).u.quantile_set_points(2);
    const Eigen::MatrixXd g = tcl::generator_from_rates(
        tcl::birth_death_rates(ctx.config.model.comfort_up, ctx.config.model.comfort_down));
    for (double zi : z) cfg.loads.push_back({m.params, zi, g});
  } else {
    for (const auto& l : cs.loads) {
      const tcl::LoadParams p = tcl::make_load_params(l.h, l.c, l.comfort_levels, wind_states);
      const Eigen::MatrixXd g = l.comfort_up.empty() ? Eigen::MatrixXd::Zero(1, 1)
                                                     : tcl::generator_from_rates(
                                                           tcl::birth_death_rates(l.comfort_up, l.comfort_down));
      cfg.loads.push_back({p, l.set_point, g});
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace

void cmd_cftp(const RunContext& ctx) {
  const Model m = model(ctx);
  const auto& cs = ctx.config.cftp;
  const tcl::CftpConfig cfg = cftp_config(ctx, m);
  const auto samples = tcl::cftp_samples(cfg, cs.samples, ctx.workers);
  Output out(ctx);

  std::vector<std::string> header{"index", "wind", "slots", "sandwich_violations"};
  for (std::size_t l = 0; l < cfg.loads.size(); ++l) {
    header.push_back("comfort_" + std::to_string(l));
    header.push_back("x_" + std::to_string(l));
  }
  Csv table(header);
  std::int64_t violations = 0, max_slots = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    std::vector<double> row{static_cast<double>(i), static_cast<double>(s.wind), static_cast<double>(s.slots),
                            static_cast<double>(s.sandwich_violations)};
    for (std::size_t l = 0; l < cfg.loads.size(); ++l) {
      row.push_back(s.comfort[l]);
      row.push_back(s.temperatures[l]);
    }
    table.row_values(row);
    violations += s.sandwich_violations;
    max_slots = std::max(max_slots, s.slots);
  }
  out.csv("samples.csv", table);

  const tcl::JointCost cost = tcl::estimate_joint_cost(samples, cfg, ctx.config.solver.gamma);
  json summary{{"samples", samples.size()},
               {"time_step", cfg.step()},
               {"set_points", [&] {
                  std::vector<double> z;
                  for (const auto& l : cfg.loads) z.push_back(l.set_point);
                  return z;
                }()},
               {"joint_cost", report_json(cost.report)},
               {"joint_cost_se", cost.se},
               {"sandwich_violations", violations},
               {"max_slots", max_slots}};
  if (cs.forward_slots > 0) {
    const auto fwd = tcl::forward_marginals(cfg, cs.forward_slots, cs.forward_slots / 10, cs.bins,
                                            tcl::child_seed(ctx.config.seed, 0xF0F0));
    json tv = json::array();
    for (std::size_t l = 0; l < cfg.loads.size(); ++l) {
      const auto h = tcl::marginal_histogram(samples, l, cfg.loads[l].params.top(), cs.bins);
      tv.push_back(tcl::total_variation(h, fwd.histogram[l]));
    }
    summary["forward_slots"] = cs.forward_slots;
    summary["total_variation"] = tv;
  }
  out.json_file("cftp.json", summary);
}

void cmd_heuristic(const RunContext& ctx) {
  const Model m = model(ctx);
  const auto& hs = ctx.config.heuristic;
  const double gamma = ctx.config.solver.gamma;
  tcl::Episode episode;
  episode.loads = hs.loads;
  episode.sim.jumps = hs.jumps;
  episode.sim.seed = ctx.config.seed;
  const tcl::CostOracle oracle = tcl::simulation_oracle(m.env, m.params, gamma, episode);
  tcl::RefinementOptions opts = hs.refinement;
  opts.seed = ctx.config.seed;
  const tcl::RefinementResult r = tcl::successive_refinement(m.params.top(), opts, oracle);
  const double uniform = oracle(tcl::ThresholdDistribution::uniform(m.params.top())).j;
  Output out(ctx);

  Csv trace({"evaluation", "level", "visit", "refinement", "j", "alphas"});
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& s = r.trace[i];
    std::string alphas;
    for (std::size_t k = 0; k < s.alphas.size(); ++k) alphas += (k ? " " : "") + num(s.alphas[k]);
    trace.row(i, s.level, s.step, s.refinement ? 1 : 0, s.j, alphas);
  }
  out.csv("trace.csv", trace);
  out.json_file("heuristic.json", {{"shape", hs.shape},
                                   {"best_level", r.best.level},
                                   {"best_alphas", r.best.alphas},
                                   {"best_j", r.best_j},
                                   {"best_per_level", r.best_per_level},
                                   {"uniform_j", uniform},
                                   {"evaluations", r.trace.size()}});
}

void cmd_hjb(const RunContext& ctx) {
  const Model m = model(ctx);
  const auto& hs = ctx.config.hjb;
  tcl::HjbOptions opts = hs.options;
  opts.workers = ctx.workers;
  const tcl::HjbSolution sol = tcl::solve_hjb(m.env, m.params, opts);
  Output out(ctx);

  const int n = sol.value.nodes();
  const double dx = sol.value.dx;
  json states = json::array();
  for (int s = 0; s < m.env.size(); ++s) {
    const auto ss = static_cast<std::size_t>(s);
    const tcl::EnvState e = m.env.state(s);
    const std::string tag = "w" + std::to_string(e.wind) + "_c" + std::to_string(e.comfort);
    const auto labels = tcl::classify_policy(sol, m.params, s);
    Csv value({"x1", "x2", "V"});
    Csv policy({"x1", "x2", "wind1", "wind2", "grid1", "grid2", "tie", "label"});
    int counts[3] = {0, 0, 0};
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        value.row(i * dx, j * dx, sol.value.values[ss](i, j));
        const auto label = labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        ++counts[static_cast<int>(label)];
        const char* name = label == tcl::PolicyLabel::Synchronizing     ? "sync"
                           : label == tcl::PolicyLabel::Desynchronizing ? "desync"
                                                                        : "neutral";
        policy.row(i * dx, j * dx, sol.policy.wind1[ss](i, j), sol.policy.wind2[ss](i, j), sol.policy.grid1[ss](i, j),
                   sol.policy.grid2[ss](i, j), sol.policy.tie[ss](i, j), std::string(name));
      }
    }
    out.csv("value_" + tag + ".csv", value);
    out.csv("policy_" + tag + ".csv", policy);
    const auto& v = sol.value.values[ss];
    states.push_back({{"state", tag},
                      {"asymmetry", (v - v.transpose()).cwiseAbs().maxCoeff()},
                      {"synchronizing", counts[0]},
                      {"desynchronizing", counts[1]},
                      {"neutral", counts[2]},
                      {"tie_cells", sol.policy.tie[ss].sum()},
                      {"cooler_load_wind_cells", tcl::cooler_load_wind_cells(sol, s)}});
  }
  json summary{{"cells", opts.cells},
               {"horizon", opts.horizon},
               {"time_step", sol.time_step},
               {"steps", sol.value.steps},
               {"wind_power", sol.wind_power},
               {"max_grid", sol.max_grid},
               {"states", states}};
  if (!hs.convergence.empty()) summary["self_convergence"] = tcl::self_convergence(m.env, m.params, opts, hs.convergence);
  const auto& stv = hs.stv;
  const tcl::StvComparison cmp = tcl::compare_stv_policies(m.env, m.params, stv.loads, stv.wind_total, sol.max_grid,
                                                           stv.activation, stv.horizon, stv.dt, ctx.config.seed);
  auto run_json = [](const tcl::StvRun& r) {
    return json{{"peak_grid", r.peak_grid},
                {"mean_switch_peak", r.mean_switch_peak},
                {"mean_sq_grid", r.mean_sq_grid},
                {"down_switches", r.down_switches}};
  };
  summary["stv"] = {{"coolest_first", run_json(cmp.heuristic)}, {"hottest_first", run_json(cmp.baseline)}};
  out.json_file("hjb.json", summary);
}

void cmd_compare(const RunContext& ctx) {
  const Model m = model(ctx);
  const double gamma = ctx.config.solver.gamma;
  const tcl::SensitivityCurves sc = curves(ctx, m);
  const tcl::OptimizationResult opt = solve(ctx, sc);
  const tcl::ThresholdDistribution uni = tcl::ThresholdDistribution::uniform(m.params.top());
  Output out(ctx);

  Csv table({"policy", "loads", "continuum", "finite", "simulated", "simulated_se"});
  for (const auto& [name, u] : {std::pair<std::string, const tcl::ThresholdDistribution*>{"optimal", &opt.u},
                                {"uniform", &uni}}) {
    const double cont = tcl::continuum_cost(*u, sc, gamma).total;
    for (int n : ctx.config.compare.loads) {
      tcl::SimulationConfig sim;
      sim.set_points = u->quantile_set_points(n);
      sim.jumps = ctx.config.compare.jumps;
      sim.seed = ctx.config.seed;
      const tcl::SimulationResult r = tcl::simulate(sim, m.env, m.params, gamma);
      table.row(name, n, cont, tcl::finite_cost(sim.set_points, sc, gamma).total, r.empirical_cost.total, r.total_se);
    }
  }
  out.csv("compare.csv", table);
}

}  // namespace tclopt
