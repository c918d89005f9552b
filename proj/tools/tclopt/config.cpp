#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace tclopt {

using nlohmann::json;

namespace {

// Reads fields of one JSON object and rejects any key it was not asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  void done() const {
    for (const auto& [key, value] : node_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown key " + path_ + "." + key);
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("bad value for " + path_ + "." + key);
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    T value{};
    seen_.insert(key);
    if (!node_.contains(key)) return;
    get(key, value);
    out = value;
  }

  bool has(const char* key) {
    seen_.insert(key);
    return node_.contains(key);
  }
  const json& at(const char* key) const { return node_.at(key); }
  std::string child(const char* key) const { return path_ + "." + key; }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
void with_section(Section& parent, const char* key, Fn&& fn) {
  if (parent.has(key)) {
    Section s(parent.at(key), parent.child(key));
    fn(s);
    s.done();
  }
}

void read_model(Section& s, ModelConfig& m) {
  s.get("h", m.h);
  s.get("c", m.c);
  s.get("comfort_levels", m.comfort_levels);
  s.get("wind_up", m.wind_up);
  s.get("wind_down", m.wind_down);
  s.get("comfort_up", m.comfort_up);
  s.get("comfort_down", m.comfort_down);
}

void read_refinement(Section& s, HeuristicSection& hs) {
  auto& r = hs.refinement;
  s.get("loads", hs.loads);
  s.get("jumps", hs.jumps);
  s.get("shape", hs.shape);
  s.get("initial_level", r.initial_level);
  s.get("max_level", r.max_level);
  s.get("initial_value", r.initial_value);
  s.get("epsilon", r.epsilon);
  s.get("delta_j", r.delta_j);
  s.get("patience", r.patience);
  s.get("max_visits_per_level", r.max_visits_per_level);
  s.get("secant_steps", r.secant_steps);
  s.get("probe", r.probe);
  if (hs.shape != "constant" && hs.shape != "linear") throw ConfigError("heuristic.shape: constant or linear");
  r.shape = hs.shape == "linear" ? tcl::Shape::Linear : tcl::Shape::Constant;
}

void read_cftp(Section& s, CftpSection& cs) {
  s.get("shared_comfort", cs.shared_comfort);
  s.get("samples", cs.samples);
  s.get("time_step", cs.time_step);
  s.get("bins", cs.bins);
  s.get("forward_slots", cs.forward_slots);
  if (s.has("loads")) {
    const json& arr = s.at("loads");
    if (!arr.is_array()) throw ConfigError(s.child("loads") + ": expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Section l(arr[i], s.child("loads") + "[" + std::to_string(i) + "]");
      CftpLoadConfig load;
      l.get("h", load.h);
      l.get("c", load.c);
      l.get("comfort_levels", load.comfort_levels);
      l.get("set_point", load.set_point);
      l.get("comfort_up", load.comfort_up);
      l.get("comfort_down", load.comfort_down);
      l.done();
      cs.loads.push_back(std::move(load));
    }
  }
}

void read_hjb(Section& s, HjbSection& hs) {
  auto& o = hs.options;
  s.get("cells", o.cells);
  s.get("horizon", o.horizon);
  s.get("wind_power", o.wind_power);
  s.get("max_grid", o.max_grid);
  s.get("time_step", o.time_step);
  s.get("tie_tolerance", o.tie_tolerance);
  s.get("convergence", hs.convergence);
  with_section(s, "stv", [&](Section& t) {
    t.get("loads", hs.stv.loads);
    t.get("wind_total", hs.stv.wind_total);
    t.get("activation", hs.stv.activation);
    t.get("horizon", hs.stv.horizon);
    t.get("dt", hs.stv.dt);
  });
}

}  // namespace

tcl::MarkovEnvironment ModelConfig::environment() const {
  return tcl::build_environment(tcl::birth_death_rates(wind_up, wind_down),
                                tcl::birth_death_rates(comfort_up, comfort_down));
}

tcl::LoadParams ModelConfig::params() const {
  return tcl::make_load_params(h, c, comfort_levels, static_cast<int>(wind_up.size()) + 1);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  {
    Section s(root, "config");
    s.get("seed", cfg.seed);
    with_section(s, "model", [&](Section& m) { read_model(m, cfg.model); });
    with_section(s, "solver", [&](Section& v) {
      v.get("grid_step", cfg.solver.grid_step);
      v.get("gamma", cfg.solver.gamma);
      v.get("tol", cfg.solver.tol);
      v.get("max_iter", cfg.solver.max_iter);
    });
    with_section(s, "distribution", [&](Section& d) { d.get("z", cfg.distribution.z); });
    with_section(s, "simulate", [&](Section& v) {
      v.get("loads", cfg.simulate.loads);
      v.get("jumps", cfg.simulate.jumps);
      v.get("burn_in", cfg.simulate.burn_in);
      v.get("policy", cfg.simulate.policy);
      v.get("replications", cfg.simulate.replications);
      v.get("bins", cfg.simulate.bins);
    });
    with_section(s, "cftp", [&](Section& v) { read_cftp(v, cfg.cftp); });
    with_section(s, "heuristic", [&](Section& v) { read_refinement(v, cfg.heuristic); });
    with_section(s, "hjb", [&](Section& v) { read_hjb(v, cfg.hjb); });
    with_section(s, "compare", [&](Section& v) {
      v.get("loads", cfg.compare.loads);
      v.get("jumps", cfg.compare.jumps);
    });
    s.done();
  }
  if (cfg.simulate.policy != "optimal" && cfg.simulate.policy != "uniform") {
    throw ConfigError("simulate.policy: optimal or uniform");
  }
  cfg.hash = fnv1a(root.dump());

  // Model preconditions are checked here so a bad file fails before any work.
  cfg.model.params().validate();
  (void)cfg.model.environment();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace tclopt
