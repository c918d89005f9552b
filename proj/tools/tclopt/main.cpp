// tclopt: threshold-policy optimization for thermostatically controlled loads.
//
//   tclopt <command> --config experiment.json [--out DIR] [--seed N] [--workers N]

#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"
#include "tcl/error.hpp"
#include "tcl/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Threshold-policy optimization for thermostatically controlled loads"};
  app.set_version_flag("--version", tclopt::kVersion);
  std::string command, config_path, out_dir = "out";
  std::uint64_t seed = 0;
  int workers = tcl::default_workers();
  app.add_option("command", command, "distribution | curves | optimize | simulate | cftp | heuristic | hjb | compare")
      ->required();
  app.add_option("--config", config_path, "experiment file (JSON)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const tclopt::Command cmd = tclopt::find_command(command);
  if (cmd == nullptr) {
    std::fprintf(stderr, "unknown command '%s'\n%s", command.c_str(), app.help().c_str());
    return 1;
  }
  tclopt::RunContext ctx;
  try {
    ctx.config = tclopt::load_config(config_path);
  } catch (const tclopt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const tcl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  if (seed_opt->count() > 0) ctx.config.seed = seed;
  ctx.out = out_dir;
  ctx.workers = workers;

  try {
    cmd(ctx);
  } catch (const tcl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
