#pragma once

#include <filesystem>
#include <string>

#include "config.hpp"

namespace tclopt {

struct RunContext {
  ExperimentConfig config;
  std::filesystem::path out;
  int workers = 1;
};

using Command = void (*)(const RunContext&);

/// nullptr for an unknown name.
Command find_command(const std::string& name);

void cmd_distribution(const RunContext& ctx);
void cmd_curves(const RunContext& ctx);
void cmd_optimize(const RunContext& ctx);
void cmd_simulate(const RunContext& ctx);
void cmd_cftp(const RunContext& ctx);
void cmd_heuristic(const RunContext& ctx);
void cmd_hjb(const RunContext& ctx);
void cmd_compare(const RunContext& ctx);

}  // namespace tclopt
