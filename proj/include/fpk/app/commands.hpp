#pragma once

// Subcommands of the fpk tool. Each returns the process exit code:
//   0  completed, every asserted property holds
//   1  completed, but a hypothesis or check failed
//   2  configuration or I/O problem, detected before numerical work
//   3  numerical failure (solver divergence, failed step, escaped particle)

#include <iosfwd>
#include <optional>

#include "fpk/app/config.hpp"

namespace fpk::app {

struct CommandOptions {
  bool quiet = false;
};

int exit_code_for(const Error& error);

int cmd_check_hypotheses(const RunConfig& config, const CommandOptions& options);
int cmd_solve(const RunConfig& config, const CommandOptions& options);
int cmd_verify(const RunConfig& config, const CommandOptions& options);
int cmd_particles(const RunConfig& config, const CommandOptions& options);
/// Times the kernels under every supported instruction set and checks that
/// they agree bit for bit. Writes bench.json when `output_dir` is set.
int cmd_bench(const std::optional<std::filesystem::path>& output_dir, const CommandOptions& options);

/// Writes snapshots (CSV, plus an index "index,step,t,file") and the
/// per-step diagnostics of a trajectory into `dir`.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& trajectory);
/// Reads the snapshots written by write_trajectory back onto `grid`.
Trajectory read_trajectory(const std::filesystem::path& dir, const Grid& grid);

}  // namespace fpk::app
