#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "fpk/app/commands.hpp"

using namespace fpk;

int main(int argc, char** argv) {
  CLI::App cli{"Nonlinear Fokker-Planck solver and verification suite"};
  cli.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "Run configuration (JSON)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Random seed (overrides seed)");
    sub->add_flag("--quiet", quiet, "Suppress progress output");
  };

  auto* check = cli.add_subcommand("check-hypotheses", "Sample the structural hypotheses on the configured box");
  auto* solve = cli.add_subcommand("solve", "Run the implicit scheme (or an eps continuation)");
  auto* verify = cli.add_subcommand("verify", "Run the configured checks and write verification.json");
  auto* particles = cli.add_subcommand("particles", "Simulate the particle system and compare with the PDE");
  auto* bench = cli.add_subcommand("bench", "Time the kernels under each instruction set");
  for (auto* sub : {check, solve, verify, particles}) add_common(sub, true);
  add_common(bench, false);

  CLI11_PARSE(cli, argc, argv);

  const app::CommandOptions options{.quiet = quiet};
  try {
    if (bench->parsed()) {
      std::optional<std::filesystem::path> dir;
      if (!out_dir.empty()) dir = out_dir;
      return app::cmd_bench(dir, options);
    }
    app::RunConfig config = app::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed) config.seed = *seed;
    if (check->parsed()) return app::cmd_check_hypotheses(config, options);
    if (solve->parsed()) return app::cmd_solve(config, options);
    if (verify->parsed()) return app::cmd_verify(config, options);
    return app::cmd_particles(config, options);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return app::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
