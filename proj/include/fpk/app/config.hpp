#pragma once

// Run configuration: one JSON document per run. Every object rejects keys
// it does not know; missing keys take the defaults below, and the expanded
// document is what gets echoed next to the outputs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fpk/particles.hpp"

namespace fpk::app {

struct GridSpec {
  int dim = 1;
  double half_width = 10.0;
  int n = 128;
  Boundary boundary = Boundary::zero_flux;

  Grid make() const { return Grid(dim, half_width, n, boundary); }
};

/// Initial data: a Gaussian bump rescaled to `mass` on the grid, or a field
/// snapshot read from a CSV file.
struct InitialSpec {
  std::string kind = "gaussian";  // "gaussian" | "file"
  Vec center{};
  double sigma = 1.0;
  double mass = 1.0;
  std::string path;
};

/// Box for the hypothesis check. Unset fields follow the run: T from the
/// solver, half-width from the grid, r-range [min(0, min u0), linf(u0) + 1].
struct HypothesisSpec {
  std::optional<double> T;
  std::optional<double> half_width;
  std::optional<double> r_min;
  std::optional<double> r_max;
  int samples = 21;
};

struct VerifySpec {
  double l1_shift = 0.5;            // shift of the second initial datum
  bool refine = true;               // rerun contraction and weak form at n·2
  int lipschitz_trials = 50;
  double lipschitz_fraction = 0.5;  // λ = fraction·λ₀ (λ = μ when λ₀ = ∞)
  double weak_form_max_ratio = 0.6;
  double l1_slope = 5.0;
  double positivity_tol = 1e-10;
  double linf_tol = 1e-6;
  double mass_identity_rtol = 1e-10;
  double mass_drift_atol = 1e-8;
};

struct SdeSpec {
  SdeConfig config;
  /// "co_run" solves the PDE first; "none" runs without a PDE; any other
  /// value is the output directory of a previous solve.
  std::string pde_source = "co_run";
};

struct RunConfig {
  std::string model_id = "linear";
  ModelParams model_params;
  GridSpec grid;
  InitialSpec initial;
  HypothesisSpec hypotheses;
  SolverConfig solver;
  bool continuation = false;
  std::optional<SdeSpec> sde;
  std::vector<std::string> checks;
  VerifySpec verify;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
};

const std::vector<std::string>& known_checks();

/// Parses and validates; throws ConfigError naming the offending key.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);
/// The expanded document, including every default.
nlohmann::json to_json(const RunConfig& config);

/// Seed of a named random substream derived from the run seed.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

ScalarField make_initial(const RunConfig& config, const Grid& grid);
HypothesisBox hypothesis_box(const RunConfig& config, const ScalarField& u0);

/// Worker cap from FPK_THREADS (default: hardware concurrency, at least 1).
int worker_threads();

}  // namespace fpk::app
