#pragma once

// Backward-Euler time stepping: each step solves the resolvent equation
// u_{i+1} + μ·A_ε(t_{i+1})u_{i+1} = u_i with coefficients frozen at the end
// of the step.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fpk/error.hpp"
#include "fpk/resolvent.hpp"

namespace fpk {

struct SolverConfig {
  double T = 1.0;
  double mu = 1e-2;
  double eps = 1e-4;
  /// Strictly decreasing; used by epsilon_continuation only.
  std::vector<double> eps_schedule{1e-2, 1e-3, 1e-4};
  FluxMode flux = FluxMode::centered;
  ResolventTolerances tol{.atol_per_volume = 1e-14, .rtol = 1e-11};
  int snapshot_stride = 10;
  /// From the hypothesis report; +∞ means no step-size constraint.
  double lambda_zero = kInf;
  /// Growth rate of the L∞ bound, used for the Newton range guard.
  double capital_lambda = 0.0;
  /// Margin added to the range guard R_max = Λ·T + ‖u₀‖_∞ + margin.
  double range_margin = 10.0;
};

/// Throws StepTooLarge or ConfigError for configurations that cannot run.
void validate(const SolverConfig& config);

struct StepDiagnostics {
  int i = 0;  // index of the step's end state
  double t = 0.0;
  double mass = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double min = 0.0;
  double h1 = 0.0;       // H¹ seminorm of u_i
  double h1_beta = 0.0;  // H¹ seminorm of β(t_i, ·, u_i)
  int newton_iters = 0;
  double residual = 0.0;  // final H⁻¹ residual of the resolvent solve
  double mass_drift_predicted = 0.0;  // -μ·ε·Σβ(t_i,·,u_i)·h^d
  double mass_drift_observed = 0.0;   // mass(u_i) - mass(u_{i-1})
  SolveStats stats{};
};

struct Trajectory {
  /// Snapshot times and fields (every `snapshot_stride` steps plus the first
  /// and last state).
  std::vector<double> times;
  std::vector<ScalarField> fields;
  std::vector<int> snapshot_steps;
  /// One entry per step.
  std::vector<StepDiagnostics> diagnostics;
  double mu = 0.0;
  double eps = 0.0;
  /// Norms of the initial state.
  FieldNorms initial{};

  const ScalarField& final_field() const { return fields.back(); }
  double final_time() const { return times.back(); }
};

/// Carries the trajectory computed before the failing step.
class StepFailed : public Error {
 public:
  StepFailed(int step, Trajectory partial, const std::string& cause)
      : Error(ErrorCode::StepFailed, "step " + std::to_string(step) + ": " + cause),
        step_(step),
        partial_(std::move(partial)) {}

  int step() const { return step_; }
  const Trajectory& partial() const { return partial_; }

 private:
  int step_;
  Trajectory partial_;
};

/// Step times t_1 < ... < t_N = T with uniform spacing μ and a shortened
/// last step.
std::vector<double> step_times(double T, double mu);

std::pair<ScalarField, StepDiagnostics> implicit_step(const CoefficientModel& model,
                                                      double t_next, double mu,
                                                      const ScalarField& u_prev,
                                                      const SolverConfig& config);

Trajectory solve_trajectory(const CoefficientModel& model, const SolverConfig& config,
                            const ScalarField& u0);

/// n resolvent solves with λ = t/n at times k·t/n. Runs exactly the
/// trajectory code path with μ = t/n.
ScalarField exponential_formula(const CoefficientModel& model, const SolverConfig& config,
                                const ScalarField& u0, double t, int n);

struct ContinuationLevel {
  double eps = 0.0;
  Trajectory trajectory;
  /// max over snapshot times of ‖u_{ε_k}(t) - u_{ε_{k+1}}(t)‖₂; absent on the
  /// last level.
  std::optional<double> cauchy_gap;
};

std::vector<ContinuationLevel> epsilon_continuation(const CoefficientModel& model,
                                                    const SolverConfig& config,
                                                    const ScalarField& u0);

/// Header "i,t,mass,l1,l2,linf,h1_beta,newton_iters,residual,
/// mass_drift_predicted,mass_drift_observed", one row per step.
void write_diagnostics_csv(std::ostream& os, const Trajectory& trajectory);

}  // namespace fpk
