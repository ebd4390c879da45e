#pragma once

// Executable versions of the solution properties the scheme is expected to
// reproduce: L¹ contraction, positivity, mass balance, the L∞ growth bound,
// the resolvent Lipschitz bound and the weak formulation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fpk/stepper.hpp"

namespace fpk {

struct CheckReport {
  std::string id;
  bool pass = true;
  double worst_violation = 0.0;
  /// Step index and time of the worst violation, when the check is over a trajectory.
  std::optional<int> step;
  std::optional<double> time;
  double tolerance = 0.0;
  std::string notes;
  /// Raw measured quantities behind the verdict.
  std::map<std::string, double> metrics;
};

/// Sets `pass` from worst_violation ≤ tolerance (NaN fails).
CheckReport finalize(CheckReport report);

// ---------------------------------------------------------------------------
// Trajectory checks

/// Runs both trajectories and measures max_i l1(u_i - ū_i)/l1(u0 - ū0) - 1
/// against tol = 1e-6 + slope·h. Identical initial data must give identical
/// trajectories (tolerance 0 on the absolute difference).
CheckReport l1_contraction_check(const CoefficientModel& model, const SolverConfig& config,
                                 const ScalarField& u0, const ScalarField& u0_bar,
                                 double slope = 5.0);

/// Asserts that the worst contraction violation shrinks by `factor` from the
/// coarse to the refined run. Violations at or below `noise_floor` (the
/// relative solver tolerance scale) count as converged.
CheckReport l1_contraction_refinement(const CheckReport& coarse, const CheckReport& fine,
                                      double factor = 1.5, double noise_floor = 1e-9);

/// max_i max(0, -min u_i)/max(1, linf(u0)) against 1e-10.
CheckReport positivity_check(const Trajectory& trajectory, double tolerance = 1e-10);

/// l1(u_i) ≤ l1(u0)·(1 + 1e-6 + slope·h) on nonnegative data.
CheckReport l1_bound_check(const Trajectory& trajectory, double h, double slope = 5.0);

/// Per-step identity |Δmass - predicted| ≤ identity_rtol·l1(u_{i-1}) and the
/// total drift bound |mass(T) - mass(0)| ≤ ε·T·sup_a·l1(u0) + drift_atol.
/// worst_violation is the larger of the two errors, each divided by its own
/// tolerance, so the check passes iff worst_violation ≤ 1.
CheckReport mass_check(const Trajectory& trajectory, double sup_a, double identity_rtol = 1e-10,
                       double drift_atol = 1e-8);

/// linf(u_i) ≤ Λ·t_i + linf(u0) + tolerance.
CheckReport linf_bound_check(const Trajectory& trajectory, double capital_lambda,
                             double tolerance = 1e-6);

struct EnergyReport {
  /// max_i [l2(u_i)² + Σ_{j≤i} μ_j·h1(u_j)²] / l2(u0)².
  double constant = 0.0;
  int worst_step = 0;
};

EnergyReport energy_estimate(const Trajectory& trajectory);

// ---------------------------------------------------------------------------
// Resolvent Lipschitz bound

struct LipschitzSetup {
  const CoefficientModel* model = nullptr;
  double t = 0.0;
  double lambda = 0.0;
  double eps = 1e-4;
  double lambda_zero = kInf;
  FluxMode flux = FluxMode::centered;
  ResolventTolerances tol{.atol_per_volume = 1e-14, .rtol = 1e-12};
  /// Random fields are offset by this constant before solving.
  double offset = 0.0;
  /// Amplitude of the random fields.
  double amplitude = 1.0;
};

/// Band-limited random field built from the lowest n/8 Fourier modes per
/// axis with standard normal coefficients, scaled to unit max-norm.
ScalarField band_limited_field(const Grid& grid, std::uint64_t seed, std::uint64_t index);

/// For `trials` random pairs (v, v̄): ‖u - ū‖_{-1,ε}/‖v - v̄‖_{-1,ε} against
/// (1 - λ/λ₀)⁻¹ + 1e-8. The metric "max_ratio" carries the measured maximum.
CheckReport resolvent_lipschitz_check(const LipschitzSetup& setup, const Grid& grid, int trials,
                                      std::uint64_t seed);

// ---------------------------------------------------------------------------
// Weak formulation

enum class TimeProfile { linear, quadratic, cosine };

/// φ(t,x) = θ(t)·ψ(x) with ψ(x) = (1 - |x-c|²/R²)⁴ on the ball of radius R
/// and θ ∈ {1 - t/T, (1 - t/T)², cos(πt/(2T))}, all vanishing at t = T.
struct TestFunction {
  Vec center{};
  double radius = 1.0;
  TimeProfile profile = TimeProfile::linear;
  double horizon = 1.0;

  double theta(double t) const;
  double theta_t(double t) const;
  double psi(const Vec& x, int dim) const;
  Vec grad_psi(const Vec& x, int dim) const;
  double lap_psi(const Vec& x, int dim) const;
  /// sup|φ| + sup|φ_t| + sup|∇φ| + sup|Δφ|.
  double c2_norm(int dim) const;
};

/// Three test functions with supports well inside the box.
std::vector<TestFunction> default_test_functions(const Grid& grid, double T);

struct WeakFormResult {
  std::vector<double> residuals;    // left side of the weak formulation per test function
  std::vector<double> c2_norms;
  double mu = 0.0;
  double h = 0.0;
  /// max |residual|/(‖φ‖_{C²}·(μ + h²)), reported, never asserted.
  double constant = 0.0;
};

/// Space-time quadrature of ∫∫ (u·φ_t + β(u)·Δφ + b*(u)·∇φ) + ∫ φ(0)·u0 with
/// u = u_{i+1} on (t_i, t_{i+1}] and 3-point Gauss rules in time. Needs a
/// trajectory with every step stored (snapshot_stride = 1). Throws
/// TestFunctionNotSupported when a support reaches the boundary.
WeakFormResult weak_form_residual(const Trajectory& trajectory, const CoefficientModel& model,
                                  const std::vector<TestFunction>& tests);

/// worst_violation = max over test functions of fine/coarse residual ratio,
/// against `max_ratio`.
CheckReport weak_form_refinement(const WeakFormResult& coarse, const WeakFormResult& fine,
                                 double max_ratio = 0.6);

}  // namespace fpk
