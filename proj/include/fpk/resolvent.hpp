#pragma once

// The regularized operator A_ε(t)y = -Δβ(t,·,y) + εβ(t,·,y) + div b*(t,·,y)
// and its resolvent: given v, find u with u + λ·A_ε(t)u = v.

#include <optional>
#include <utility>

#include "fpk/coefficients.hpp"
#include "fpk/grid.hpp"

namespace fpk {

/// How b* is carried to cell faces. Centered averages the two cell values;
/// upwind transports the donor cell's value with the face-averaged drift,
/// which keeps the implicit scheme monotone.
enum class FluxMode { centered, upwind };

enum class NonlinearMethod { newton, picard };

const char* to_string(FluxMode mode);
const char* to_string(NonlinearMethod method);

struct ResolventTolerances {
  double atol_per_volume = 1e-11;  // absolute tolerance is this times the box volume
  double rtol = 1e-9;              // relative to ‖v‖_{-1,ε}
  int max_newton = 50;
  int max_halvings = 30;
  int max_picard = 5000;
  double linear_rtol = 1e-12;
  int max_linear = 4000;
};

struct ResolventProblem {
  const CoefficientModel* model = nullptr;
  double t = 0.0;
  double lambda = 0.0;
  double eps = 1e-4;
  ScalarField v;
  /// Step-size threshold from the hypothesis report; λ ≤ λ₀/2 is enforced.
  double lambda_zero = kInf;
  FluxMode flux = FluxMode::centered;
  /// Newton iterates are clamped to [-r_max, r_max].
  double r_max = kInf;
  ResolventTolerances tol{};
  /// Skip Newton and go straight to the Picard iteration.
  bool force_picard = false;
};

struct SolveStats {
  int iterations = 0;
  int linear_iterations = 0;
  double final_residual_l2 = 0.0;
  double final_residual_hneg1 = 0.0;
  double tolerance = 0.0;
  NonlinearMethod method = NonlinearMethod::newton;
  bool converged = false;
  int clamp_events = 0;
};

/// Face fluxes of b*(t,·,y) under the given flux mode.
FaceField drift_flux(const CoefficientModel& model, double t, const ScalarField& y, FluxMode flux);

ScalarField apply_operator(const CoefficientModel& model, double t, double eps,
                           const ScalarField& y, FluxMode flux = FluxMode::centered);

/// u + λ·A_ε(t)u - v.
ScalarField resolvent_residual(const ResolventProblem& p, const ScalarField& u);

/// F(u) = (εI-Δ)⁻¹u + λβ(t,u) + λ(εI-Δ)⁻¹div b*(t,u), the strongly monotone
/// map whose zero set (shifted by (εI-Δ)⁻¹v) is the resolvent equation.
ScalarField transformed_operator(const CoefficientModel& model, double t, double lambda,
                                 double eps, const ScalarField& u,
                                 FluxMode flux = FluxMode::centered);

/// Throws StepTooLarge when λ exceeds λ₀/2, SolverDiverged when neither
/// Newton nor the Picard fallback reaches the tolerance.
std::pair<ScalarField, SolveStats> solve_resolvent(const ResolventProblem& p);

}  // namespace fpk
