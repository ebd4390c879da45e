#include "fpk/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fpk/field_io.hpp"
#include "fpk/kernels.hpp"

namespace fpk {

void validate(const SolverConfig& c) {
  if (!(c.T >= 0.0) || !std::isfinite(c.T)) throw Error(ErrorCode::ConfigError, "T must be >= 0");
  if (!(c.mu > 0.0) || !std::isfinite(c.mu)) throw Error(ErrorCode::ConfigError, "mu must be > 0");
  if (!(c.eps > 0.0)) throw Error(ErrorCode::ConfigError, "eps must be > 0");
  if (c.snapshot_stride < 1) throw Error(ErrorCode::ConfigError, "snapshot_stride must be >= 1");
  if (c.eps_schedule.empty()) throw Error(ErrorCode::ConfigError, "eps_schedule is empty");
  for (std::size_t k = 0; k < c.eps_schedule.size(); ++k) {
    if (!(c.eps_schedule[k] > 0.0)) throw Error(ErrorCode::ConfigError, "eps_schedule must be positive");
    if (k > 0 && !(c.eps_schedule[k] < c.eps_schedule[k - 1])) {
      throw Error(ErrorCode::ConfigError, "eps_schedule must be strictly decreasing");
    }
  }
  if (std::isfinite(c.lambda_zero) && c.mu > 0.5 * c.lambda_zero * (1.0 + 1e-12)) {
    throw Error(ErrorCode::StepTooLarge, "mu = " + format_double(c.mu) + " exceeds lambda_zero/2 = " +
                                             format_double(0.5 * c.lambda_zero));
  }
}

std::vector<double> step_times(double T, double mu) {
  std::vector<double> times;
  if (T <= 0.0) return times;
  const auto steps = static_cast<long>(std::ceil(T / mu * (1.0 - 1e-12)));
  times.reserve(static_cast<std::size_t>(steps));
  for (long k = 1; k < steps; ++k) times.push_back(static_cast<double>(k) * mu);
  times.push_back(T);
  return times;
}

std::pair<ScalarField, StepDiagnostics> implicit_step(const CoefficientModel& model, double t_next,
                                                      double mu, const ScalarField& u_prev,
                                                      const SolverConfig& config) {
  const FieldNorms prev = field_norms(u_prev);
  ResolventProblem p{.model = &model,
                     .t = t_next,
                     .lambda = mu,
                     .eps = config.eps,
                     .v = u_prev,
                     .lambda_zero = config.lambda_zero,
                     .flux = config.flux,
                     .r_max = config.capital_lambda * config.T + prev.linf + config.range_margin,
                     .tol = config.tol};
  auto [u, stats] = solve_resolvent(p);

  const Grid& g = u.grid();
  ScalarField beta(g);
  for (std::size_t c = 0; c < g.size(); ++c) beta[c] = model.beta(t_next, g.cell_center(c), u[c]);

  const FieldNorms nrm = field_norms(u);
  StepDiagnostics d;
  d.t = t_next;
  d.mass = nrm.mass;
  d.l1 = nrm.l1;
  d.l2 = nrm.l2;
  d.linf = nrm.linf;
  d.min = *std::min_element(u.values().begin(), u.values().end());
  d.h1 = nrm.h1_seminorm;
  d.h1_beta = field_norms(beta).h1_seminorm;
  d.newton_iters = stats.iterations;
  d.residual = stats.final_residual_hneg1;
  d.mass_drift_predicted = -mu * config.eps * kernels::sum(beta.values()) * g.cell_volume();
  d.mass_drift_observed = nrm.mass - prev.mass;
  d.stats = stats;
  return {std::move(u), d};
}

Trajectory solve_trajectory(const CoefficientModel& model, const SolverConfig& config,
                            const ScalarField& u0) {
  validate(config);
  if (model.dim() != u0.grid().dim()) throw Error(ErrorCode::ConfigError, "model and grid dimensions differ");
  u0.require_finite();

  Trajectory traj;
  traj.mu = config.mu;
  traj.eps = config.eps;
  traj.initial = field_norms(u0);
  traj.times.push_back(0.0);
  traj.fields.push_back(u0);
  traj.snapshot_steps.push_back(0);

  const auto times = step_times(config.T, config.mu);
  ScalarField u = u0;
  double t = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const int i = static_cast<int>(k) + 1;
    try {
      auto [next, diag] = implicit_step(model, times[k], times[k] - t, u, config);
      diag.i = i;
      traj.diagnostics.push_back(diag);
      u = std::move(next);
    } catch (const Error& e) {
      throw StepFailed(i, std::move(traj), e.what());
    }
    t = times[k];
    if (i % config.snapshot_stride == 0 || k + 1 == times.size()) {
      traj.times.push_back(t);
      traj.fields.push_back(u);
      traj.snapshot_steps.push_back(i);
    }
  }
  return traj;
}

ScalarField exponential_formula(const CoefficientModel& model, const SolverConfig& config,
                                const ScalarField& u0, double t, int n) {
  if (n < 1) throw Error(ErrorCode::ConfigError, "n must be >= 1");
  if (t == 0.0) return u0;
  SolverConfig c = config;
  c.T = t;
  c.mu = t / n;
  c.snapshot_stride = n;
  return solve_trajectory(model, c, u0).final_field();
}

std::vector<ContinuationLevel> epsilon_continuation(const CoefficientModel& model,
                                                    const SolverConfig& config,
                                                    const ScalarField& u0) {
  validate(config);
  std::vector<ContinuationLevel> levels;
  for (double eps : config.eps_schedule) {
    SolverConfig c = config;
    c.eps = eps;
    levels.push_back({eps, solve_trajectory(model, c, u0), std::nullopt});
  }
  for (std::size_t k = 0; k + 1 < levels.size(); ++k) {
    const auto& a = levels[k].trajectory.fields;
    const auto& b = levels[k + 1].trajectory.fields;
    double gap = 0.0;
    for (std::size_t s = 0; s < a.size() && s < b.size(); ++s) gap = std::max(gap, l2_distance(a[s], b[s]));
    levels[k].cauchy_gap = gap;
  }
  return levels;
}

void write_diagnostics_csv(std::ostream& os, const Trajectory& trajectory) {
  os << "i,t,mass,l1,l2,linf,h1_beta,newton_iters,residual,mass_drift_predicted,mass_drift_observed\n";
  char buf[512];
  for (const StepDiagnostics& d : trajectory.diagnostics) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g\n", d.i,
                  d.t, d.mass, d.l1, d.l2, d.linf, d.h1_beta, d.newton_iters, d.residual,
                  d.mass_drift_predicted, d.mass_drift_observed);
    os << buf;
  }
}

}  // namespace fpk
