#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "fpk/field_io.hpp"
#include "fpk/invariants.hpp"

namespace fpk {

CheckReport finalize(CheckReport report) {
  report.pass = report.worst_violation <= report.tolerance;
  return report;
}

CheckReport l1_contraction_check(const CoefficientModel& model, const SolverConfig& config,
                                 const ScalarField& u0, const ScalarField& u0_bar, double slope) {
  if (!(u0.grid() == u0_bar.grid())) throw Error(ErrorCode::ConfigError, "initial data on different grids");
  const double h = u0.grid().spacing();
  // The comparison runs at every step, so keep every field.
  SolverConfig c = config;
  c.snapshot_stride = 1;
  const Trajectory fa = solve_trajectory(model, c, u0);
  const Trajectory fb = solve_trajectory(model, c, u0_bar);

  const double d0 = l1_distance(u0, u0_bar);
  CheckReport r;
  r.id = "l1_contraction";
  r.metrics["initial_l1_distance"] = d0;
  r.metrics["h"] = h;
  double worst = 0.0;
  double max_distance = 0.0;
  for (std::size_t s = 1; s < fa.fields.size(); ++s) {
    const double d = l1_distance(fa.fields[s], fb.fields[s]);
    max_distance = std::max(max_distance, d);
    const double v = d0 > 0.0 ? d / d0 - 1.0 : d;
    if (v > worst || std::isnan(v)) {
      worst = v;
      r.step = fa.snapshot_steps[s];
      r.time = fa.times[s];
    }
  }
  r.metrics["max_l1_distance"] = max_distance;
  r.worst_violation = worst;
  if (d0 > 0.0) {
    r.tolerance = 1e-6 + slope * h;
    r.notes = "relative excess over the initial L1 distance; tol = 1e-6 + " + format_double(slope) + "*h";
  } else {
    r.tolerance = 0.0;
    r.notes = "identical initial data; absolute L1 distance must stay 0";
  }
  return finalize(r);
}

CheckReport l1_contraction_refinement(const CheckReport& coarse, const CheckReport& fine,
                                      double factor, double noise_floor) {
  CheckReport r;
  r.id = "l1_contraction_refinement";
  r.metrics["coarse_violation"] = coarse.worst_violation;
  r.metrics["fine_violation"] = fine.worst_violation;
  const double c = std::max(coarse.worst_violation, 0.0);
  const double f = std::max(fine.worst_violation, 0.0);
  // Violation of "fine ≤ coarse/factor", measured above the noise floor.
  r.worst_violation = std::max(0.0, f - std::max(c / factor, noise_floor));
  r.tolerance = 0.0;
  r.notes = "fine violation must be <= coarse/" + format_double(factor) + " or <= " +
            format_double(noise_floor);
  if (c > 0.0) r.metrics["shrink_factor"] = f > 0.0 ? c / f : kInf;
  return finalize(r);
}

CheckReport positivity_check(const Trajectory& trajectory, double tolerance) {
  CheckReport r;
  r.id = "positivity";
  r.tolerance = tolerance;
  const auto& u0 = trajectory.fields.front();
  const double scale = std::max(1.0, trajectory.initial.linf);
  double worst = std::max(0.0, -*std::min_element(u0.values().begin(), u0.values().end())) / scale;
  if (worst > 0.0) {
    r.step = 0;
    r.time = 0.0;
  }
  for (const auto& d : trajectory.diagnostics) {
    const double v = std::max(0.0, -d.min) / scale;
    if (v > worst) {
      worst = v;
      r.step = d.i;
      r.time = d.t;
    }
  }
  r.worst_violation = worst;
  r.notes = "max(0, -min u_i)/max(1, linf(u0))";
  return finalize(r);
}

CheckReport l1_bound_check(const Trajectory& trajectory, double h, double slope) {
  CheckReport r;
  r.id = "l1_bound";
  r.tolerance = 1e-6 + slope * h;
  const double l10 = trajectory.initial.l1;
  double worst = 0.0;
  for (const auto& d : trajectory.diagnostics) {
    const double v = l10 > 0.0 ? d.l1 / l10 - 1.0 : d.l1;
    if (v > worst) {
      worst = v;
      r.step = d.i;
      r.time = d.t;
    }
  }
  r.worst_violation = worst;
  r.notes = "relative growth of l1 over l1(u0)";
  return finalize(r);
}

CheckReport mass_check(const Trajectory& trajectory, double sup_a, double identity_rtol,
                       double drift_atol) {
  CheckReport r;
  r.id = "mass";
  r.tolerance = 1.0;
  double prev_l1 = trajectory.initial.l1;
  double worst_identity = 0.0;
  double worst_scaled = 0.0;
  for (const auto& d : trajectory.diagnostics) {
    const double err = std::abs(d.mass_drift_observed - d.mass_drift_predicted);
    const double tol = identity_rtol * prev_l1;
    const double scaled = err == 0.0 ? 0.0 : (tol > 0.0 ? err / tol : kInf);
    worst_identity = std::max(worst_identity, prev_l1 > 0.0 ? err / prev_l1 : err);
    if (scaled > worst_scaled) {
      worst_scaled = scaled;
      r.step = d.i;
      r.time = d.t;
    }
    prev_l1 = d.l1;
  }
  const double T = trajectory.times.back();
  const double final_mass = trajectory.diagnostics.empty() ? trajectory.initial.mass
                                                           : trajectory.diagnostics.back().mass;
  const double drift = std::abs(final_mass - trajectory.initial.mass);
  const double drift_tol = trajectory.eps * T * sup_a * trajectory.initial.l1 + drift_atol;
  const double drift_scaled = drift / drift_tol;
  r.metrics["identity_worst_relative"] = worst_identity;
  r.metrics["identity_rtol"] = identity_rtol;
  r.metrics["total_drift"] = drift;
  r.metrics["total_drift_bound"] = drift_tol;
  if (drift_scaled > worst_scaled) {
    r.step = trajectory.diagnostics.empty() ? 0 : trajectory.diagnostics.back().i;
    r.time = T;
  }
  r.worst_violation = std::max(worst_scaled, drift_scaled);
  r.notes = "max of per-step identity error / (rtol*l1(u_prev)) and total drift / bound";
  return finalize(r);
}

CheckReport linf_bound_check(const Trajectory& trajectory, double capital_lambda, double tolerance) {
  CheckReport r;
  r.id = "linf_bound";
  r.tolerance = tolerance;
  const double linf0 = trajectory.initial.linf;
  double worst = 0.0;
  for (const auto& d : trajectory.diagnostics) {
    const double v = d.linf - linf0 - capital_lambda * d.t;
    if (v > worst) {
      worst = v;
      r.step = d.i;
      r.time = d.t;
    }
  }
  r.worst_violation = worst;
  r.metrics["capital_lambda"] = capital_lambda;
  r.metrics["linf0"] = linf0;
  r.notes = "excess of linf(u_i) over linf(u0) + Lambda*t_i";
  return finalize(r);
}

EnergyReport energy_estimate(const Trajectory& trajectory) {
  EnergyReport e;
  const double l20 = trajectory.initial.l2 * trajectory.initial.l2;
  if (l20 == 0.0) return e;
  double dissipated = 0.0;
  double t = 0.0;
  for (const auto& d : trajectory.diagnostics) {
    dissipated += (d.t - t) * d.h1 * d.h1;
    t = d.t;
    const double c = (d.l2 * d.l2 + dissipated) / l20;
    if (c > e.constant) {
      e.constant = c;
      e.worst_step = d.i;
    }
  }
  return e;
}

// ---------------------------------------------------------------------------

ScalarField band_limited_field(const Grid& grid, std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> normal;
  const int modes = std::max(1, grid.n() / 8);
  const double L = grid.half_width();
  const double w = std::numbers::pi / L;  // fundamental wavenumber of the box
  const int d = grid.dim();

  // Coefficients for cos/sin per axis; in 2D all four products per mode pair.
  std::vector<std::array<double, 4>> coef;
  const int pairs = d == 1 ? modes + 1 : (modes + 1) * (modes + 1);
  coef.resize(pairs);
  for (auto& c : coef) {
    for (double& v : c) v = normal(rng);
  }
  ScalarField f(grid);
  for (std::size_t cell = 0; cell < grid.size(); ++cell) {
    const Vec x = grid.cell_center(cell);
    double s = 0.0;
    if (d == 1) {
      for (int k = 0; k <= modes; ++k) {
        s += coef[k][0] * std::cos(k * w * (x[0] + L)) + coef[k][1] * std::sin(k * w * (x[0] + L));
      }
    } else {
      for (int k1 = 0; k1 <= modes; ++k1) {
        const double c1 = std::cos(k1 * w * (x[0] + L)), s1 = std::sin(k1 * w * (x[0] + L));
        for (int k2 = 0; k2 <= modes; ++k2) {
          const double c2 = std::cos(k2 * w * (x[1] + L)), s2 = std::sin(k2 * w * (x[1] + L));
          const auto& c = coef[k1 * (modes + 1) + k2];
          s += c[0] * c1 * c2 + c[1] * c1 * s2 + c[2] * s1 * c2 + c[3] * s1 * s2;
        }
      }
    }
    f[cell] = s;
  }
  const double m = field_norms(f).linf;
  if (m > 0.0) f *= 1.0 / m;
  return f;
}

CheckReport resolvent_lipschitz_check(const LipschitzSetup& setup, const Grid& grid, int trials,
                                      std::uint64_t seed) {
  if (!grid.periodic()) throw Error(ErrorCode::ConfigError, "Lipschitz check needs a periodic grid");
  if (trials < 1) throw Error(ErrorCode::ConfigError, "trials must be >= 1");
  const double ratio_lz = std::isfinite(setup.lambda_zero) ? setup.lambda / setup.lambda_zero : 0.0;
  const double bound = 1.0 / (1.0 - ratio_lz);

  auto solve = [&](const ScalarField& v) {
    ResolventProblem p{.model = setup.model,
                       .t = setup.t,
                       .lambda = setup.lambda,
                       .eps = setup.eps,
                       .v = v,
                       .lambda_zero = setup.lambda_zero,
                       .flux = setup.flux,
                       .tol = setup.tol};
    return solve_resolvent(p).first;
  };
  auto field = [&](std::uint64_t index) {
    ScalarField f = band_limited_field(grid, seed, index);
    f *= setup.amplitude;
    for (double& v : f.values()) v += setup.offset;
    return f;
  };

  CheckReport r;
  r.id = "resolvent_lipschitz";
  double max_ratio = 0.0;
  for (int k = 0; k < trials; ++k) {
    const ScalarField v = field(2 * static_cast<std::uint64_t>(k));
    const ScalarField w = field(2 * static_cast<std::uint64_t>(k) + 1);
    const double dv = h_neg1_norm(setup.eps, v - w);
    if (dv == 0.0) continue;
    const double du = h_neg1_norm(setup.eps, solve(v) - solve(w));
    const double ratio = du / dv;
    if (ratio > max_ratio || std::isnan(ratio)) {
      max_ratio = ratio;
      r.step = k;
    }
  }
  r.metrics["max_ratio"] = max_ratio;
  r.metrics["bound"] = bound;
  r.metrics["lambda"] = setup.lambda;
  r.metrics["lambda_zero"] = setup.lambda_zero;
  r.tolerance = 1e-8;
  r.worst_violation = std::isnan(max_ratio) ? max_ratio : std::max(0.0, max_ratio - bound);
  r.notes = "excess of max ||u-u'||/||v-v'|| in H^-1 over (1 - lambda/lambda_zero)^-1; step = trial index";
  return finalize(r);
}

}  // namespace fpk
