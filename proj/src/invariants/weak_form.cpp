#include <algorithm>
#include <cmath>
#include <numbers>

#include "fpk/field_io.hpp"
#include "fpk/invariants.hpp"

namespace fpk {
namespace {

double squared_radius(const Vec& x, const Vec& c, int dim) {
  double q = 0.0;
  for (int k = 0; k < dim; ++k) q += (x[k] - c[k]) * (x[k] - c[k]);
  return q;
}

// ψ = g(q) with g(q) = (1-q)⁴, q = |x-c|²/R².
double g(double q) { return q < 1.0 ? std::pow(1.0 - q, 4) : 0.0; }
double g1(double q) { return q < 1.0 ? -4.0 * std::pow(1.0 - q, 3) : 0.0; }
double g2(double q) { return q < 1.0 ? 12.0 * std::pow(1.0 - q, 2) : 0.0; }

}  // namespace

double TestFunction::theta(double t) const {
  const double s = t / horizon;
  switch (profile) {
    case TimeProfile::linear: return 1.0 - s;
    case TimeProfile::quadratic: return (1.0 - s) * (1.0 - s);
    case TimeProfile::cosine: return std::cos(0.5 * std::numbers::pi * s);
  }
  return 0.0;
}

double TestFunction::theta_t(double t) const {
  const double s = t / horizon;
  switch (profile) {
    case TimeProfile::linear: return -1.0 / horizon;
    case TimeProfile::quadratic: return -2.0 * (1.0 - s) / horizon;
    case TimeProfile::cosine:
      return -0.5 * std::numbers::pi / horizon * std::sin(0.5 * std::numbers::pi * s);
  }
  return 0.0;
}

double TestFunction::psi(const Vec& x, int dim) const {
  return g(squared_radius(x, center, dim) / (radius * radius));
}

Vec TestFunction::grad_psi(const Vec& x, int dim) const {
  const double R2 = radius * radius;
  const double d = g1(squared_radius(x, center, dim) / R2) * 2.0 / R2;
  Vec out{};
  for (int k = 0; k < dim; ++k) out[k] = d * (x[k] - center[k]);
  return out;
}

double TestFunction::lap_psi(const Vec& x, int dim) const {
  const double R2 = radius * radius;
  const double r2 = squared_radius(x, center, dim);
  const double q = r2 / R2;
  return g2(q) * 4.0 * r2 / (R2 * R2) + g1(q) * 2.0 * dim / R2;
}

double TestFunction::c2_norm(int dim) const {
  double theta_t_sup = 0.0;
  switch (profile) {
    case TimeProfile::linear: theta_t_sup = 1.0 / horizon; break;
    case TimeProfile::quadratic: theta_t_sup = 2.0 / horizon; break;
    case TimeProfile::cosine: theta_t_sup = 0.5 * std::numbers::pi / horizon; break;
  }
  // Radial profiles: sample ρ = |x-c|/R on [0, 1].
  double grad_sup = 0.0, lap_sup = 0.0;
  constexpr int samples = 10000;
  for (int j = 0; j <= samples; ++j) {
    Vec x = center;
    x[0] += radius * j / samples;
    grad_sup = std::max(grad_sup, norm2(grad_psi(x, dim), dim));
    lap_sup = std::max(lap_sup, std::abs(lap_psi(x, dim)));
  }
  return 1.0 + theta_t_sup + grad_sup + lap_sup;
}

std::vector<TestFunction> default_test_functions(const Grid& grid, double T) {
  const double L = grid.half_width();
  const int d = grid.dim();
  auto at = [&](double s) { return d == 1 ? Vec{s, 0.0} : Vec{s, s}; };
  return {
      {at(0.0), 0.5 * L, TimeProfile::linear, T},
      {at(0.2 * L), 0.35 * L, TimeProfile::quadratic, T},
      {at(-0.15 * L), 0.4 * L, TimeProfile::cosine, T},
  };
}

WeakFormResult weak_form_residual(const Trajectory& trajectory, const CoefficientModel& model,
                                  const std::vector<TestFunction>& tests) {
  const auto& fields = trajectory.fields;
  if (fields.size() != trajectory.diagnostics.size() + 1) {
    throw Error(ErrorCode::ConfigError, "weak-form residual needs every step (snapshot_stride = 1)");
  }
  const Grid& g = fields.front().grid();
  const int d = g.dim();
  const double L = g.half_width();
  for (const auto& tf : tests) {
    if (!(tf.radius > 0.0) || !(tf.horizon > 0.0)) {
      throw Error(ErrorCode::ConfigError, "test function radius and horizon must be positive");
    }
    for (int k = 0; k < d; ++k) {
      if (std::abs(tf.center[k]) + tf.radius >= L) {
        throw Error(ErrorCode::TestFunctionNotSupported,
                    "support of radius " + format_double(tf.radius) + " around " +
                        format_double(tf.center[k]) + " reaches the boundary at " + format_double(L));
      }
    }
  }

  const std::size_t cells = g.size();
  const std::size_t m = tests.size();
  std::vector<std::vector<double>> psi(m, std::vector<double>(cells));
  std::vector<std::vector<Vec>> grad(m, std::vector<Vec>(cells));
  std::vector<std::vector<double>> lap(m, std::vector<double>(cells));
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t c = 0; c < cells; ++c) {
      const Vec x = g.cell_center(c);
      psi[j][c] = tests[j].psi(x, d);
      grad[j][c] = tests[j].grad_psi(x, d);
      lap[j][c] = tests[j].lap_psi(x, d);
    }
  }

  const double dv = g.cell_volume();
  std::vector<double> acc(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t c = 0; c < cells; ++c) s += psi[j][c] * fields.front()[c];
    acc[j] = tests[j].theta(0.0) * s * dv;
  }

  static constexpr double nodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double weights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  std::vector<double> beta(cells);
  std::vector<Vec> bstar(cells);
  double t0 = 0.0;
  for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
    const double t1 = trajectory.times[i + 1];
    const ScalarField& u = fields[i + 1];
    const double half = 0.5 * (t1 - t0);
    for (int q = 0; q < 3; ++q) {
      const double tau = t0 + half * (1.0 + nodes[q]);
      for (std::size_t c = 0; c < cells; ++c) {
        const Vec x = g.cell_center(c);
        beta[c] = model.beta(tau, x, u[c]);
        bstar[c] = model.b_star(tau, x, u[c]);
      }
      for (std::size_t j = 0; j < m; ++j) {
        const double th = tests[j].theta(tau);
        const double th_t = tests[j].theta_t(tau);
        double s = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
          if (psi[j][c] == 0.0 && lap[j][c] == 0.0) continue;
          double flux = 0.0;
          for (int k = 0; k < d; ++k) flux += bstar[c][k] * grad[j][c][k];
          s += u[c] * th_t * psi[j][c] + th * (beta[c] * lap[j][c] + flux);
        }
        acc[j] += weights[q] * half * s * dv;
      }
    }
    t0 = t1;
  }

  WeakFormResult out;
  out.residuals = acc;
  out.mu = trajectory.mu;
  out.h = g.spacing();
  for (std::size_t j = 0; j < m; ++j) {
    out.c2_norms.push_back(tests[j].c2_norm(d));
    out.constant = std::max(out.constant,
                            std::abs(acc[j]) / (out.c2_norms[j] * (out.mu + out.h * out.h)));
  }
  return out;
}

CheckReport weak_form_refinement(const WeakFormResult& coarse, const WeakFormResult& fine,
                                 double max_ratio) {
  if (coarse.residuals.size() != fine.residuals.size()) {
    throw Error(ErrorCode::ConfigError, "weak-form results use different test functions");
  }
  CheckReport r;
  r.id = "weak_form";
  r.tolerance = max_ratio;
  double worst = 0.0;
  for (std::size_t j = 0; j < coarse.residuals.size(); ++j) {
    const double c = std::abs(coarse.residuals[j]);
    const double f = std::abs(fine.residuals[j]);
    const double ratio = f == 0.0 ? 0.0 : (c > 0.0 ? f / c : kInf);
    r.metrics["ratio_" + std::to_string(j)] = ratio;
    r.metrics["coarse_residual_" + std::to_string(j)] = coarse.residuals[j];
    r.metrics["fine_residual_" + std::to_string(j)] = fine.residuals[j];
    if (ratio > worst || std::isnan(ratio)) {
      worst = ratio;
      r.step = static_cast<int>(j);
    }
  }
  r.metrics["coarse_constant"] = coarse.constant;
  r.metrics["fine_constant"] = fine.constant;
  r.worst_violation = worst;
  r.notes = "max fine/coarse residual ratio over test functions under (mu, h) -> (mu/2, h/2); step = test index";
  return finalize(r);
}

}  // namespace fpk
