#include "fpk/resolvent.hpp"

#include <algorithm>
#include <cmath>

#include "fpk/error.hpp"
#include "fpk/kernels.hpp"
#include "fpk/krylov.hpp"

namespace fpk {

const char* to_string(FluxMode mode) {
  return mode == FluxMode::centered ? "centered" : "upwind";
}

const char* to_string(NonlinearMethod method) {
  return method == NonlinearMethod::newton ? "newton" : "picard";
}

namespace {

struct Layout {
  explicit Layout(const Grid& g) : grid(g), inv_h(1.0 / g.spacing()) {
    centers.reserve(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) centers.push_back(g.cell_center(c));
    for (int k = 0; k < g.dim(); ++k) links[k] = face_links(g, k);
  }

  const Grid& grid;
  double inv_h;
  std::vector<Vec> centers;
  std::array<std::vector<FaceLink>, kMaxDim> links;
};

// Coefficients sampled cellwise at the current iterate.
struct CellState {
  std::vector<double> beta, beta_r;
  std::array<std::vector<double>, kMaxDim> b, b_r, b_star, b_star_r;
};

CellState evaluate(const CoefficientModel& model, double t, const Layout& lay,
                   const ScalarField& u, bool derivatives) {
  const std::size_t n = u.size();
  const int dim = lay.grid.dim();
  CellState s;
  s.beta.resize(n);
  if (derivatives) s.beta_r.resize(n);
  for (int k = 0; k < dim; ++k) {
    s.b[k].resize(n);
    s.b_star[k].resize(n);
    if (derivatives) {
      s.b_r[k].resize(n);
      s.b_star_r[k].resize(n);
    }
  }
  bool finite = true;
  for (std::size_t c = 0; c < n; ++c) {
    const Vec& x = lay.centers[c];
    const double r = u[c];
    s.beta[c] = model.beta(t, x, r);
    finite = finite && std::isfinite(s.beta[c]);
    const Vec b = model.drift(t, x, r);
    Vec br{};
    if (derivatives) {
      s.beta_r[c] = model.beta_r(t, x, r);
      br = model.drift_r(t, x, r);
      finite = finite && std::isfinite(s.beta_r[c]);
    }
    for (int k = 0; k < dim; ++k) {
      s.b[k][c] = b[k];
      s.b_star[k][c] = b[k] * r;
      finite = finite && std::isfinite(s.b_star[k][c]);
      if (derivatives) {
        s.b_r[k][c] = br[k];
        s.b_star_r[k][c] = b[k] + r * br[k];
        finite = finite && std::isfinite(s.b_star_r[k][c]);
      }
    }
  }
  if (!finite) throw Error(ErrorCode::NonFiniteCoefficient, "coefficients not finite on iterate");
  return s;
}

double face_velocity(const CellState& s, int k, const FaceLink& l) {
  return 0.5 * (s.b[k][l.left] + s.b[k][l.right]);
}

FaceField flux_from(const Layout& lay, const CellState& s, const ScalarField& u, FluxMode mode) {
  FaceField F(lay.grid);
  for (int k = 0; k < lay.grid.dim(); ++k) {
    auto f = F.axis(k);
    for (const FaceLink& l : lay.links[k]) {
      if (mode == FluxMode::centered) {
        f[l.face] = 0.5 * (s.b_star[k][l.left] + s.b_star[k][l.right]);
      } else {
        const double w = face_velocity(s, k, l);
        f[l.face] = w >= 0.0 ? w * u[l.left] : w * u[l.right];
      }
    }
  }
  F.enforce_boundary();
  return F;
}

ScalarField operator_from(const Layout& lay, double eps, const CellState& s, const ScalarField& u,
                          FluxMode mode) {
  const ScalarField B(lay.grid, s.beta);
  ScalarField out = helmholtz_apply(eps, B);
  out += divergence(flux_from(lay, s, u, mode));
  return out;
}

// J·δ = δ + λ[(εI-Δ)(β_r δ) + div(∂F/∂u δ)]
void jacobian_apply(const Layout& lay, double lambda, double eps, const CellState& s,
                    const ScalarField& u, FluxMode mode, std::span<const double> delta,
                    std::span<double> out) {
  const Grid& g = lay.grid;
  ScalarField w(g);
  kernels::active().multiply(s.beta_r.data(), delta.data(), w.values().data(), w.size());
  ScalarField Jd = helmholtz_apply(eps, w);

  FaceField dF(g);
  for (int k = 0; k < g.dim(); ++k) {
    auto f = dF.axis(k);
    for (const FaceLink& l : lay.links[k]) {
      if (mode == FluxMode::centered) {
        f[l.face] = 0.5 * (s.b_star_r[k][l.left] * delta[l.left] +
                           s.b_star_r[k][l.right] * delta[l.right]);
      } else {
        const double wf = face_velocity(s, k, l);
        const double dw = 0.5 * (s.b_r[k][l.left] * delta[l.left] +
                                 s.b_r[k][l.right] * delta[l.right]);
        f[l.face] = wf >= 0.0 ? dw * u[l.left] + wf * delta[l.left]
                              : dw * u[l.right] + wf * delta[l.right];
      }
    }
  }
  Jd += divergence(dF);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = delta[c] + lambda * Jd[c];
}

std::vector<double> jacobian_diagonal(const Layout& lay, double lambda, double eps,
                                      const CellState& s, FluxMode mode) {
  const Grid& g = lay.grid;
  const double inv_h2 = lay.inv_h * lay.inv_h;
  std::vector<double> diag(g.size());
  for (std::size_t c = 0; c < diag.size(); ++c) diag[c] = 1.0 + lambda * eps * s.beta_r[c];
  for (int k = 0; k < g.dim(); ++k) {
    for (const FaceLink& l : lay.links[k]) {
      diag[l.left] += lambda * inv_h2 * s.beta_r[l.left];
      diag[l.right] += lambda * inv_h2 * s.beta_r[l.right];
      if (mode == FluxMode::centered) {
        diag[l.left] += lambda * lay.inv_h * 0.5 * s.b_star_r[k][l.left];
        diag[l.right] -= lambda * lay.inv_h * 0.5 * s.b_star_r[k][l.right];
      } else {
        const double w = face_velocity(s, k, l);
        if (w >= 0.0) {
          diag[l.left] += lambda * lay.inv_h * w;
        } else {
          diag[l.right] -= lambda * lay.inv_h * w;
        }
      }
    }
  }
  for (double& d : diag) {
    if (!(std::fabs(d) > 1e-12)) d = 1.0;
  }
  return diag;
}

double weighted_l2(const ScalarField& r) { return std::sqrt(inner_l2(r, r)); }

class ResolventSolver {
 public:
  explicit ResolventSolver(const ResolventProblem& p) : p_(p), lay_(p.v.grid()) {}

  ScalarField residual(const ScalarField& u, const CellState& s) const {
    ScalarField r = operator_from(lay_, p_.eps, s, u, p_.flux);
    kernels::xpay(u.values(), p_.lambda, r.values());  // u + λA(u)
    r -= p_.v;
    return r;
  }

  ScalarField residual(const ScalarField& u) const {
    return residual(u, evaluate(*p_.model, p_.t, lay_, u, false));
  }

  void clamp(ScalarField& u, SolveStats& stats) const {
    if (!std::isfinite(p_.r_max)) return;
    for (double& x : u.values()) {
      if (x > p_.r_max || x < -p_.r_max) {
        x = std::clamp(x, -p_.r_max, p_.r_max);
        ++stats.clamp_events;
      }
    }
  }

  bool newton(ScalarField& u, double& rnorm, SolveStats& stats, double tol) const {
    for (int it = 0; it < p_.tol.max_newton; ++it) {
      if (rnorm <= tol) return true;
      const CellState s = evaluate(*p_.model, p_.t, lay_, u, true);
      const ScalarField r = residual(u, s);
      std::vector<double> rhs(r.size());
      for (std::size_t c = 0; c < rhs.size(); ++c) rhs[c] = -r[c];
      std::vector<double> delta(r.size(), 0.0);
      const auto diag = jacobian_diagonal(lay_, p_.lambda, p_.eps, s, p_.flux);
      LinearOperator J = [&](std::span<const double> in, std::span<double> out) {
        jacobian_apply(lay_, p_.lambda, p_.eps, s, u, p_.flux, in, out);
      };
      const KrylovResult lin =
          bicgstab(J, diag, rhs, delta, p_.tol.linear_rtol, p_.tol.max_linear);
      stats.linear_iterations += lin.iterations;
      if (!lin.converged && !(lin.relative_residual < 1e-3)) return false;

      // Damping: halve the step until the H⁻¹ residual decreases.
      double alpha = 1.0;
      bool accepted = false;
      for (int k = 0; k <= p_.tol.max_halvings; ++k, alpha *= 0.5) {
        ScalarField trial = u;
        kernels::axpy(alpha, delta, trial.values());
        clamp(trial, stats);
        double tn;
        try {
          tn = h_neg1_norm(p_.eps, residual(trial));
        } catch (const Error& e) {
          if (e.code() != ErrorCode::NonFiniteCoefficient) throw;
          continue;
        }
        if (tn < rnorm) {
          u = std::move(trial);
          rnorm = tn;
          accepted = true;
          break;
        }
      }
      ++stats.iterations;
      if (!accepted) return rnorm <= tol;
    }
    return rnorm <= tol;
  }

  // Lagged-coefficient iteration: freeze a = β/u and b at the current
  // iterate, solve the resulting linear problem, and relax.
  bool picard(ScalarField& u, double& rnorm, SolveStats& stats, double tol) const {
    const Grid& g = lay_.grid;
    for (int it = 0; it < p_.tol.max_picard; ++it) {
      if (rnorm <= tol) return true;
      CellState s = evaluate(*p_.model, p_.t, lay_, u, true);
      double nu = kInf, sup_br = 0.0;
      for (double br : s.beta_r) {
        nu = std::min(nu, br);
        sup_br = std::max(sup_br, std::fabs(br));
      }
      const double omega = std::clamp(nu / (sup_br * sup_br + 1.0), 1e-3, 1.0);

      CellState frozen;
      frozen.beta_r.resize(u.size());
      for (std::size_t c = 0; c < u.size(); ++c) {
        frozen.beta_r[c] = p_.model->diffusion(p_.t, lay_.centers[c], u[c]);
      }
      for (int k = 0; k < g.dim(); ++k) {
        frozen.b[k] = s.b[k];
        frozen.b_star_r[k] = s.b[k];
        frozen.b_r[k].assign(u.size(), 0.0);
      }
      const auto diag = jacobian_diagonal(lay_, p_.lambda, p_.eps, frozen, p_.flux);
      LinearOperator L = [&](std::span<const double> in, std::span<double> out) {
        jacobian_apply(lay_, p_.lambda, p_.eps, frozen, u, p_.flux, in, out);
      };
      std::vector<double> w(u.values().begin(), u.values().end());
      const KrylovResult lin =
          bicgstab(L, diag, p_.v.values(), w, p_.tol.linear_rtol, p_.tol.max_linear);
      stats.linear_iterations += lin.iterations;
      if (!lin.converged && !(lin.relative_residual < 1e-3)) return false;
      for (std::size_t c = 0; c < u.size(); ++c) u[c] = (1.0 - omega) * u[c] + omega * w[c];
      clamp(u, stats);
      rnorm = h_neg1_norm(p_.eps, residual(u));
      ++stats.iterations;
      if (!std::isfinite(rnorm)) return false;
    }
    return rnorm <= tol;
  }

 private:
  const ResolventProblem& p_;
  Layout lay_;
};

void validate(const ResolventProblem& p) {
  if (p.model == nullptr) throw Error(ErrorCode::ConfigError, "resolvent problem without a model");
  if (p.model->dim() != p.v.grid().dim()) {
    throw Error(ErrorCode::ConfigError, "model and grid dimensions differ");
  }
  if (!(p.eps > 0.0)) throw Error(ErrorCode::ConfigError, "eps must be positive");
  if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda)) {
    throw Error(ErrorCode::ConfigError, "lambda must be a finite nonnegative number");
  }
  if (std::isfinite(p.lambda_zero) && p.lambda > 0.5 * p.lambda_zero * (1.0 + 1e-12)) {
    throw Error(ErrorCode::StepTooLarge, "lambda=" + std::to_string(p.lambda) +
                                             " exceeds lambda_zero/2=" +
                                             std::to_string(0.5 * p.lambda_zero));
  }
  p.v.require_finite();
}

}  // namespace

FaceField drift_flux(const CoefficientModel& model, double t, const ScalarField& y,
                     FluxMode flux) {
  const Layout lay(y.grid());
  return flux_from(lay, evaluate(model, t, lay, y, false), y, flux);
}

ScalarField apply_operator(const CoefficientModel& model, double t, double eps,
                           const ScalarField& y, FluxMode flux) {
  const Layout lay(y.grid());
  return operator_from(lay, eps, evaluate(model, t, lay, y, false), y, flux);
}

ScalarField resolvent_residual(const ResolventProblem& p, const ScalarField& u) {
  return ResolventSolver(p).residual(u);
}

ScalarField transformed_operator(const CoefficientModel& model, double t, double lambda,
                                 double eps, const ScalarField& u, FluxMode flux) {
  const Layout lay(u.grid());
  const CellState s = evaluate(model, t, lay, u, false);
  ScalarField rhs = u;
  kernels::axpy(lambda, divergence(flux_from(lay, s, u, flux)).values(), rhs.values());
  ScalarField out = helmholtz_solve(eps, rhs);
  kernels::axpy(lambda, s.beta, out.values());
  return out;
}

std::pair<ScalarField, SolveStats> solve_resolvent(const ResolventProblem& p) {
  validate(p);
  SolveStats stats;
  const Grid& g = p.v.grid();
  const double vnorm = h_neg1_norm(p.eps, p.v);
  stats.tolerance = p.tol.atol_per_volume * g.volume() + p.tol.rtol * vnorm;

  if (p.lambda == 0.0) {
    stats.converged = true;
    return {p.v, stats};
  }

  const ResolventSolver solver(p);
  ScalarField u = p.v;
  solver.clamp(u, stats);
  double rnorm = h_neg1_norm(p.eps, solver.residual(u));

  bool ok = false;
  if (!p.force_picard) ok = solver.newton(u, rnorm, stats, stats.tolerance);
  if (!ok) {
    stats.method = NonlinearMethod::picard;
    if (!std::isfinite(rnorm)) {
      u = p.v;
      rnorm = h_neg1_norm(p.eps, solver.residual(u));
    }
    ok = solver.picard(u, rnorm, stats, stats.tolerance);
  }

  const ScalarField r = solver.residual(u);
  stats.final_residual_hneg1 = h_neg1_norm(p.eps, r);
  stats.final_residual_l2 = weighted_l2(r);
  stats.converged = ok && stats.final_residual_hneg1 <= stats.tolerance;
  if (!stats.converged) {
    throw Error(ErrorCode::SolverDiverged,
                "resolvent residual " + std::to_string(stats.final_residual_hneg1) +
                    " above tolerance " + std::to_string(stats.tolerance) + " after " +
                    std::to_string(stats.iterations) + " iterations");
  }
  return {std::move(u), stats};
}

}  // namespace fpk
