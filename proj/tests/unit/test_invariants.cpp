#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "fpk/invariants.hpp"
#include "oracles.hpp"

using namespace fpk;

namespace {

ScalarField gaussian_field(const Grid& g, double center, double variance) {
  return ScalarField::sample(g, [&](const Vec& x) { return oracle::gaussian(x[0], center, variance); });
}

SolverConfig config(double T, double mu, double eps = 1e-4, FluxMode flux = FluxMode::upwind) {
  SolverConfig c;
  c.T = T;
  c.mu = mu;
  c.eps = eps;
  c.flux = flux;
  c.snapshot_stride = 1;
  return c;
}

}  // namespace

TEST_CASE("finalize fails NaN") {
  CheckReport r;
  r.worst_violation = std::numeric_limits<double>::quiet_NaN();
  r.tolerance = 1.0;
  CHECK_FALSE(finalize(r).pass);
  r.worst_violation = 1.0;
  CHECK(finalize(r).pass);
}

TEST_CASE("single Fourier modes are damped by the symbol of the resolvent") {
  const Grid g(1, 4.0, 64, Boundary::periodic);
  const double a = 0.5, c = 1.5, eps = 1e-3, lambda = 0.2;
  const auto m = make_linear_model(1, a, {c});
  for (int mode : {1, 4, 11}) {
    const double k = 2 * std::numbers::pi * mode / (2 * g.half_width());
    const ScalarField v = ScalarField::sample(g, [&](const Vec& x) { return std::cos(k * x[0]) + 0.3 * std::sin(k * x[0]); });
    ResolventProblem p{.model = m.get(), .lambda = lambda, .eps = eps, .v = v};
    p.tol = {.atol_per_volume = 1e-15, .rtol = 1e-13};
    const ScalarField u = solve_resolvent(p).first;
    CHECK(h_neg1_norm(eps, u) / h_neg1_norm(eps, v) ==
          doctest::Approx(oracle::linear_mode_gain(mode, g, lambda, eps, a, c)).epsilon(1e-9));
  }
}

TEST_CASE("Lipschitz ratio stays below the bound for the linear model") {
  const Grid g(1, 5.0, 64, Boundary::periodic);
  const auto m = make_linear_model(1, 1.0, {2.0});
  const double lz = lambda_zero_from(1.0, 2.0);
  for (double frac : {0.25, 0.5}) {
    LipschitzSetup s{.model = m.get(), .lambda = frac * lz, .eps = 1e-3, .lambda_zero = lz};
    const CheckReport r = resolvent_lipschitz_check(s, g, 8, 17);
    CHECK(r.pass);
    CHECK(r.metrics.at("max_ratio") <= 1.0 + 1e-9);
    CHECK(r.metrics.at("bound") == doctest::Approx(1 / (1 - frac)));
  }
}

TEST_CASE("Lipschitz ratio grows with λ under an expanding drift") {
  // Weak diffusion against an x-dependent expanding drift: the only regime
  // where the ratio exceeds 1. There it follows the bound upwards.
  const Grid g(1, 5.0, 128, Boundary::periodic);
  const double a = 0.2, c = 3.0;
  const auto m = make_saturated_drift_model(1, a, c);
  const double lz = lambda_zero_from(a, std::abs(c) * std::tanh(5.0));
  double prev = 0.0;
  for (double frac : {0.25, 0.375, 0.5}) {
    LipschitzSetup s{.model = m.get(), .lambda = frac * lz, .eps = 1e-3, .lambda_zero = lz};
    const CheckReport r = resolvent_lipschitz_check(s, g, 50, 3);
    CHECK(r.pass);
    const double ratio = r.metrics.at("max_ratio");
    CHECK(ratio > 1.0);
    CHECK(ratio >= prev);
    prev = ratio;
  }
}

TEST_CASE("without drift the resolvent is a contraction") {
  const Grid g(1, 5.0, 64, Boundary::periodic);
  const auto m = make_bosonic_model(1, 2.0);
  for (double lambda : {0.01, 0.1, 1.0}) {
    LipschitzSetup s{.model = m.get(), .lambda = lambda, .eps = 1e-3, .offset = 1.0};
    const CheckReport r = resolvent_lipschitz_check(s, g, 10, 8);
    CHECK(r.metrics.at("bound") == 1.0);
    CHECK(r.metrics.at("max_ratio") <= 1.0 + 1e-8);
  }
}

TEST_CASE("Lipschitz check on identical data and on bad grids") {
  const Grid g(1, 5.0, 32, Boundary::periodic);
  const auto m = make_bosonic_model(1, 1.0, {0.5});
  LipschitzSetup s{.model = m.get(), .lambda = 0.1, .eps = 1e-3, .offset = 1.0, .amplitude = 0.0};
  const CheckReport r = resolvent_lipschitz_check(s, g, 4, 1);
  CHECK(r.pass);
  CHECK(r.metrics.at("max_ratio") == 0.0);
  CHECK_THROWS_AS(resolvent_lipschitz_check(s, Grid(1, 5.0, 32, Boundary::zero_flux), 4, 1), Error);
}

TEST_CASE("L¹ contraction under the upwind flux") {
  const auto m = make_bosonic_model(1, 2.0, {0.5});
  const Grid g(1, 10.0, 128, Boundary::zero_flux);
  const SolverConfig c = config(0.5, 0.01);
  const CheckReport r = l1_contraction_check(*m, c, gaussian_field(g, 0, 1), gaussian_field(g, 0.5, 1));
  CHECK(r.pass);
  CHECK(r.worst_violation <= 1e-9);
  CHECK(r.metrics.at("max_l1_distance") <= r.metrics.at("initial_l1_distance"));

  const CheckReport same = l1_contraction_check(*m, c, gaussian_field(g, 0, 1), gaussian_field(g, 0, 1));
  CHECK(same.pass);
  CHECK(same.tolerance == 0.0);
}

TEST_CASE("contraction refinement") {
  CheckReport coarse, fine;
  coarse.worst_violation = 1e-3;
  fine.worst_violation = 5e-4;
  CHECK(l1_contraction_refinement(coarse, fine).pass);
  fine.worst_violation = 8e-4;
  CHECK_FALSE(l1_contraction_refinement(coarse, fine).pass);
  coarse.worst_violation = 1e-10;
  fine.worst_violation = 5e-10;
  CHECK(l1_contraction_refinement(coarse, fine).pass);
}

TEST_CASE("positivity, L¹ bound and mass for the upwind scheme") {
  const auto m = make_bosonic_model(1, 2.0, {0.5});
  const Grid g(1, 10.0, 128, Boundary::zero_flux);
  const Trajectory tr = solve_trajectory(*m, config(0.5, 0.01, 1e-3), gaussian_field(g, 0, 1));
  CHECK(positivity_check(tr).pass);
  CHECK(l1_bound_check(tr, g.spacing()).pass);
  const CheckReport mass = mass_check(tr, 2.0);
  CHECK(mass.pass);
  CHECK(mass.metrics.at("total_drift") > 0.0);
  // A bound with a smaller diffusion sup is violated: the drift is real.
  CHECK_FALSE(mass_check(tr, 0.2).pass);
}

TEST_CASE("centered flux loses positivity when the cell Péclet number is large") {
  const auto m = make_linear_model(1, 0.01, {5.0});
  const Grid g(1, 10.0, 128, Boundary::zero_flux);
  const ScalarField u0 = gaussian_field(g, -3, 0.1);
  const Trajectory centered = solve_trajectory(*m, config(0.3, 0.01, 1e-4, FluxMode::centered), u0);
  CHECK_FALSE(positivity_check(centered).pass);
  const Trajectory upwind = solve_trajectory(*m, config(0.3, 0.01, 1e-4, FluxMode::upwind), u0);
  CHECK(positivity_check(upwind).pass);
}

TEST_CASE("L∞ growth with a compressive drift stays below Λ·t") {
  const auto m = make_saturated_drift_model(1, 1.0, -2.0);
  const Grid g(1, 6.0, 128, Boundary::zero_flux);
  const ScalarField u0 = ScalarField::sample(g, [](const Vec&) { return 0.5; });
  const HypothesisBox box{.dim = 1, .T = 0.5, .half_width = 6.0, .r_min = 0.0, .r_max = 1.0};
  const double L = capital_lambda(*m, box, 41);
  const Trajectory tr = solve_trajectory(*m, config(0.5, 0.01), u0);
  const CheckReport r = linf_bound_check(tr, L);
  CHECK(r.pass);
  // The field does grow, so the bound is not vacuous.
  CHECK(tr.diagnostics.back().linf > 0.5);
  CHECK_FALSE(linf_bound_check(tr, 0.0).pass);
}

TEST_CASE("test functions") {
  TestFunction f{.center = {0.5, 0}, .radius = 2.0, .profile = TimeProfile::quadratic, .horizon = 1.0};
  CHECK(f.theta(1.0) == 0.0);
  CHECK(f.theta(0.0) == 1.0);
  CHECK(f.theta_t(0.0) == doctest::Approx(-2.0));
  CHECK(f.psi({2.5, 0}, 1) == 0.0);
  CHECK(f.psi({0.5, 0}, 1) == 1.0);
  const double d = 1e-5;
  for (double x : {-0.7, 0.1, 1.9}) {
    CHECK(f.grad_psi({x, 0}, 1)[0] == doctest::Approx((f.psi({x + d, 0}, 1) - f.psi({x - d, 0}, 1)) / (2 * d)).epsilon(1e-6));
    const double dd = 1e-4;
    CHECK(f.lap_psi({x, 0}, 1) ==
          doctest::Approx((f.psi({x + dd, 0}, 1) - 2 * f.psi({x, 0}, 1) + f.psi({x - dd, 0}, 1)) / (dd * dd)).epsilon(1e-5));
  }
  TestFunction cosine{.profile = TimeProfile::cosine, .horizon = 2.0};
  CHECK(cosine.theta(2.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(cosine.c2_norm(1) > 0.0);
}

TEST_CASE("weak-form residual shrinks under refinement") {
  const auto m = make_bosonic_model(1, 2.0, {0.5});
  const double T = 0.5;
  WeakFormResult res[2];
  for (int k = 0; k < 2; ++k) {
    const int n = 64 << k;
    const Grid g(1, 10.0, n, Boundary::zero_flux);
    const Trajectory tr = solve_trajectory(*m, config(T, 0.02 / (1 << k), 1e-6), gaussian_field(g, 0, 1));
    res[k] = weak_form_residual(tr, *m, default_test_functions(g, T));
    CHECK(res[k].residuals.size() == 3);
  }
  const CheckReport r = weak_form_refinement(res[0], res[1]);
  CHECK(r.pass);
  CHECK(r.worst_violation < 0.6);
}

TEST_CASE("weak-form errors") {
  const auto m = make_linear_model(1, 1.0);
  const Grid g(1, 4.0, 32, Boundary::zero_flux);
  SolverConfig c = config(0.2, 0.05);
  const Trajectory full = solve_trajectory(*m, c, gaussian_field(g, 0, 1));
  TestFunction wide{.radius = 4.0, .horizon = 0.2};
  CHECK_THROWS_AS(weak_form_residual(full, *m, {wide}), Error);
  c.snapshot_stride = 2;
  const Trajectory sparse = solve_trajectory(*m, c, gaussian_field(g, 0, 1));
  CHECK_THROWS_AS(weak_form_residual(sparse, *m, default_test_functions(g, 0.2)), Error);
}

TEST_CASE("energy estimate") {
  const auto m = make_linear_model(1, 1.0);
  const Grid g(1, 8.0, 128, Boundary::zero_flux);
  const Trajectory tr = solve_trajectory(*m, config(0.5, 0.01), gaussian_field(g, 0, 1));
  const EnergyReport e = energy_estimate(tr);
  // For the heat equation the discrete energy identity gives a constant ≤ 1.
  CHECK(e.constant <= 1.0 + 1e-9);
  CHECK(e.constant > 0.5);
}
