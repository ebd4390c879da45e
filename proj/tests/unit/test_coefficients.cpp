#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fpk/coefficients.hpp"
#include "fpk/error.hpp"

using namespace fpk;

namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::ConfigError;
}

double fd_r(const CoefficientModel& m, double t, const Vec& x, double r) {
  const double d = 1e-6;
  return (m.beta(t, x, r + d) - m.beta(t, x, r - d)) / (2 * d);
}

}  // namespace

TEST_CASE("eval of the linear model") {
  const auto m = make_linear_model(1, 0.5, {2.0});
  const auto s = eval(*m, 0.0, {0.3}, 3.0);
  CHECK(s.beta == doctest::Approx(1.5));
  CHECK(s.beta_r == doctest::Approx(0.5));
  CHECK(s.a == doctest::Approx(0.5));
  CHECK(s.sigma == doctest::Approx(1.0));
  CHECK(s.b[0] == doctest::Approx(2.0));
  CHECK(s.b_star[0] == doctest::Approx(6.0));
  CHECK(s.b_star_r[0] == doctest::Approx(2.0));
}

TEST_CASE("eval of the bosonic model") {
  const auto m = make_bosonic_model(1, 2.0);
  const auto s = eval(*m, 0.0, {0.0}, 1.0);
  CHECK(s.beta == doctest::Approx(2.0 * std::numbers::ln2).epsilon(1e-14));
  CHECK(s.beta_r == doctest::Approx(1.0));
  CHECK(s.a == doctest::Approx(2.0 * std::numbers::ln2));
  // a(0) is the continuous extension β_r(0).
  CHECK(eval(*m, 0.0, {0.0}, 0.0).a == doctest::Approx(2.0));
  CHECK(m->beta(0.0, {0.0}, -1.0) == doctest::Approx(-2.0 * std::numbers::ln2));
}

TEST_CASE("closed-form derivatives agree with finite differences") {
  const ModelPtr models[] = {
      make_linear_model(2, 0.7, {0.3, -0.1}),
      make_bosonic_model(2, 1.3, {0.2, 0.2}),
      make_saturated_drift_model(2, 0.4, -1.5),
      make_time_varying_model(2, 1.1, 0.8, {0.1, 0.0}),
      make_piecewise_model(2, 1.0, 0.5, 2.0),
  };
  const Vec xs[] = {{0.0, 0.0}, {0.7, -0.4}, {-1.3, 2.1}};
  const double rs[] = {-1.5, 0.3, 1.0 + 0.5, 4.0};
  for (const auto& m : models) {
    CAPTURE(m->id());
    for (const Vec& x : xs) {
      for (double r : rs) {
        const double t = 0.35;
        CHECK(m->beta_r(t, x, r) == doctest::Approx(fd_r(*m, t, x, r)).epsilon(1e-6));
        const double d = 1e-6;
        CHECK(m->beta_t(t, x, r) ==
              doctest::Approx((m->beta(t + d, x, r) - m->beta(t - d, x, r)) / (2 * d)).epsilon(1e-6));
        const Vec gx = m->beta_x(t, x, r);
        double lap = 0.0, div = 0.0;
        for (int k = 0; k < 2; ++k) {
          Vec hi = x, lo = x;
          hi[k] += d;
          lo[k] -= d;
          CHECK(gx[k] == doctest::Approx((m->beta(t, hi, r) - m->beta(t, lo, r)) / (2 * d)).epsilon(1e-6));
          div += (m->drift(t, hi, r)[k] - m->drift(t, lo, r)[k]) / (2 * d);
          const double dd = 1e-4;
          Vec h2 = x, l2 = x;
          h2[k] += dd;
          l2[k] -= dd;
          lap += (m->beta(t, h2, r) - 2 * m->beta(t, x, r) + m->beta(t, l2, r)) / (dd * dd);
        }
        CHECK(m->drift_div_x(t, x, r) == doctest::Approx(div).epsilon(1e-6));
        CHECK(m->beta_laplacian_x(t, x, r) == doctest::Approx(lap).epsilon(1e-5).scale(1e-4));
      }
    }
  }
}

TEST_CASE("linear model: ν = a, λ₀ = ∞ without drift and 2ν/|c|² with it") {
  const HypothesisBox box{.dim = 1, .T = 1.0, .half_width = 2.0, .r_min = 0.0, .r_max = 3.0};
  const auto rep = check_hypotheses(*make_linear_model(1, 1.0), box, 11);
  CHECK(rep.ok());
  CHECK(rep.nu_hat == doctest::Approx(1.0));
  CHECK(rep.lambda_zero == kInf);
  CHECK(rep.capital_lambda == 0.0);

  const auto rep2 = check_hypotheses(*make_linear_model(1, 0.5, {2.0}), box, 11);
  CHECK(rep2.ok());
  CHECK(rep2.sup_b_star_r == doctest::Approx(2.0));
  CHECK(rep2.lambda_zero == doctest::Approx(2.0 * 0.5 / 4.0));
  CHECK(lambda_zero_from(0.5, 2.0) == doctest::Approx(0.25));
  CHECK(lambda_zero_from(0.5, 0.0) == kInf);
  CHECK(lambda_zero_from(0.0, 1.0) == 0.0);
}

TEST_CASE("bosonic ν̂ approaches γ/(1+R) and only decreases under refinement") {
  const double gamma = 2.0, R = 10.0;
  const HypothesisBox box{.dim = 1, .T = 1.0, .half_width = 1.0, .r_min = 0.0, .r_max = R};
  const double exact = gamma / (1 + R);
  double prev = kInf;
  // Nested grids: 2^k + 1 samples contain every point of the coarser grid.
  for (int samples : {3, 5, 9, 17, 33, 65}) {
    const auto rep = check_hypotheses(*make_bosonic_model(1, gamma), box, samples);
    CHECK(rep.ok());
    CHECK(rep.nu_hat >= exact * (1 - 1e-12));
    CHECK(rep.nu_hat <= prev);
    prev = rep.nu_hat;
  }
  CHECK(prev == doctest::Approx(exact).epsilon(0.01));
}

TEST_CASE("Λ for homogeneous and tanh-drift models") {
  const HypothesisBox box{.dim = 1, .T = 0.5, .half_width = 5.0, .r_min = 0.0, .r_max = 1.0};
  CHECK(capital_lambda(*make_bosonic_model(1, 1.0, {0.5}), box, 21) == 0.0);
  // |div b·r| = |c|·sech²(x)·r is largest at x = 0, r = r_max.
  CHECK(capital_lambda(*make_saturated_drift_model(1, 1.0, 2.0), box, 21) == doctest::Approx(2.0));
  const HypothesisBox box2{.dim = 2, .T = 0.5, .half_width = 5.0, .r_min = 0.0, .r_max = 1.0};
  CHECK(capital_lambda(*make_saturated_drift_model(2, 1.0, 2.0), box2, 21) == doctest::Approx(4.0));
}

TEST_CASE("piecewise model with a falling slope is reported") {
  const HypothesisBox box{.dim = 1, .T = 1.0, .half_width = 1.0, .r_min = 0.0, .r_max = 3.0};
  const auto rep = check_hypotheses(*make_piecewise_model(1, 1.0, -0.5, 1.0), box, 13);
  CHECK_FALSE(rep.ok());
  CHECK(rep.nu_hat < 0.0);
  bool monotone = false;
  for (const auto& v : rep.violations) {
    CHECK(v.residual > 0.0);
    monotone = monotone || v.hypothesis == "beta_monotone";
  }
  CHECK(monotone);
  // With a rising second slope β is monotone, so ν̂ = min slope.
  const auto ok = check_hypotheses(*make_piecewise_model(1, 1.0, 0.5, 1.0), box, 13);
  CHECK(ok.nu_hat == doctest::Approx(0.5));
}

TEST_CASE("time-varying model satisfies its own growth bounds") {
  const HypothesisBox box{.dim = 2, .T = 1.0, .half_width = 3.0, .r_min = -2.0, .r_max = 4.0};
  const auto rep = check_hypotheses(*make_time_varying_model(2, 1.0, 0.5, {0.2, 0.1}), box, 9);
  CHECK(rep.violations.empty());
  CHECK(rep.nu_hat > 0.0);
  CHECK_FALSE(check_b_star_lipschitz(*make_time_varying_model(2, 1.0, 0.5, {0.2, 0.1}), box, 9));
}

TEST_CASE("drift Lipschitz condition fails for a zero h bound") {
  // The saturated model's h vanishes at x = 0 where b = 0, so it holds there.
  const HypothesisBox box{.dim = 1, .T = 1.0, .half_width = 2.0, .r_min = 0.0, .r_max = 2.0};
  CHECK_FALSE(check_b_star_lipschitz(*make_saturated_drift_model(1, 1.0, -1.0), box, 9));
}

TEST_CASE("errors") {
  const auto m = make_linear_model(1, 1.0);
  CHECK(code_of([&] { check_hypotheses(*m, {.dim = 1, .T = 1, .half_width = 1, .r_min = 1, .r_max = 1}, 5); }) ==
        ErrorCode::DegenerateBox);
  CHECK(code_of([&] { check_hypotheses(*m, {.dim = 1, .T = 1, .half_width = 0, .r_min = 0, .r_max = 1}, 5); }) ==
        ErrorCode::DegenerateBox);
  CHECK(code_of([&] { check_hypotheses(*m, {}, 1); }) == ErrorCode::DegenerateBox);
  CHECK(code_of([&] { make_builtin_model("nope", {}, 1); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { make_builtin_model("linear", {{"gama", {1.0}}}, 1); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { make_builtin_model("linear", {{"drift", {1.0, 2.0, 3.0}}}, 2); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([&] { make_linear_model(3, 1.0); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { eval(*make_linear_model(1, -1.0), 0.0, {0.0}, 1.0); }) ==
        ErrorCode::NegativeDiffusion);
  CHECK(code_of([&] { eval(*m, 0.0, {0.0}, std::nan("")); }) == ErrorCode::NonFiniteCoefficient);
}

TEST_CASE("builtin factory round-trips parameters") {
  for (const auto& id : builtin_model_ids()) {
    const auto m = make_builtin_model(id, {}, 2);
    CHECK(m->id() == id);
    const auto again = make_builtin_model(id, m->params(), 2);
    CHECK(again->params() == m->params());
  }
  const auto m = make_builtin_model("bosonic", {{"gamma", {3.0}}, {"drift", {0.5}}}, 2);
  CHECK(m->drift(0, {}, 1)[1] == 0.5);
  CHECK(m->beta_r(0, {}, 0) == 3.0);
}
