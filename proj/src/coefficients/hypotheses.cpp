#include <algorithm>
#include <cmath>
#include <map>

#include "fpk/coefficients.hpp"
#include "fpk/error.hpp"

namespace fpk {

double lambda_zero_from(double nu, double sup_b_star_r) {
  if (nu <= 0.0) return 0.0;
  if (sup_b_star_r == 0.0) return kInf;
  return 2.0 * nu / (sup_b_star_r * sup_b_star_r);
}

namespace {

std::vector<double> linspace(double lo, double hi, int count) {
  if (hi == lo) return {lo};
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) v[i] = lo + (hi - lo) * i / (count - 1);
  return v;
}

void validate(const HypothesisBox& box, int samples) {
  if (samples < 2) throw Error(ErrorCode::DegenerateBox, "need at least 2 samples per axis");
  if (box.dim < 1 || box.dim > kMaxDim) throw Error(ErrorCode::DegenerateBox, "bad dimension");
  if (!(box.T >= 0.0)) throw Error(ErrorCode::DegenerateBox, "empty time range");
  if (!(box.half_width > 0.0)) throw Error(ErrorCode::DegenerateBox, "empty spatial box");
  if (!(box.r_max > box.r_min)) throw Error(ErrorCode::DegenerateBox, "empty r-range");
}

std::vector<Vec> spatial_points(const HypothesisBox& box, int samples) {
  const auto axis = linspace(-box.half_width, box.half_width, samples);
  std::vector<Vec> pts;
  if (box.dim == 1) {
    for (double x : axis) pts.push_back({x, 0.0});
  } else {
    for (double x1 : axis) {
      for (double x2 : axis) pts.push_back({x1, x2});
    }
  }
  return pts;
}

class ViolationLog {
 public:
  // Slack absorbs rounding and finite-difference noise in the closed forms.
  void test(const std::string& id, double lhs, double rhs, double t, const Vec& x, double r) {
    const double excess = lhs - rhs;
    const double slack = 1e-9 * (1.0 + std::fabs(lhs) + std::fabs(rhs));
    if (!(excess <= slack)) record(id, std::isnan(excess) ? kInf : excess, t, x, r);
  }

  void record(const std::string& id, double residual, double t, const Vec& x, double r) {
    auto it = worst_.find(id);
    if (it == worst_.end() || residual > it->second.residual) {
      worst_[id] = HypothesisViolation{id, t, x, r, residual};
    }
  }

  std::vector<HypothesisViolation> take() const {
    std::vector<HypothesisViolation> out;
    for (const auto& [_, v] : worst_) out.push_back(v);
    return out;
  }

 private:
  std::map<std::string, HypothesisViolation> worst_;
};

struct PointValues {
  double beta;
  double beta_r;
  Vec beta_x;
  Vec b_star;
};

}  // namespace

HypothesisReport check_hypotheses(const CoefficientModel& model, const HypothesisBox& box,
                                  int samples) {
  validate(box, samples);
  const int dim = box.dim;
  const auto times = linspace(0.0, box.T, samples);
  const auto points = spatial_points(box, samples);
  const auto rs = linspace(box.r_min, box.r_max, samples);
  const std::size_t nt = times.size(), nx = points.size(), nr = rs.size();

  HypothesisReport rep;
  rep.box = box;
  rep.samples = samples;
  rep.nu_hat = kInf;
  ViolationLog log;

  std::vector<PointValues> cache(nt * nx * nr);
  auto at = [&](std::size_t it, std::size_t ix, std::size_t ir) -> PointValues& {
    return cache[(it * nx + ix) * nr + ir];
  };

  Vec nu_point{};
  double nu_t = 0.0, nu_r = 0.0;
  for (std::size_t it = 0; it < nt; ++it) {
    const double t = times[it];
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Vec& x = points[ix];
      const double h = model.h_bound(x);
      for (std::size_t ir = 0; ir < nr; ++ir) {
        const double r = rs[ir];
        PointValues& pv = at(it, ix, ir);
        pv.beta = model.beta(t, x, r);
        pv.beta_r = model.beta_r(t, x, r);
        pv.beta_x = model.beta_x(t, x, r);
        pv.b_star = model.b_star(t, x, r);
        const Vec b = model.drift(t, x, r);
        const Vec br = model.drift_r(t, x, r);
        const Vec bsr = model.b_star_r(t, x, r);
        Vec rbr{};
        for (int k = 0; k < dim; ++k) rbr[k] = r * br[k];

        const double vals[] = {pv.beta, pv.beta_r, model.beta_t(t, x, r), norm2(b, dim),
                               norm2(bsr, dim), norm2(rbr, dim)};
        if (!std::all_of(std::begin(vals), std::end(vals),
                         [](double v) { return std::isfinite(v); })) {
          log.record("finite", kInf, t, x, r);
          continue;
        }
        rep.sup_beta = std::max(rep.sup_beta, std::fabs(pv.beta));
        rep.sup_beta_r = std::max(rep.sup_beta_r, std::fabs(pv.beta_r));
        rep.sup_b = std::max(rep.sup_b, norm2(b, dim));
        rep.sup_b_star_r = std::max(rep.sup_b_star_r, norm2(bsr, dim));
        rep.sup_rb_r = std::max(rep.sup_rb_r, norm2(rbr, dim));

        log.test("beta_growth", std::fabs(model.beta_t(t, x, r)) + norm2(pv.beta_x, dim),
                 h * std::fabs(r), t, x, r);
        log.test("b_star_growth", norm2(pv.b_star, dim), h * std::fabs(r), t, x, r);

        const double d = 1e-5 * (1.0 + std::fabs(r));
        const double fd = (model.beta(t, x, r + d) - model.beta(t, x, r - d)) / (2.0 * d);
        log.test("beta_c1", std::fabs(fd - pv.beta_r), 1e-5 * (1.0 + std::fabs(pv.beta_r)), t,
                 x, r);
      }
      for (std::size_t j = 0; j < nr; ++j) {
        for (std::size_t k = j + 1; k < nr; ++k) {
          const double q = (at(it, ix, k).beta - at(it, ix, j).beta) / (rs[k] - rs[j]);
          if (q < rep.nu_hat) {
            rep.nu_hat = q;
            nu_point = x;
            nu_t = t;
            nu_r = rs[j];
          }
        }
      }
    }
  }
  if (!(rep.nu_hat > 0.0)) log.record("beta_monotone", -rep.nu_hat, nu_t, nu_point, nu_r);

  // Time-regularity inequalities over ordered pairs (t, s).
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = 0; j < nt; ++j) {
      if (i == j) continue;
      const double t = times[i], s = times[j], dt = std::fabs(t - s);
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const Vec& x = points[ix];
        const double h = model.h_bound(x);
        for (std::size_t ir = 0; ir < nr; ++ir) {
          const double r = rs[ir];
          const PointValues& a = at(i, ix, ir);
          const PointValues& b = at(j, ix, ir);
          log.test("beta_r_time_lipschitz", std::fabs(a.beta_r - b.beta_r), h * dt * a.beta_r, t,
                   x, r);
          Vec dx{}, db{};
          for (int k = 0; k < dim; ++k) {
            dx[k] = a.beta_x[k] - b.beta_x[k];
            db[k] = a.b_star[k] - b.b_star[k];
          }
          log.test("beta_time_lipschitz", std::fabs(a.beta - b.beta) + norm2(dx, dim),
                   h * dt * (1.0 + std::fabs(r)), t, x, r);
          log.test("b_star_time_lipschitz", norm2(db, dim),
                   h * dt * (1.0 + norm2(a.b_star, dim)), t, x, r);
        }
      }
    }
  }

  rep.violations = log.take();
  rep.lambda_zero = lambda_zero_from(rep.nu_hat, rep.sup_b_star_r);
  rep.capital_lambda = capital_lambda(model, box, samples);
  return rep;
}

double capital_lambda(const CoefficientModel& model, const HypothesisBox& box, int samples) {
  validate(box, samples);
  const auto times = linspace(0.0, box.T, samples);
  const auto points = spatial_points(box, samples);
  const auto rs = linspace(box.r_min, box.r_max, samples);
  double sup = 0.0;
  for (double t : times) {
    for (const Vec& x : points) {
      for (double r : rs) {
        const double v =
            std::fabs(model.drift_div_x(t, x, r) * r) + std::fabs(model.beta_laplacian_x(t, x, r));
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::NonFiniteCoefficient, "spatial derivatives are not finite");
        }
        sup = std::max(sup, v);
      }
    }
  }
  return sup;
}

std::optional<HypothesisViolation> check_b_star_lipschitz(const CoefficientModel& model,
                                                          const HypothesisBox& box, int samples) {
  validate(box, samples);
  const int dim = box.dim;
  const auto times = linspace(0.0, box.T, samples);
  const auto points = spatial_points(box, samples);
  const auto rs = linspace(box.r_min, box.r_max, samples);
  ViolationLog log;
  for (double t : times) {
    for (const Vec& x : points) {
      const double h = model.h_bound(x);
      std::vector<Vec> bs;
      for (double r : rs) bs.push_back(model.b_star(t, x, r));
      for (std::size_t j = 0; j < rs.size(); ++j) {
        for (std::size_t k = j + 1; k < rs.size(); ++k) {
          Vec d{};
          for (int c = 0; c < dim; ++c) d[c] = bs[k][c] - bs[j][c];
          log.test("b_star_lipschitz", norm2(d, dim), h * std::fabs(rs[k] - rs[j]), t, x, rs[j]);
        }
      }
    }
  }
  auto v = log.take();
  if (v.empty()) return std::nullopt;
  return v.front();
}

}  // namespace fpk
