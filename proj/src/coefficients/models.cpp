#include <algorithm>
#include <cmath>
#include <set>

#include "fpk/coefficients.hpp"
#include "fpk/error.hpp"

namespace fpk {

double norm2(const Vec& v, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += v[k] * v[k];
  return std::sqrt(s);
}

CoefficientModel::CoefficientModel(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw Error(ErrorCode::ConfigError, "model dimension must be 1 or 2");
  }
}

namespace {

double r_step(double r) { return 1e-5 * (1.0 + std::fabs(r)); }

Vec shifted(Vec x, int k, double delta) {
  x[k] += delta;
  return x;
}

double sign(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

}  // namespace

double CoefficientModel::beta_r(double t, const Vec& x, double r) const {
  const double d = r_step(r);
  return (beta(t, x, r + d) - beta(t, x, r - d)) / (2.0 * d);
}

Vec CoefficientModel::beta_x(double t, const Vec& x, double r) const {
  Vec g{};
  for (int k = 0; k < dim_; ++k) {
    const double d = 1e-5 * (1.0 + std::fabs(x[k]));
    g[k] = (beta(t, shifted(x, k, d), r) - beta(t, shifted(x, k, -d), r)) / (2.0 * d);
  }
  return g;
}

double CoefficientModel::beta_t(double t, const Vec& x, double r) const {
  const double d = 1e-5 * (1.0 + std::fabs(t));
  return (beta(t + d, x, r) - beta(t - d, x, r)) / (2.0 * d);
}

Vec CoefficientModel::drift_r(double t, const Vec& x, double r) const {
  const double d = r_step(r);
  const Vec hi = drift(t, x, r + d);
  const Vec lo = drift(t, x, r - d);
  Vec g{};
  for (int k = 0; k < dim_; ++k) g[k] = (hi[k] - lo[k]) / (2.0 * d);
  return g;
}

double CoefficientModel::drift_div_x(double t, const Vec& x, double r) const {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double d = 1e-5 * (1.0 + std::fabs(x[k]));
    s += (drift(t, shifted(x, k, d), r)[k] - drift(t, shifted(x, k, -d), r)[k]) / (2.0 * d);
  }
  return s;
}

double CoefficientModel::beta_laplacian_x(double t, const Vec& x, double r) const {
  double s = 0.0;
  const double center = beta(t, x, r);
  for (int k = 0; k < dim_; ++k) {
    const double d = 1e-4 * (1.0 + std::fabs(x[k]));
    s += (beta(t, shifted(x, k, d), r) - 2.0 * center + beta(t, shifted(x, k, -d), r)) / (d * d);
  }
  return s;
}

Vec CoefficientModel::b_star(double t, const Vec& x, double r) const {
  Vec b = drift(t, x, r);
  for (int k = 0; k < dim_; ++k) b[k] *= r;
  return b;
}

Vec CoefficientModel::b_star_r(double t, const Vec& x, double r) const {
  Vec b = drift(t, x, r);
  const Vec br = drift_r(t, x, r);
  for (int k = 0; k < dim_; ++k) b[k] += r * br[k];
  return b;
}

double CoefficientModel::diffusion(double t, const Vec& x, double r) const {
  if (r == 0.0) return beta_r(t, x, 0.0);
  return beta(t, x, r) / r;
}

CoefficientSample eval(const CoefficientModel& model, double t, const Vec& x, double r) {
  if (!std::isfinite(r)) throw Error(ErrorCode::NonFiniteCoefficient, "non-finite density value");
  CoefficientSample s;
  s.beta = model.beta(t, x, r);
  s.beta_r = model.beta_r(t, x, r);
  s.beta_x = model.beta_x(t, x, r);
  s.beta_t = model.beta_t(t, x, r);
  s.b = model.drift(t, x, r);
  s.b_star = model.b_star(t, x, r);
  s.b_star_r = model.b_star_r(t, x, r);
  s.a = model.diffusion(t, x, r);

  bool finite = std::isfinite(s.beta) && std::isfinite(s.beta_r) && std::isfinite(s.beta_t) &&
                std::isfinite(s.a);
  for (int k = 0; k < kMaxDim; ++k) {
    finite = finite && std::isfinite(s.beta_x[k]) && std::isfinite(s.b[k]) &&
             std::isfinite(s.b_star[k]) && std::isfinite(s.b_star_r[k]);
  }
  if (!finite) {
    throw Error(ErrorCode::NonFiniteCoefficient,
                "model '" + std::string(model.id()) + "' at r=" + std::to_string(r));
  }
  if (s.a < 0.0) {
    throw Error(ErrorCode::NegativeDiffusion,
                "a=" + std::to_string(s.a) + " at r=" + std::to_string(r));
  }
  s.sigma = std::sqrt(2.0 * s.a);
  return s;
}

// ---------------------------------------------------------------------------

namespace {

ModelParams vec_param(ModelParams p, const std::string& name, const Vec& v, int dim) {
  p[name] = std::vector<double>(v.begin(), v.begin() + dim);
  return p;
}

class LinearModel final : public CoefficientModel {
 public:
  LinearModel(int dim, double a0, Vec c) : CoefficientModel(dim), a0_(a0), c_(c) {}

  std::string_view id() const override { return "linear"; }
  ModelParams params() const override { return vec_param({{"a", {a0_}}}, "drift", c_, dim()); }

  double beta(double, const Vec&, double r) const override { return a0_ * r; }
  double beta_r(double, const Vec&, double) const override { return a0_; }
  Vec beta_x(double, const Vec&, double) const override { return {}; }
  double beta_t(double, const Vec&, double) const override { return 0.0; }
  Vec drift(double, const Vec&, double) const override { return c_; }
  Vec drift_r(double, const Vec&, double) const override { return {}; }
  double drift_div_x(double, const Vec&, double) const override { return 0.0; }
  double beta_laplacian_x(double, const Vec&, double) const override { return 0.0; }
  double h_bound(const Vec&) const override { return norm2(c_, dim()); }
  bool spatially_homogeneous() const override { return true; }

 private:
  double a0_;
  Vec c_;
};

class BosonicModel final : public CoefficientModel {
 public:
  BosonicModel(int dim, double gamma, Vec c) : CoefficientModel(dim), gamma_(gamma), c_(c) {}

  std::string_view id() const override { return "bosonic"; }
  ModelParams params() const override {
    return vec_param({{"gamma", {gamma_}}}, "drift", c_, dim());
  }

  double beta(double, const Vec&, double r) const override {
    return gamma_ * std::log1p(std::fabs(r)) * sign(r);
  }
  double beta_r(double, const Vec&, double r) const override {
    return gamma_ / (1.0 + std::fabs(r));
  }
  Vec beta_x(double, const Vec&, double) const override { return {}; }
  double beta_t(double, const Vec&, double) const override { return 0.0; }
  Vec drift(double, const Vec&, double) const override { return c_; }
  Vec drift_r(double, const Vec&, double) const override { return {}; }
  double drift_div_x(double, const Vec&, double) const override { return 0.0; }
  double beta_laplacian_x(double, const Vec&, double) const override { return 0.0; }
  double h_bound(const Vec&) const override { return norm2(c_, dim()); }
  bool spatially_homogeneous() const override { return true; }

 private:
  double gamma_;
  Vec c_;
};

class SaturatedDriftModel final : public CoefficientModel {
 public:
  SaturatedDriftModel(int dim, double a0, double c) : CoefficientModel(dim), a0_(a0), c_(c) {}

  std::string_view id() const override { return "saturated_drift"; }
  ModelParams params() const override { return {{"a", {a0_}}, {"c", {c_}}}; }

  double beta(double, const Vec&, double r) const override { return a0_ * r; }
  double beta_r(double, const Vec&, double) const override { return a0_; }
  Vec beta_x(double, const Vec&, double) const override { return {}; }
  double beta_t(double, const Vec&, double) const override { return 0.0; }
  Vec drift(double, const Vec& x, double) const override {
    Vec b{};
    for (int k = 0; k < dim(); ++k) b[k] = c_ * std::tanh(x[k]);
    return b;
  }
  Vec drift_r(double, const Vec&, double) const override { return {}; }
  double drift_div_x(double, const Vec& x, double) const override {
    double s = 0.0;
    for (int k = 0; k < dim(); ++k) {
      const double ch = std::cosh(x[k]);
      s += c_ / (ch * ch);
    }
    return s;
  }
  double beta_laplacian_x(double, const Vec&, double) const override { return 0.0; }
  double h_bound(const Vec& x) const override { return norm2(drift(0.0, x, 0.0), dim()); }

 private:
  double a0_;
  double c_;
};

class TimeVaryingModel final : public CoefficientModel {
 public:
  TimeVaryingModel(int dim, double gamma0, double kappa, Vec c, double t_max)
      : CoefficientModel(dim), gamma0_(gamma0), kappa_(kappa), c_(c), t_max_(t_max) {}

  std::string_view id() const override { return "time_varying"; }
  ModelParams params() const override {
    return vec_param({{"gamma", {gamma0_}}, {"kappa", {kappa_}}, {"t_max", {t_max_}}}, "drift",
                     c_, dim());
  }

  double beta(double t, const Vec& x, double r) const override {
    return gamma(t, x) * profile(r);
  }
  double beta_r(double t, const Vec& x, double r) const override {
    return gamma(t, x) / (1.0 + std::fabs(r));
  }
  Vec beta_x(double t, const Vec& x, double r) const override {
    Vec g{};
    const double s = gamma0_ * kappa_ * t * bump(x) * profile(r);
    for (int k = 0; k < dim(); ++k) g[k] = -2.0 * x[k] * s;
    return g;
  }
  double beta_t(double, const Vec& x, double r) const override {
    return gamma0_ * kappa_ * bump(x) * profile(r);
  }
  Vec drift(double, const Vec&, double) const override { return c_; }
  Vec drift_r(double, const Vec&, double) const override { return {}; }
  double drift_div_x(double, const Vec&, double) const override { return 0.0; }
  double beta_laplacian_x(double t, const Vec& x, double r) const override {
    const double x2 = sq(x);
    return gamma0_ * kappa_ * t * profile(r) * (4.0 * x2 - 2.0 * dim()) * std::exp(-x2);
  }
  double h_bound(const Vec& x) const override {
    const double rad = std::sqrt(sq(x));
    return norm2(c_, dim()) + std::max(1.0, gamma0_) * std::fabs(kappa_) *
                                  (1.0 + 2.0 * std::max(1.0, t_max_) * rad) * bump(x);
  }

 private:
  double sq(const Vec& x) const {
    double s = 0.0;
    for (int k = 0; k < dim(); ++k) s += x[k] * x[k];
    return s;
  }
  double bump(const Vec& x) const { return std::exp(-sq(x)); }
  double gamma(double t, const Vec& x) const { return gamma0_ * (1.0 + kappa_ * t * bump(x)); }
  static double profile(double r) { return std::log1p(std::fabs(r)) * sign(r); }

  double gamma0_;
  double kappa_;
  Vec c_;
  double t_max_;
};

class PiecewiseModel final : public CoefficientModel {
 public:
  PiecewiseModel(int dim, double s1, double s2, double kink)
      : CoefficientModel(dim), s1_(s1), s2_(s2), kink_(kink) {}

  std::string_view id() const override { return "piecewise"; }
  ModelParams params() const override {
    return {{"slope_low", {s1_}}, {"slope_high", {s2_}}, {"kink", {kink_}}};
  }

  double beta(double, const Vec&, double r) const override {
    const double m = std::fabs(r);
    const double v = m <= kink_ ? s1_ * m : s1_ * kink_ + s2_ * (m - kink_);
    return sign(r) * v;
  }
  double beta_r(double, const Vec&, double r) const override {
    return std::fabs(r) <= kink_ ? s1_ : s2_;
  }
  Vec beta_x(double, const Vec&, double) const override { return {}; }
  double beta_t(double, const Vec&, double) const override { return 0.0; }
  Vec drift(double, const Vec&, double) const override { return {}; }
  Vec drift_r(double, const Vec&, double) const override { return {}; }
  double drift_div_x(double, const Vec&, double) const override { return 0.0; }
  double beta_laplacian_x(double, const Vec&, double) const override { return 0.0; }
  double h_bound(const Vec&) const override { return 0.0; }
  bool spatially_homogeneous() const override { return true; }

 private:
  double s1_;
  double s2_;
  double kink_;
};

}  // namespace

ModelPtr make_linear_model(int dim, double a0, Vec drift) {
  return std::make_shared<LinearModel>(dim, a0, drift);
}

ModelPtr make_bosonic_model(int dim, double gamma, Vec drift) {
  return std::make_shared<BosonicModel>(dim, gamma, drift);
}

ModelPtr make_saturated_drift_model(int dim, double a0, double c) {
  return std::make_shared<SaturatedDriftModel>(dim, a0, c);
}

ModelPtr make_time_varying_model(int dim, double gamma0, double kappa, Vec drift,
                                 double t_max) {
  return std::make_shared<TimeVaryingModel>(dim, gamma0, kappa, drift, t_max);
}

ModelPtr make_piecewise_model(int dim, double slope_low, double slope_high, double kink) {
  return std::make_shared<PiecewiseModel>(dim, slope_low, slope_high, kink);
}

std::vector<std::string> builtin_model_ids() {
  return {"linear", "bosonic", "saturated_drift", "time_varying", "piecewise"};
}

namespace {

class ParamReader {
 public:
  ParamReader(std::string_view model, const ModelParams& params, int dim)
      : model_(model), params_(params), dim_(dim) {}

  double scalar(const std::string& name, double fallback) {
    used_.insert(name);
    auto it = params_.find(name);
    if (it == params_.end()) return fallback;
    if (it->second.size() != 1) fail("parameter '" + name + "' must be a scalar");
    return it->second.front();
  }

  Vec vector(const std::string& name) {
    used_.insert(name);
    Vec v{};
    auto it = params_.find(name);
    if (it == params_.end()) return v;
    const auto& vals = it->second;
    if (vals.size() == 1) {
      for (int k = 0; k < dim_; ++k) v[k] = vals[0];
    } else if (static_cast<int>(vals.size()) == dim_) {
      for (int k = 0; k < dim_; ++k) v[k] = vals[k];
    } else {
      fail("parameter '" + name + "' must have 1 or d entries");
    }
    return v;
  }

  void reject_unknown() const {
    for (const auto& [name, _] : params_) {
      if (!used_.contains(name)) fail("unknown parameter '" + name + "'");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ConfigError, "model '" + std::string(model_) + "': " + msg);
  }

  std::string_view model_;
  const ModelParams& params_;
  int dim_;
  std::set<std::string> used_;
};

}  // namespace

ModelPtr make_builtin_model(std::string_view id, const ModelParams& params, int dim) {
  ParamReader p(id, params, dim);
  ModelPtr model;
  if (id == "linear") {
    const double a = p.scalar("a", 1.0);
    model = make_linear_model(dim, a, p.vector("drift"));
  } else if (id == "bosonic") {
    const double gamma = p.scalar("gamma", 1.0);
    model = make_bosonic_model(dim, gamma, p.vector("drift"));
  } else if (id == "saturated_drift") {
    const double a = p.scalar("a", 1.0);
    model = make_saturated_drift_model(dim, a, p.scalar("c", -1.0));
  } else if (id == "time_varying") {
    const double gamma = p.scalar("gamma", 1.0);
    const double kappa = p.scalar("kappa", 1.0);
    const double t_max = p.scalar("t_max", 1.0);
    model = make_time_varying_model(dim, gamma, kappa, p.vector("drift"), t_max);
  } else if (id == "piecewise") {
    const double s1 = p.scalar("slope_low", 1.0);
    const double s2 = p.scalar("slope_high", -0.5);
    model = make_piecewise_model(dim, s1, s2, p.scalar("kink", 1.0));
  } else {
    throw Error(ErrorCode::ConfigError, "unknown model id '" + std::string(id) + "'");
  }
  p.reject_unknown();
  return model;
}

}  // namespace fpk
