#pragma once

// Coefficient models for u_t - Δβ(t,x,u) + div b*(t,x,u) = 0 with
// β = a·r and b* = b·r, plus sampled verification of the structural
// hypotheses the solver relies on.

#include <array>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fpk {

inline constexpr int kMaxDim = 2;

/// Spatial point or spatial vector; components past the model dimension are zero.
using Vec = std::array<double, kMaxDim>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(const Vec& v, int dim);

/// Named model parameters; scalars are stored as one-element vectors.
using ModelParams = std::map<std::string, std::vector<double>>;

/// Immutable coefficient functions. Implementations override the closed
/// forms they know; the remaining derivatives fall back to centered
/// differences. All methods are pure and safe to call concurrently.
class CoefficientModel {
 public:
  explicit CoefficientModel(int dim);
  virtual ~CoefficientModel() = default;

  CoefficientModel(const CoefficientModel&) = delete;
  CoefficientModel& operator=(const CoefficientModel&) = delete;

  int dim() const { return dim_; }

  virtual std::string_view id() const = 0;
  virtual ModelParams params() const = 0;

  virtual double beta(double t, const Vec& x, double r) const = 0;
  virtual Vec drift(double t, const Vec& x, double r) const = 0;
  /// Majorant h(x) of the growth and time-regularity conditions.
  virtual double h_bound(const Vec& x) const = 0;

  virtual double beta_r(double t, const Vec& x, double r) const;
  virtual Vec beta_x(double t, const Vec& x, double r) const;
  virtual double beta_t(double t, const Vec& x, double r) const;
  virtual Vec drift_r(double t, const Vec& x, double r) const;
  /// Spatial divergence of the drift at fixed (t, r).
  virtual double drift_div_x(double t, const Vec& x, double r) const;
  /// Spatial Laplacian of β at fixed (t, r).
  virtual double beta_laplacian_x(double t, const Vec& x, double r) const;
  /// True when β and b do not depend on x (lets the solver skip work).
  virtual bool spatially_homogeneous() const { return false; }

  Vec b_star(double t, const Vec& x, double r) const;
  Vec b_star_r(double t, const Vec& x, double r) const;
  /// a = β/r, continuously extended by β_r at r = 0.
  double diffusion(double t, const Vec& x, double r) const;

 private:
  int dim_;
};

using ModelPtr = std::shared_ptr<const CoefficientModel>;

struct CoefficientSample {
  double beta = 0.0;
  double beta_r = 0.0;
  Vec beta_x{};
  double beta_t = 0.0;
  Vec b{};
  Vec b_star{};
  Vec b_star_r{};
  double a = 0.0;
  double sigma = 0.0;
};

/// Evaluates every coefficient at one point. Throws NonFiniteCoefficient or
/// NegativeDiffusion.
CoefficientSample eval(const CoefficientModel& model, double t, const Vec& x, double r);

// ---------------------------------------------------------------------------
// Builtin models

/// a ≡ a0, b ≡ drift.
ModelPtr make_linear_model(int dim, double a0, Vec drift = {});
/// β = γ·ln(1+|r|)·sign(r), b ≡ drift.
ModelPtr make_bosonic_model(int dim, double gamma, Vec drift = {});
/// a ≡ a0, b_k = c·tanh(x_k).
ModelPtr make_saturated_drift_model(int dim, double a0, double c);
/// β = γ0(1 + κ·t·exp(-|x|²))·ln(1+|r|)·sign(r), b ≡ drift. h(x) is valid
/// for t ≤ t_max.
ModelPtr make_time_varying_model(int dim, double gamma0, double kappa, Vec drift = {},
                                 double t_max = 1.0);
/// β piecewise linear in |r| with a kink; β_r jumps there. Used to exercise
/// hypothesis violations.
ModelPtr make_piecewise_model(int dim, double slope_low, double slope_high, double kink);

std::vector<std::string> builtin_model_ids();

/// Builds a builtin model by id; unknown ids or parameter names raise ConfigError.
ModelPtr make_builtin_model(std::string_view id, const ModelParams& params, int dim);

// ---------------------------------------------------------------------------
// Hypothesis verification on a compact box

struct HypothesisBox {
  int dim = 1;
  double T = 1.0;          // t ∈ [0, T]
  double half_width = 1.0; // x ∈ [-L, L]^d
  double r_min = 0.0;
  double r_max = 1.0;
};

struct HypothesisViolation {
  std::string hypothesis;
  double t = 0.0;
  Vec x{};
  double r = 0.0;
  double residual = 0.0;  // lhs - rhs of the violated inequality (> 0)
};

struct HypothesisReport {
  HypothesisBox box;
  int samples = 0;
  double nu_hat = 0.0;
  double sup_beta = 0.0;
  double sup_beta_r = 0.0;
  double sup_b = 0.0;
  double sup_rb_r = 0.0;
  double sup_b_star_r = 0.0;
  double lambda_zero = kInf;
  double capital_lambda = 0.0;
  std::vector<HypothesisViolation> violations;

  bool ok() const { return violations.empty() && nu_hat > 0.0; }
};

/// 2ν/|b*_r|²_∞, or +∞ when the drift derivative vanishes.
double lambda_zero_from(double nu, double sup_b_star_r);

/// Samples `samples` points per axis (t, each x_k, r) and records the worst
/// residual of every violated inequality. Throws DegenerateBox.
HypothesisReport check_hypotheses(const CoefficientModel& model, const HypothesisBox& box,
                                  int samples);

/// Empirical sup of |div_x b·r| + |Δ_x β| over the sample box.
double capital_lambda(const CoefficientModel& model, const HypothesisBox& box, int samples);

/// Worst violation of |b*(r) - b*(r̄)| ≤ h(x)|r - r̄| (the Lipschitz drift
/// condition needed for L¹ contraction); empty when it holds on all samples.
std::optional<HypothesisViolation> check_b_star_lipschitz(const CoefficientModel& model,
                                                          const HypothesisBox& box, int samples);

}  // namespace fpk
