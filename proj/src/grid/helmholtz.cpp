#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include "fpk/error.hpp"
#include "fpk/grid.hpp"
#include "fpk/kernels.hpp"
#include "fpk/krylov.hpp"

namespace fpk {
namespace {

// Spectral Helmholtz solver for one grid shape. Periodic grids use the real
// DFT; zero-flux grids use DCT-II/DCT-III, whose cosine modes are exact
// eigenvectors of the cell-centered Neumann Laplacian.
class SpectralPlan {
 public:
  SpectralPlan(int dim, int n, bool periodic) : dim_(dim), n_(n), periodic_(periodic) {
    const std::size_t cells = dim == 1 ? n : std::size_t(n) * n;
    real_ = fftw_alloc_real(cells);
    if (periodic) {
      spec_count_ = dim == 1 ? std::size_t(n / 2 + 1) : std::size_t(n) * (n / 2 + 1);
      spec_ = fftw_alloc_complex(spec_count_);
      if (dim == 1) {
        fwd_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
      } else {
        fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_2d(n, n, spec_, real_, FFTW_ESTIMATE);
      }
    } else {
      coef_ = fftw_alloc_real(cells);
      if (dim == 1) {
        fwd_ = fftw_plan_r2r_1d(n, real_, coef_, FFTW_REDFT10, FFTW_ESTIMATE);
        bwd_ = fftw_plan_r2r_1d(n, coef_, real_, FFTW_REDFT01, FFTW_ESTIMATE);
      } else {
        fwd_ = fftw_plan_r2r_2d(n, n, real_, coef_, FFTW_REDFT10, FFTW_REDFT10, FFTW_ESTIMATE);
        bwd_ = fftw_plan_r2r_2d(n, n, coef_, real_, FFTW_REDFT01, FFTW_REDFT01, FFTW_ESTIMATE);
      }
    }
  }

  ~SpectralPlan() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    if (spec_) fftw_free(spec_);
    if (coef_) fftw_free(coef_);
  }

  SpectralPlan(const SpectralPlan&) = delete;
  SpectralPlan& operator=(const SpectralPlan&) = delete;

  void solve(double eps, double h, std::span<const double> f, std::span<double> y) {
    std::lock_guard lock(mutex_);
    std::copy(f.begin(), f.end(), real_);
    fftw_execute(fwd_);
    const double inv_h2 = 1.0 / (h * h);
    const int n = n_;
    const double pi = std::numbers::pi;
    if (periodic_) {
      auto symbol = [&](int k) { return 2.0 * inv_h2 * (1.0 - std::cos(2.0 * pi * k / n)); };
      const int half = n / 2 + 1;
      const double norm = dim_ == 1 ? 1.0 / n : 1.0 / (double(n) * n);
      for (std::size_t m = 0; m < spec_count_; ++m) {
        const int k1 = dim_ == 1 ? int(m) : int(m / half);
        const double s = dim_ == 1 ? symbol(k1) : symbol(k1) + symbol(int(m % half));
        const double w = norm / (eps + s);
        spec_[m][0] *= w;
        spec_[m][1] *= w;
      }
    } else {
      auto symbol = [&](int k) { return 2.0 * inv_h2 * (1.0 - std::cos(pi * k / n)); };
      const double norm = dim_ == 1 ? 1.0 / (2.0 * n) : 1.0 / (4.0 * n * n);
      const std::size_t cells = f.size();
      for (std::size_t m = 0; m < cells; ++m) {
        const int k1 = dim_ == 1 ? int(m) : int(m / n);
        const double s = dim_ == 1 ? symbol(k1) : symbol(k1) + symbol(int(m % n));
        coef_[m] *= norm / (eps + s);
      }
    }
    fftw_execute(bwd_);
    std::copy(real_, real_ + f.size(), y.begin());
  }

 private:
  int dim_;
  int n_;
  bool periodic_;
  double* real_ = nullptr;
  double* coef_ = nullptr;
  fftw_complex* spec_ = nullptr;
  std::size_t spec_count_ = 0;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
  std::mutex mutex_;
};

SpectralPlan& plan_for(const Grid& g) {
  // FFTW planning is not thread-safe; plans are created under this lock and
  // kept for the lifetime of the process.
  static std::mutex mutex;
  static std::map<std::tuple<int, int, bool>, std::unique_ptr<SpectralPlan>> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_tuple(g.dim(), g.n(), g.periodic());
  auto& slot = cache[key];
  if (!slot) slot = std::make_unique<SpectralPlan>(g.dim(), g.n(), g.periodic());
  return *slot;
}

std::vector<double> helmholtz_diagonal(double eps, const Grid& g) {
  // Number of active faces per cell times 1/h².
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> diag(g.size(), eps);
  for (int k = 0; k < g.dim(); ++k) {
    for (const FaceLink& l : face_links(g, k)) {
      diag[l.left] += inv_h2;
      diag[l.right] += inv_h2;
    }
  }
  return diag;
}

}  // namespace

ScalarField helmholtz_apply(double eps, const ScalarField& y) {
  ScalarField out = laplacian(y);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = eps * y[i] - out[i];
  return out;
}

ScalarField helmholtz_solve(double eps, const ScalarField& f, HelmholtzMethod method) {
  if (!(eps > 0.0)) throw Error(ErrorCode::ConfigError, "Helmholtz shift must be positive");
  const Grid& g = f.grid();
  ScalarField y(g);
  if (method == HelmholtzMethod::spectral) {
    plan_for(g).solve(eps, g.spacing(), f.values(), y.values());
    return y;
  }
  const auto diag = helmholtz_diagonal(eps, g);
  LinearOperator op = [&](std::span<const double> in, std::span<double> out) {
    ScalarField tmp(g, std::vector<double>(in.begin(), in.end()));
    const ScalarField r = helmholtz_apply(eps, tmp);
    std::copy(r.values().begin(), r.values().end(), out.begin());
  };
  const KrylovResult res = pcg(op, diag, f.values(), y.values(), 1e-10, 10 * g.n());
  if (!res.converged) {
    throw Error(ErrorCode::SolverDiverged,
                "Helmholtz CG stalled at relative residual " + std::to_string(res.relative_residual));
  }
  return y;
}

double h_neg1_inner(double eps, const ScalarField& u, const ScalarField& v) {
  return inner_l2(helmholtz_solve(eps, u), v);
}

double h_neg1_norm(double eps, const ScalarField& u) {
  return std::sqrt(std::max(0.0, h_neg1_inner(eps, u, u)));
}

}  // namespace fpk
