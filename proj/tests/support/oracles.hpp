#pragma once

// Test-only reference implementations. Everything here is assembled from
// the stencil formulas directly, without going through the library's
// operators, and solved densely with Eigen.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>

#include "fpk/grid.hpp"

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Vector to_vector(const fpk::ScalarField& u) {
  Vector v(static_cast<Eigen::Index>(u.size()));
  for (std::size_t i = 0; i < u.size(); ++i) v[static_cast<Eigen::Index>(i)] = u[i];
  return v;
}

inline fpk::ScalarField to_field(const fpk::Grid& g, const Vector& v) {
  fpk::ScalarField u(g);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = v[static_cast<Eigen::Index>(i)];
  return u;
}

// Visits every interior face (and the wrap faces on periodic grids) as
// (left cell, right cell, axis).
inline void for_each_face(const fpk::Grid& g, const std::function<void(int, int, int)>& f) {
  const int n = g.n();
  auto flat = [&](int i, int j) { return g.dim() == 1 ? i : i * n + j; };
  const int rows = g.dim() == 1 ? 1 : n;
  for (int axis = 0; axis < g.dim(); ++axis) {
    for (int line = 0; line < rows; ++line) {
      for (int p = 0; p < n; ++p) {
        const int q = p + 1;
        if (q == n && !g.periodic()) continue;
        const int qq = q % n;
        int left, right;
        if (g.dim() == 1) {
          left = p;
          right = qq;
        } else if (axis == 0) {
          left = flat(p, line);
          right = flat(qq, line);
        } else {
          left = flat(line, p);
          right = flat(line, qq);
        }
        f(left, right, axis);
      }
    }
  }
}

/// Dense five-point (three-point in 1D) Laplacian.
inline Matrix laplacian(const fpk::Grid& g) {
  const auto N = static_cast<Eigen::Index>(g.size());
  const double s = 1.0 / (g.spacing() * g.spacing());
  Matrix L = Matrix::Zero(N, N);
  for_each_face(g, [&](int a, int b, int) {
    L(a, b) += s;
    L(b, a) += s;
    L(a, a) -= s;
    L(b, b) -= s;
  });
  return L;
}

/// Dense divergence of the flux of b*(r) = c·r with constant c.
inline Matrix drift(const fpk::Grid& g, const fpk::Vec& c, bool upwind) {
  const auto N = static_cast<Eigen::Index>(g.size());
  const double ih = 1.0 / g.spacing();
  Matrix D = Matrix::Zero(N, N);
  for_each_face(g, [&](int a, int b, int axis) {
    // Face flux F = wa·u_a + wb·u_b leaves a and enters b.
    double wa, wb;
    if (upwind) {
      wa = std::max(c[axis], 0.0);
      wb = std::min(c[axis], 0.0);
    } else {
      wa = wb = 0.5 * c[axis];
    }
    D(a, a) += wa * ih;
    D(a, b) += wb * ih;
    D(b, a) -= wa * ih;
    D(b, b) -= wb * ih;
  });
  return D;
}

/// u + λ(-aΔu + εa·u + div(c·u)) = v for the linear model a ≡ const, b ≡ c.
inline fpk::ScalarField linear_resolvent(const fpk::ScalarField& v, double lambda, double eps, double a,
                                         const fpk::Vec& c, bool upwind) {
  const fpk::Grid& g = v.grid();
  const auto N = static_cast<Eigen::Index>(g.size());
  Matrix M = Matrix::Identity(N, N) * (1.0 + lambda * eps * a) - lambda * a * laplacian(g) +
             lambda * drift(g, c, upwind);
  return to_field(g, M.partialPivLu().solve(to_vector(v)));
}

/// (εI - Δ)⁻¹f by dense LU.
inline fpk::ScalarField helmholtz(double eps, const fpk::ScalarField& f) {
  const fpk::Grid& g = f.grid();
  const auto N = static_cast<Eigen::Index>(g.size());
  Matrix M = Matrix::Identity(N, N) * eps - laplacian(g);
  return to_field(g, M.partialPivLu().solve(to_vector(f)));
}

/// Eigenvalue of the discrete -Δ on the mode exp(i·k·x) with k = 2πm/(2L).
inline double laplacian_symbol(int m, const fpk::Grid& g) {
  const double theta = 2.0 * std::numbers::pi * m / g.n();
  return 2.0 / (g.spacing() * g.spacing()) * (1.0 - std::cos(theta));
}

/// |1/(1 + λa(ε + s_m) + iλc·sin(θ_m)/h)|: the centered-flux resolvent of
/// the linear model on one Fourier mode, measured in any norm diagonal in
/// Fourier space.
inline double linear_mode_gain(int m, const fpk::Grid& g, double lambda, double eps, double a, double c) {
  const double theta = 2.0 * std::numbers::pi * m / g.n();
  const std::complex<double> symbol(1.0 + lambda * a * (eps + laplacian_symbol(m, g)),
                                    lambda * c * std::sin(theta) / g.spacing());
  return 1.0 / std::abs(symbol);
}

/// Root of f on [lo, hi] by bisection (f(lo) and f(hi) of opposite sign).
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Heat kernel solution of u_t = aΔu - c·∇u in 1D from a centered Gaussian.
inline double gaussian(double x, double center, double variance) {
  return std::exp(-(x - center) * (x - center) / (2.0 * variance)) / std::sqrt(2.0 * std::numbers::pi * variance);
}

}  // namespace oracle
