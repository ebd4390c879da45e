#include "fpk/krylov.hpp"

#include <cmath>
#include <vector>

#include "fpk/kernels.hpp"

namespace fpk {
namespace {

double norm(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

void precondition(std::span<const double> diag, std::span<const double> in,
                  std::span<double> out) {
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] / diag[i];
}

}  // namespace

KrylovResult pcg(const LinearOperator& op, std::span<const double> diagonal,
                 std::span<const double> rhs, std::span<double> x, double rtol, int max_iter) {
  const std::size_t n = rhs.size();
  std::vector<double> r(n), z(n), p(n), q(n);
  KrylovResult res;

  const double bnorm = norm(rhs);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }

  op(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
  precondition(diagonal, r, z);
  p = z;
  double rz = kernels::dot(r, z);

  for (int it = 0; it <= max_iter; ++it) {
    res.iterations = it;
    res.relative_residual = norm(r) / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    if (it == max_iter) break;
    op(p, q);
    const double pq = kernels::dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, q, r);
    precondition(diagonal, r, z);
    const double rz_next = kernels::dot(r, z);
    kernels::xpay(z, rz_next / rz, p);
    rz = rz_next;
  }
  return res;
}

KrylovResult bicgstab(const LinearOperator& op, std::span<const double> diagonal,
                      std::span<const double> rhs, std::span<double> x, double rtol,
                      int max_iter) {
  const std::size_t n = rhs.size();
  std::vector<double> r(n), r_hat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), y(n), z(n);
  KrylovResult res;

  const double bnorm = norm(rhs);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    res.converged = true;
    return res;
  }

  op(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - r[i];
  r_hat = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;

  for (int it = 0; it <= max_iter; ++it) {
    res.iterations = it;
    res.relative_residual = norm(r) / bnorm;
    if (res.relative_residual <= rtol) {
      res.converged = true;
      return res;
    }
    if (it == max_iter) break;

    const double rho_next = kernels::dot(r_hat, r);
    if (rho_next == 0.0 || omega == 0.0) break;
    const double beta = (rho_next / rho) * (alpha / omega);
    rho = rho_next;
    // p = r + beta (p - omega v)
    kernels::axpy(-omega, v, p);
    kernels::xpay(r, beta, p);

    precondition(diagonal, p, y);
    op(y, v);
    const double rv = kernels::dot(r_hat, v);
    if (rv == 0.0) break;
    alpha = rho / rv;
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];

    if (norm(s) / bnorm <= rtol) {
      kernels::axpy(alpha, y, x);
      r = s;
      continue;
    }

    precondition(diagonal, s, z);
    op(z, t);
    const double tt = kernels::dot(t, t);
    if (tt == 0.0) break;
    omega = kernels::dot(t, s) / tt;
    kernels::axpy(alpha, y, x);
    kernels::axpy(omega, z, x);
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
  }
  return res;
}

}  // namespace fpk
