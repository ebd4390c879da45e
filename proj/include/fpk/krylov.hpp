#pragma once

// Matrix-free Krylov solvers with diagonal (Jacobi) preconditioning.

#include <functional>
#include <span>

namespace fpk {

using LinearOperator = std::function<void(std::span<const double> in, std::span<double> out)>;

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Conjugate gradients for symmetric positive definite operators. `x` holds
/// the initial guess on entry.
KrylovResult pcg(const LinearOperator& op, std::span<const double> diagonal,
                 std::span<const double> rhs, std::span<double> x, double rtol, int max_iter);

/// BiCGStab for general nonsingular operators.
KrylovResult bicgstab(const LinearOperator& op, std::span<const double> diagonal,
                      std::span<const double> rhs, std::span<double> x, double rtol,
                      int max_iter);

}  // namespace fpk
