#pragma once

// Data-parallel inner loops used by the grid operators and the Krylov
// solvers. Every kernel has a scalar reference implementation and an AVX2
// implementation; the active table is chosen once at startup from CPUID and
// can be pinned with FPK_ISA=scalar|avx2.
//
// The two implementations are bit-identical: elementwise kernels perform the
// same IEEE operations in the same order, and reductions use a fixed
// pairwise tree whose leaves accumulate in four interleaved lanes in both
// variants. Results therefore do not depend on the host CPU.

#include <cstddef>
#include <span>
#include <string_view>

namespace fpk::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
  Isa isa;

  // out[k] += ((prev[k] - cur[k]) + (next[k] - cur[k])) * scale
  void (*second_diff_accumulate)(const double* prev, const double* cur, const double* next,
                                 double* out, std::size_t count, double scale);
  // out[k] += (hi[k] - lo[k]) * scale
  void (*diff_accumulate)(const double* hi, const double* lo, double* out, std::size_t count,
                          double scale);
  // Second difference along one contiguous line of n cells (n >= 2); the
  // boundary cells either wrap (periodic) or drop the outside face.
  void (*second_diff_line)(const double* u, double* out, std::size_t n, double scale,
                           bool periodic);
  // y[k] += a * x[k]
  void (*axpy)(double a, const double* x, double* y, std::size_t count);
  // y[k] = x[k] + a * y[k]
  void (*xpay)(const double* x, double a, double* y, std::size_t count);
  // out[k] = x[k] * y[k]
  void (*multiply)(const double* x, const double* y, double* out, std::size_t count);

  double (*sum)(const double* x, std::size_t count);
  double (*abs_sum)(const double* x, std::size_t count);
  double (*dot)(const double* x, const double* y, std::size_t count);
  double (*max_abs)(const double* x, std::size_t count);
};

const KernelTable& scalar_table();
/// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);

/// The table every library routine dispatches through.
const KernelTable& active();

/// Pins the active table; throws std::invalid_argument if unsupported.
void set_active(Isa isa);

// Convenience wrappers over the active table.
inline double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }
inline double abs_sum(std::span<const double> x) { return active().abs_sum(x.data(), x.size()); }
inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}
inline double max_abs(std::span<const double> x) { return active().max_abs(x.data(), x.size()); }
inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}
inline void xpay(std::span<const double> x, double a, std::span<double> y) {
  active().xpay(x.data(), a, y.data(), x.size());
}

}  // namespace fpk::kernels
