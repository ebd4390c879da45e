// Compiled with -mavx2 (no FMA, so products and sums round exactly like the
// scalar reference).

#include <immintrin.h>

#include <cmath>

#include "fpk/kernels.hpp"
#include "leaf_sum.hpp"

namespace fpk::kernels {
namespace {

void second_diff_accumulate(const double* prev, const double* cur, const double* next,
                            double* out, std::size_t count, double scale) {
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d c = _mm256_loadu_pd(cur + k);
    const __m256d lo = _mm256_sub_pd(_mm256_loadu_pd(prev + k), c);
    const __m256d hi = _mm256_sub_pd(_mm256_loadu_pd(next + k), c);
    const __m256d t = _mm256_mul_pd(_mm256_add_pd(lo, hi), s);
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(out + k), t));
  }
  for (; k < count; ++k) out[k] += ((prev[k] - cur[k]) + (next[k] - cur[k])) * scale;
}

void diff_accumulate(const double* hi, const double* lo, double* out, std::size_t count,
                     double scale) {
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(hi + k), _mm256_loadu_pd(lo + k));
    _mm256_storeu_pd(out + k, _mm256_add_pd(_mm256_loadu_pd(out + k), _mm256_mul_pd(d, s)));
  }
  for (; k < count; ++k) out[k] += (hi[k] - lo[k]) * scale;
}

void second_diff_line(const double* u, double* out, std::size_t n, double scale, bool periodic) {
  if (periodic) {
    out[0] += ((u[n - 1] - u[0]) + (u[1] - u[0])) * scale;
    out[n - 1] += ((u[n - 2] - u[n - 1]) + (u[0] - u[n - 1])) * scale;
  } else {
    out[0] += (u[1] - u[0]) * scale;
    out[n - 1] += (u[n - 2] - u[n - 1]) * scale;
  }
  if (n > 2) second_diff_accumulate(u, u + 1, u + 2, out + 1, n - 2, scale);
}

void axpy(double a, const double* x, double* y, std::size_t count) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(x + k));
    _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(y + k), t));
  }
  for (; k < count; ++k) y[k] += a * x[k];
}

void xpay(const double* x, double a, double* y, std::size_t count) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    const __m256d t = _mm256_mul_pd(va, _mm256_loadu_pd(y + k));
    _mm256_storeu_pd(y + k, _mm256_add_pd(_mm256_loadu_pd(x + k), t));
  }
  for (; k < count; ++k) y[k] = x[k] + a * y[k];
}

void multiply(const double* x, const double* y, double* out, std::size_t count) {
  std::size_t k = 0;
  for (; k + 4 <= count; k += 4) {
    _mm256_storeu_pd(out + k, _mm256_mul_pd(_mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < count; ++k) out[k] = x[k] * y[k];
}

inline __m256d abs_pd(__m256d v) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), v);
}

// VecTerm loads four consecutive terms; ScalarTerm handles the tail.
template <class VecTerm, class ScalarTerm>
double lane_leaf(const VecTerm& vterm, const ScalarTerm& sterm, std::size_t begin,
                 std::size_t count) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) acc = _mm256_add_pd(acc, vterm(begin + i));
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  double s = detail::combine_lanes(lane);
  for (; i < count; ++i) s += sterm(begin + i);
  return s;
}

double sum(const double* x, std::size_t count) {
  auto v = [x](std::size_t i) { return _mm256_loadu_pd(x + i); };
  auto s = [x](std::size_t i) { return x[i]; };
  return detail::pairwise([&](std::size_t b, std::size_t c) { return lane_leaf(v, s, b, c); }, 0,
                          count);
}

double abs_sum(const double* x, std::size_t count) {
  auto v = [x](std::size_t i) { return abs_pd(_mm256_loadu_pd(x + i)); };
  auto s = [x](std::size_t i) { return std::fabs(x[i]); };
  return detail::pairwise([&](std::size_t b, std::size_t c) { return lane_leaf(v, s, b, c); }, 0,
                          count);
}

double dot(const double* x, const double* y, std::size_t count) {
  auto v = [x, y](std::size_t i) {
    return _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
  };
  auto s = [x, y](std::size_t i) { return x[i] * y[i]; };
  return detail::pairwise([&](std::size_t b, std::size_t c) { return lane_leaf(v, s, b, c); }, 0,
                          count);
}

double max_abs(const double* x, std::size_t count) {
  __m256d m = _mm256_setzero_pd();
  std::size_t k = 0;
  // max_pd(a, b) returns b when a is NaN, matching fmax(m, NaN) == m.
  for (; k + 4 <= count; k += 4) m = _mm256_max_pd(abs_pd(_mm256_loadu_pd(x + k)), m);
  alignas(32) double lane[4];
  _mm256_store_pd(lane, m);
  double r = std::fmax(std::fmax(lane[0], lane[1]), std::fmax(lane[2], lane[3]));
  for (; k < count; ++k) r = std::fmax(r, std::fabs(x[k]));
  return r;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{
      Isa::avx2, second_diff_accumulate, diff_accumulate, second_diff_line, axpy, xpay,
      multiply,  sum,                    abs_sum,         dot,              max_abs,
  };
  return &table;
}

}  // namespace fpk::kernels
