#include <cmath>

#include "fpk/kernels.hpp"
#include "leaf_sum.hpp"

namespace fpk::kernels {
namespace {

void second_diff_accumulate(const double* prev, const double* cur, const double* next,
                            double* out, std::size_t count, double scale) {
  for (std::size_t k = 0; k < count; ++k) {
    out[k] += ((prev[k] - cur[k]) + (next[k] - cur[k])) * scale;
  }
}

void diff_accumulate(const double* hi, const double* lo, double* out, std::size_t count,
                     double scale) {
  for (std::size_t k = 0; k < count; ++k) out[k] += (hi[k] - lo[k]) * scale;
}

void second_diff_line(const double* u, double* out, std::size_t n, double scale, bool periodic) {
  if (periodic) {
    out[0] += ((u[n - 1] - u[0]) + (u[1] - u[0])) * scale;
    out[n - 1] += ((u[n - 2] - u[n - 1]) + (u[0] - u[n - 1])) * scale;
  } else {
    out[0] += (u[1] - u[0]) * scale;
    out[n - 1] += (u[n - 2] - u[n - 1]) * scale;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    out[i] += ((u[i - 1] - u[i]) + (u[i + 1] - u[i])) * scale;
  }
}

void axpy(double a, const double* x, double* y, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) y[k] += a * x[k];
}

void xpay(const double* x, double a, double* y, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) y[k] = x[k] + a * y[k];
}

void multiply(const double* x, const double* y, double* out, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) out[k] = x[k] * y[k];
}

template <class Term>
double lane_leaf(const Term& term, std::size_t begin, std::size_t count) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    for (std::size_t l = 0; l < 4; ++l) lane[l] += term(begin + i + l);
  }
  double s = detail::combine_lanes(lane);
  for (; i < count; ++i) s += term(begin + i);
  return s;
}

double sum(const double* x, std::size_t count) {
  auto term = [x](std::size_t i) { return x[i]; };
  return detail::pairwise([&](std::size_t b, std::size_t c) { return lane_leaf(term, b, c); }, 0,
                          count);
}

double abs_sum(const double* x, std::size_t count) {
  auto term = [x](std::size_t i) { return std::fabs(x[i]); };
  return detail::pairwise([&](std::size_t b, std::size_t c) { return lane_leaf(term, b, c); }, 0,
                          count);
}

double dot(const double* x, const double* y, std::size_t count) {
  auto term = [x, y](std::size_t i) { return x[i] * y[i]; };
  return detail::pairwise([&](std::size_t b, std::size_t c) { return lane_leaf(term, b, c); }, 0,
                          count);
}

double max_abs(const double* x, std::size_t count) {
  double m = 0.0;
  for (std::size_t k = 0; k < count; ++k) m = std::fmax(m, std::fabs(x[k]));
  return m;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::scalar, second_diff_accumulate, diff_accumulate, second_diff_line, axpy, xpay,
      multiply,    sum,                    abs_sum,         dot,              max_abs,
  };
  return table;
}

}  // namespace fpk::kernels
