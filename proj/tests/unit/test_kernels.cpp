#include "doctest.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "fpk/kernels.hpp"
#include "fpk/stepper.hpp"

using namespace fpk;
namespace K = fpk::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!same_bits(a[i], b[i])) return false;
  }
  return true;
}

const std::size_t kSizes[] = {0, 1, 2, 3, 4, 5, 7, 8, 15, 16, 17, 63, 127, 128, 129, 255, 256, 257, 1000, 4099, 100003};

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(K::isa_supported(K::Isa::scalar));
  CHECK(K::scalar_table().isa == K::Isa::scalar);
}

TEST_CASE("avx2 reductions match scalar bit for bit") {
  const K::KernelTable* avx = K::avx2_table();
  if (avx == nullptr || !K::isa_supported(K::Isa::avx2)) {
    MESSAGE("AVX2 not available; equivalence not exercised");
    return;
  }
  const K::KernelTable& sc = K::scalar_table();
  for (std::size_t n : kSizes) {
    // Odd offsets exercise unaligned loads.
    for (std::size_t offset : {0, 1, 3}) {
      auto x = random_values(n + offset, 11 + n);
      auto y = random_values(n + offset, 23 + n, 3.0);
      const double* px = x.data() + offset;
      const double* py = y.data() + offset;
      CAPTURE(n);
      CAPTURE(offset);
      CHECK(same_bits(sc.sum(px, n), avx->sum(px, n)));
      CHECK(same_bits(sc.abs_sum(px, n), avx->abs_sum(px, n)));
      CHECK(same_bits(sc.dot(px, py, n), avx->dot(px, py, n)));
      CHECK(same_bits(sc.max_abs(px, n), avx->max_abs(px, n)));
    }
  }
}

TEST_CASE("avx2 elementwise kernels match scalar bit for bit") {
  const K::KernelTable* avx = K::avx2_table();
  if (avx == nullptr || !K::isa_supported(K::Isa::avx2)) return;
  const K::KernelTable& sc = K::scalar_table();
  for (std::size_t n : kSizes) {
    if (n < 2) continue;
    CAPTURE(n);
    const auto a = random_values(n, 1);
    const auto b = random_values(n, 2);
    const auto c = random_values(n, 3);
    const auto base = random_values(n, 4);

    auto o1 = base, o2 = base;
    sc.second_diff_accumulate(a.data(), b.data(), c.data(), o1.data(), n, 1.7);
    avx->second_diff_accumulate(a.data(), b.data(), c.data(), o2.data(), n, 1.7);
    CHECK(same_bits(o1, o2));

    o1 = o2 = base;
    sc.diff_accumulate(a.data(), b.data(), o1.data(), n, -0.3);
    avx->diff_accumulate(a.data(), b.data(), o2.data(), n, -0.3);
    CHECK(same_bits(o1, o2));

    for (bool periodic : {true, false}) {
      o1 = o2 = base;
      sc.second_diff_line(a.data(), o1.data(), n, 2.5, periodic);
      avx->second_diff_line(a.data(), o2.data(), n, 2.5, periodic);
      CHECK(same_bits(o1, o2));
    }

    o1 = o2 = base;
    sc.axpy(0.37, a.data(), o1.data(), n);
    avx->axpy(0.37, a.data(), o2.data(), n);
    CHECK(same_bits(o1, o2));

    o1 = o2 = base;
    sc.xpay(a.data(), -1.3, o1.data(), n);
    avx->xpay(a.data(), -1.3, o2.data(), n);
    CHECK(same_bits(o1, o2));

    sc.multiply(a.data(), b.data(), o1.data(), n);
    avx->multiply(a.data(), b.data(), o2.data(), n);
    CHECK(same_bits(o1, o2));
  }
}

TEST_CASE("max_abs propagates NaN the same way in both tables") {
  std::vector<double> x(300, 1.0);
  x[137] = std::numeric_limits<double>::quiet_NaN();
  x[5] = -4.0;
  const double s = K::scalar_table().max_abs(x.data(), x.size());
  if (const K::KernelTable* avx = K::avx2_table(); avx && K::isa_supported(K::Isa::avx2)) {
    const double v = avx->max_abs(x.data(), x.size());
    CHECK(std::isnan(s) == std::isnan(v));
    if (!std::isnan(s)) CHECK(s == v);
  }
}

TEST_CASE("pairwise reduction is accurate") {
  // Sum of many equal small terms: naive accumulation drifts, pairwise stays within a few ulps.
  const std::size_t n = 1'000'003;
  std::vector<double> x(n, 0.1);
  const double s = K::scalar_table().sum(x.data(), n);
  CHECK(std::abs(s - 0.1 * n) <= 1e-9);

  const auto r = random_values(5000, 99);
  long double ref = 0.0L;
  for (double v : r) ref += v;
  CHECK(std::abs(K::scalar_table().sum(r.data(), r.size()) - static_cast<double>(ref)) <= 1e-12);
  CHECK(K::scalar_table().sum(r.data(), 0) == 0.0);
}

TEST_CASE("a whole trajectory is bit-identical under both instruction sets") {
  if (!K::isa_supported(K::Isa::avx2)) return;
  const auto model = make_bosonic_model(2, 1.5, {0.4, -0.2});
  const Grid g(2, 4.0, 24, Boundary::zero_flux);
  const ScalarField u0 = ScalarField::sample(g, [](const Vec& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1])); });
  SolverConfig c;
  c.T = 0.05;
  c.mu = 0.01;
  c.flux = FluxMode::upwind;

  const K::Isa original = K::active().isa;
  K::set_active(K::Isa::scalar);
  const Trajectory a = solve_trajectory(*model, c, u0);
  K::set_active(K::Isa::avx2);
  const Trajectory b = solve_trajectory(*model, c, u0);
  K::set_active(original);

  const auto fa = a.final_field().values();
  const auto fb = b.final_field().values();
  CHECK(same_bits(std::vector<double>(fa.begin(), fa.end()), std::vector<double>(fb.begin(), fb.end())));
}

TEST_CASE("pinning an unsupported table throws") {
  if (K::isa_supported(K::Isa::avx2)) return;
  CHECK_THROWS_AS(K::set_active(K::Isa::avx2), std::invalid_argument);
}
