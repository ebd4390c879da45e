#pragma once

// Reduction tree shared by the scalar and AVX2 kernels. Both variants walk
// exactly this tree and only differ in how a leaf is accumulated, which is
// what makes their results bit-identical.

#include <cstddef>

namespace fpk::kernels::detail {

inline constexpr std::size_t kLeafSize = 128;

template <class Leaf>
double pairwise(const Leaf& leaf, std::size_t begin, std::size_t count) {
  if (count <= kLeafSize) return leaf(begin, count);
  const std::size_t half = (count / 2) & ~std::size_t{3};
  return pairwise(leaf, begin, half) + pairwise(leaf, begin + half, count - half);
}

inline double combine_lanes(const double lane[4]) {
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace fpk::kernels::detail
