#pragma once

#include <cstddef>

namespace mfp {

// Fixed-shape pairwise sum of x[0], x[stride], ..., x[(n-1)*stride].
// The tree depends only on n, so results do not depend on how the array was filled.
inline double pairwise_sum(const double* x, std::size_t n, std::size_t stride = 1) noexcept {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i * stride];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x, half, stride) + pairwise_sum(x + half * stride, n - half, stride);
}

inline double pairwise_mean(const double* x, std::size_t n, std::size_t stride = 1) noexcept {
  return n == 0 ? 0.0 : pairwise_sum(x, n, stride) / static_cast<double>(n);
}

}  // namespace mfp
