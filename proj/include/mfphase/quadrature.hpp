#pragma once

#include <cstddef>
#include <vector>

namespace mfp {

// Gauss-Hermite rule for the standard normal law: sum_q w_q f(y_q) = E f(Z) exactly for
// polynomials of degree <= 2Q-1. Weights sum to 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int order() const noexcept { return static_cast<int>(nodes.size()); }
};

// Throws ConfigError for order < 1.
GaussHermiteRule gauss_hermite(int order);

// Tensor rule for N(0, diag(variances)); points stored row-major (n_points x d).
struct TensorRule {
  int dimension = 0;
  std::vector<double> points;
  std::vector<double> weights;
  std::size_t size() const noexcept { return weights.size(); }
  const double* point(std::size_t q) const noexcept { return points.data() + q * dimension; }
};

TensorRule gaussian_tensor_rule(const std::vector<double>& variances, int order);

// Values p_0..p_{n-1} at y of the Hermite polynomials orthonormal under N(0,1).
void orthonormal_hermite_values(double y, int n, double* out) noexcept;

}  // namespace mfp
