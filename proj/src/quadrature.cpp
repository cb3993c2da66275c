#include "mfphase/quadrature.hpp"

#include "mfphase/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace mfp {

void orthonormal_hermite_values(double y, int n, double* out) noexcept {
  if (n <= 0) return;
  out[0] = 1.0;
  if (n == 1) return;
  out[1] = y;
  for (int k = 1; k + 1 < n; ++k)
    out[k + 1] = (y * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
}

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw ConfigError("quadrature order must be >= 1");
  const int Q = order;
  // Jacobi matrix eigenvalues as starting guesses, then Newton polishing; weights from the
  // Christoffel function, which stays accurate for the tiny outer weights.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(Q, Q);
  for (int k = 1; k < Q; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J, Eigen::EigenvaluesOnly);
  std::vector<double> p(Q + 1);
  GaussHermiteRule rule;
  rule.nodes.resize(Q);
  rule.weights.resize(Q);
  for (int i = 0; i < Q; ++i) {
    double y = es.eigenvalues()[i];
    for (int it = 0; it < 8; ++it) {
      orthonormal_hermite_values(y, Q + 1, p.data());
      const double dp = std::sqrt(static_cast<double>(Q)) * p[Q - 1];
      const double step = p[Q] / dp;
      y -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(y))) break;
    }
    orthonormal_hermite_values(y, Q, p.data());
    double s = 0.0;
    for (int k = 0; k < Q; ++k) s += p[k] * p[k];
    rule.nodes[i] = y;
    rule.weights[i] = 1.0 / s;
  }
  // Enforce exact symmetry.
  for (int i = 0; i < Q / 2; ++i) {
    const double y = 0.5 * (rule.nodes[Q - 1 - i] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[Q - 1 - i]);
    rule.nodes[i] = -y;
    rule.nodes[Q - 1 - i] = y;
    rule.weights[i] = rule.weights[Q - 1 - i] = w;
  }
  if (Q % 2 == 1) rule.nodes[Q / 2] = 0.0;
  return rule;
}

TensorRule gaussian_tensor_rule(const std::vector<double>& variances, int order) {
  const int d = static_cast<int>(variances.size());
  if (d < 1) throw ConfigError("tensor rule needs dimension >= 1");
  const GaussHermiteRule g = gauss_hermite(order);
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(order);
  TensorRule t;
  t.dimension = d;
  t.points.resize(n * d);
  t.weights.resize(n);
  std::vector<int> idx(d, 0);
  for (std::size_t q = 0; q < n; ++q) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      t.points[q * d + i] = std::sqrt(variances[i]) * g.nodes[idx[i]];
      w *= g.weights[idx[i]];
    }
    t.weights[q] = w;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < order) break;
      idx[i] = 0;
    }
  }
  return t;
}

}  // namespace mfp
