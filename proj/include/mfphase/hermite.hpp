#pragma once

#include "mfphase/model.hpp"

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace mfp {

// h_0..h_n at x, h_n = He_n / (sqrt(n!) (2 pi)^{1/4}), orthonormal for the weight exp(-x^2/2).
// With damping a > 0 the values are multiplied by exp(-a x^2), computed without overflow.
void hermite_functions(double x, int n, double* out, double damping = 0.0) noexcept;

// w_theta(x) = exp(-(theta/2) sum_i k_i x_i^2 / sigma_i^2).
double weight(const std::vector<double>& k, const std::vector<double>& sigma, double theta,
              const double* x);

// Tensor basis psi_{l,theta}(x) = prod_i sqrt(s_i) h_{l_i}(s_i x_i), s_i = sqrt(theta k_i)/sigma_i,
// orthonormal in L^2 with weight w_theta; |l|_inf <= L.
class HermiteBasis {
 public:
  HermiteBasis() = default;
  // Throws ConfigError unless theta in (0,1], L >= 0, sigma_i > 0, k_i > 0.
  HermiteBasis(std::vector<double> k, std::vector<double> sigma, double theta, double r, int L);
  HermiteBasis(const DiffusionModel& model, double theta, double r, int L);

  int dimension() const noexcept { return d_; }
  double theta() const noexcept { return theta_; }
  double r() const noexcept { return r_; }
  int truncation() const noexcept { return L_; }
  std::size_t size() const noexcept { return size_; }
  const std::vector<double>& k() const noexcept { return k_; }
  const std::vector<double>& sigma() const noexcept { return sigma_; }
  double scale(int i) const noexcept { return s_[i]; }

  // Flat index <-> multi-index, last coordinate fastest.
  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(const std::vector<int>& l) const;  // RangeError if |l|_inf > L
  int shell(std::size_t flat) const;                       // |l|_inf
  double lambda(std::size_t flat) const noexcept { return lambda_[flat]; }
  // (1 + lambda_l)^{-r/2}
  double dual_factor(std::size_t flat) const noexcept { return dual_factor_[flat]; }

  double weight(const double* x) const;
  double eval(const std::vector<int>& l, const double* x) const;
  // All (L+1)^d values psi_l(x); optional damping multiplies by w_theta(x)^{damping}.
  void eval_all(const double* x, double* out, double damping = 0.0) const;

  bool same_space(const HermiteBasis& o) const;
  std::string describe() const;

 private:
  int d_ = 0;
  double theta_ = 1.0, r_ = 0.0;
  int L_ = 0;
  std::size_t size_ = 0;
  std::vector<double> k_, sigma_, s_, lambda_, dual_factor_;
};

// Coefficients of a signed measure u against the basis: raw pairings <u, psi_l> and the
// H^{-r}_theta coordinates c_l = (1+lambda_l)^{-r/2} <u, psi_l>.
struct DualVector {
  double theta = 1.0, r = 0.0;
  int L = 0;
  int d = 0;
  std::vector<double> pairings;  // <u, psi_{l,theta}>
  std::vector<double> shell_sums;  // sum of c_l^2 over |l|_inf = n
  double norm_squared = 0.0;
  double tail_estimate = 0.0;  // estimated missing norm^2 beyond L
  bool tail_known = false;

  double norm() const;
  // Relative error of the norm implied by the tail estimate.
  double relative_tail() const;
  // Partial norms sqrt(sum_{n<=L'} shell_sums[n]) for L' = 0..L.
  std::vector<double> partial_norms() const;
};

// Weighted point set sum_i a_i delta_{x_i}; points row-major.
struct PointMeasure {
  int d = 0;
  std::vector<double> points;
  std::vector<double> weights;
};

PointMeasure empirical_measure(const std::vector<double>& points, int d);

DualVector dual_coefficients(const HermiteBasis& basis, const PointMeasure& u);
// Density u(x) dx, integrated by a Gauss-Hermite rule of the given order per axis in the basis'
// scaled variables (exact when u / w_theta is a polynomial of degree < 2Q).
DualVector dual_coefficients(const HermiteBasis& basis,
                             const std::function<double(const double*)>& density, int order);
// Builds a DualVector from precomputed pairings <u, psi_{l,theta}>.
DualVector dual_from_pairings(const HermiteBasis& basis, std::vector<double> pairings);

// a - b in the given basis; ConfigError when either was built in another (theta, r, L).
DualVector subtract(const HermiteBasis& basis, const DualVector& a, const DualVector& b);

// Norm with truncation control: throws TruncationError when the shell sequence does not
// decay or the tail exceeds max_relative_tail.
double dual_norm(const DualVector& v, double max_relative_tail = 0.01);

// L^2_theta coefficients <f, psi_l>_{L^2_theta} of a function.
std::vector<double> l2_coefficients(const HermiteBasis& basis,
                                    const std::function<double(const double*)>& f, int order);
// Spectral H^r_theta norm from L^2_theta coefficients, with the given r.
double spectral_sobolev_norm(const HermiteBasis& basis, const std::vector<double>& coeffs,
                             double r);
// Derivative-sum norm: sqrt(sum_{|i| <= r} ||d^i f||^2_{L^2_theta}) for integer r, evaluated
// exactly on the spectral expansion.
double derivative_sum_norm(const HermiteBasis& basis, const std::vector<double>& coeffs, int r);

// ||L*_theta psi_l + lambda_l psi_l||_{L^2_theta}, with the operator applied through
// the derivative identity h_n' = sqrt(n) h_{n-1} and explicit multiplication by x.
double eigen_residual(const HermiteBasis& basis, const std::vector<int>& l, int order);
// max |G - I| for the Gram matrix of all basis elements up to degree max_degree per axis.
double gram_error(const HermiteBasis& basis, int max_degree, int order);

// One-axis matrix B(n, n') = int w_from psi^from_{n'} psi^to_n dx for two 1-D scales, so that
// pairings of w_from * sum c psi^from against psi^to are B * c.
Mat cross_projection_1d(double s_from, int L_from, double s_to, int L_to);

// Pairings in `to` of the density sum_l c_l w_from psi^from_l, c in `from`'s flat layout.
std::vector<double> transfer_density(const HermiteBasis& from, const std::vector<double>& c,
                                     const HermiteBasis& to);

struct ComparisonReport {
  double max_ratio = 0.0;
  std::vector<double> ratios;
};

// ||u||_{H^{-r}_{theta'}} / ||u||_{H^{-r}_theta} over a family of point measures.
ComparisonReport cross_weight_comparison(const std::vector<PointMeasure>& family,
                                         const HermiteBasis& at_theta,
                                         const HermiteBasis& at_theta_prime);

// Dual norm of delta_x (closed form sum_l (1+lambda_l)^{-r} psi_l(x)^2 with tail control).
DualVector delta_dual(const HermiteBasis& basis, const double* x);

}  // namespace mfp
