#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Diagonal of a positive diagonal matrix (interaction K or noise sigma).
class DiagonalMatrix {
 public:
  DiagonalMatrix() = default;
  // Throws ConfigError unless every entry is > 0 (or >= 0 when allow_zero).
  explicit DiagonalMatrix(std::vector<double> entries, bool allow_zero = false);

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<double>& entries() const noexcept { return entries_; }
  double min() const;
  double max() const;
  bool strictly_positive() const;

 private:
  std::vector<double> entries_;
};

enum class FieldKind { fitzhugh_nagumo_cutoff, constant, linear_test, custom_table };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

// Monomial c * prod_j x_j^{e_j} contributing to one output component.
struct PolynomialTerm {
  int component = 0;
  std::vector<int> exponents;
  double coefficient = 0.0;
};

struct VectorFieldSpec {
  FieldKind kind = FieldKind::fitzhugh_nagumo_cutoff;
  // FitzHugh-Nagumo parameters.
  double a = 1.0 / 3.0;
  double b = 1.0;
  double c = 10.0;
  // constant kind
  std::vector<double> value;
  // linear-test kind, row-major d x d
  std::vector<double> matrix;
  // custom-table kind
  std::vector<PolynomialTerm> terms;
  // Radius R = 1/eps of the smooth cutoff; the field vanishes for |x| >= 2R.
  double cutoff_radius = 10.0;
  std::string cutoff_profile = "exp-bump-ratio";
};

// Sampled bounds on |F|, |DF| and |D^2 F| over R^d.
struct FieldBounds {
  double value = 0.0;
  double jacobian = 0.0;
  double hessian = 0.0;
};

class DiffusionModel {
 public:
  DiffusionModel() = default;
  DiffusionModel(int dimension, double delta, DiagonalMatrix k, DiagonalMatrix sigma,
                 VectorFieldSpec field);

  int dimension() const noexcept { return d_; }
  double delta() const noexcept { return delta_; }
  const DiagonalMatrix& k() const noexcept { return k_; }
  const DiagonalMatrix& sigma() const noexcept { return sigma_; }
  const VectorFieldSpec& field() const noexcept { return field_; }
  const FieldBounds& bounds() const noexcept { return bounds_; }

  // sigma_i^2 / k_i, the variance of the relaxed Gaussian in coordinate i.
  double gamma_ratio(int i) const { return sigma_[i] * sigma_[i] / k_[i]; }

  DiffusionModel with_delta(double delta) const;
  DiffusionModel with_noise(DiagonalMatrix k, DiagonalMatrix sigma) const;

  // Hot-path evaluation into caller-provided storage; x and out have size d.
  void field_into(const double* x, double* out) const;
  void jacobian_into(const double* x, double* out_rowmajor) const;

 private:
  void validate() const;
  double raw_and_jacobian(const double* x, double* f, double* jac) const;

  int d_ = 0;
  double delta_ = 0.0;
  DiagonalMatrix k_;
  DiagonalMatrix sigma_;
  VectorFieldSpec field_;
  FieldBounds bounds_;
};

// Cutoff profile: 1 on [0,1], 0 on [2,inf), smooth and non-increasing between.
double cutoff_profile(double t);
double cutoff_profile_derivative(double t);

Vec eval_field(const DiffusionModel& model, const Vec& x);
Mat eval_jacobian(const DiffusionModel& model, const Vec& x);

// Samples the box [-2R, 2R]^d with a Halton sequence and pads the maxima by 10%.
FieldBounds estimate_field_bounds(const DiffusionModel& model, std::size_t samples = 20000,
                                  std::size_t offset = 1);

// Halton point (bases 2,3,5,...) mapped to [lo, hi]^d.
Vec halton_point(std::size_t index, int dimension, double lo, double hi);

// Stable hash of the model parameters, used in run manifests.
std::uint64_t model_hash(const DiffusionModel& model);

}  // namespace mfp
