#include "mfphase/model.hpp"

#include "mfphase/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mfp {

DiagonalMatrix::DiagonalMatrix(std::vector<double> entries, bool allow_zero)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw ConfigError("diagonal matrix must have at least one entry");
  for (double e : entries_) {
    if (!std::isfinite(e) || e < 0.0 || (!allow_zero && e == 0.0))
      throw ConfigError("diagonal matrix entries must be positive and finite");
  }
}

double DiagonalMatrix::min() const { return *std::min_element(entries_.begin(), entries_.end()); }
double DiagonalMatrix::max() const { return *std::max_element(entries_.begin(), entries_.end()); }
bool DiagonalMatrix::strictly_positive() const { return !entries_.empty() && min() > 0.0; }

std::string to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::fitzhugh_nagumo_cutoff: return "fitzhugh-nagumo-cutoff";
    case FieldKind::constant: return "constant";
    case FieldKind::linear_test: return "linear-test";
    case FieldKind::custom_table: return "custom-table";
  }
  return "unknown";
}

FieldKind field_kind_from_string(const std::string& name) {
  if (name == "fitzhugh-nagumo-cutoff") return FieldKind::fitzhugh_nagumo_cutoff;
  if (name == "constant") return FieldKind::constant;
  if (name == "linear-test") return FieldKind::linear_test;
  if (name == "custom-table") return FieldKind::custom_table;
  throw ConfigError("unknown field kind '" + name + "'");
}

namespace {

double bump(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double bump_derivative(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

}  // namespace

double cutoff_profile(double t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const double a = bump(2.0 - t);
  const double b = bump(t - 1.0);
  return a / (a + b);
}

double cutoff_profile_derivative(double t) {
  if (t <= 1.0 || t >= 2.0) return 0.0;
  const double a = bump(2.0 - t);
  const double b = bump(t - 1.0);
  const double da = -bump_derivative(2.0 - t);
  const double db = bump_derivative(t - 1.0);
  const double s = a + b;
  return (da * b - a * db) / (s * s);
}

DiffusionModel::DiffusionModel(int dimension, double delta, DiagonalMatrix k, DiagonalMatrix sigma,
                               VectorFieldSpec field)
    : d_(dimension), delta_(delta), k_(std::move(k)), sigma_(std::move(sigma)),
      field_(std::move(field)) {
  validate();
  bounds_ = estimate_field_bounds(*this);
}

void DiffusionModel::validate() const {
  if (d_ < 1) throw ConfigError("model.dimension must be >= 1");
  if (!std::isfinite(delta_) || delta_ < 0.0) throw ConfigError("model.delta must be >= 0");
  if (static_cast<int>(k_.size()) != d_) throw ConfigError("model.k length must equal dimension");
  if (static_cast<int>(sigma_.size()) != d_)
    throw ConfigError("model.sigma length must equal dimension");
  if (!k_.strictly_positive()) throw ConfigError("model.k entries must be positive");
  switch (field_.kind) {
    case FieldKind::fitzhugh_nagumo_cutoff:
      if (d_ != 2) throw ConfigError("model.field.kind fitzhugh-nagumo-cutoff requires dimension 2");
      if (field_.c == 0.0) throw ConfigError("model.field.params.c must be nonzero");
      break;
    case FieldKind::constant:
      if (static_cast<int>(field_.value.size()) != d_)
        throw ConfigError("model.field.params.value length must equal dimension");
      break;
    case FieldKind::linear_test:
      if (static_cast<int>(field_.matrix.size()) != d_ * d_)
        throw ConfigError("model.field.params.A must have dimension^2 entries");
      break;
    case FieldKind::custom_table:
      for (const auto& t : field_.terms) {
        if (t.component < 0 || t.component >= d_ || static_cast<int>(t.exponents.size()) != d_)
          throw ConfigError("model.field.params: malformed polynomial term");
        for (int e : t.exponents)
          if (e < 0) throw ConfigError("model.field.params: negative exponent");
      }
      break;
  }
  if (field_.kind != FieldKind::constant &&
      !(field_.cutoff_radius > 0.0 && std::isfinite(field_.cutoff_radius)))
    throw ConfigError("model.field.cutoff_radius must be positive");
}

DiffusionModel DiffusionModel::with_delta(double delta) const {
  DiffusionModel out = *this;
  out.delta_ = delta;
  out.validate();
  return out;
}

DiffusionModel DiffusionModel::with_noise(DiagonalMatrix k, DiagonalMatrix sigma) const {
  return DiffusionModel(d_, delta_, std::move(k), std::move(sigma), field_);
}

// Writes the uncut field into f and its Jacobian into jac (row-major); returns nothing useful
// beyond the side effects, the double is |x| for reuse by the cutoff.
double DiffusionModel::raw_and_jacobian(const double* x, double* f, double* jac) const {
  const int d = d_;
  switch (field_.kind) {
    case FieldKind::fitzhugh_nagumo_cutoff: {
      const double u = x[0], v = x[1];
      f[0] = u - u * u * u / 3.0 - v;
      f[1] = (u + field_.a - field_.b * v) / field_.c;
      if (jac) {
        jac[0] = 1.0 - u * u;
        jac[1] = -1.0;
        jac[2] = 1.0 / field_.c;
        jac[3] = -field_.b / field_.c;
      }
      break;
    }
    case FieldKind::constant:
      for (int i = 0; i < d; ++i) f[i] = field_.value[i];
      if (jac) std::fill(jac, jac + d * d, 0.0);
      break;
    case FieldKind::linear_test:
      for (int i = 0; i < d; ++i) {
        double s = 0.0;
        for (int j = 0; j < d; ++j) s += field_.matrix[i * d + j] * x[j];
        f[i] = s;
      }
      if (jac) std::copy(field_.matrix.begin(), field_.matrix.end(), jac);
      break;
    case FieldKind::custom_table:
      std::fill(f, f + d, 0.0);
      if (jac) std::fill(jac, jac + d * d, 0.0);
      for (const auto& t : field_.terms) {
        double mono = t.coefficient;
        for (int j = 0; j < d; ++j) mono *= std::pow(x[j], t.exponents[j]);
        f[t.component] += mono;
        if (!jac) continue;
        for (int j = 0; j < d; ++j) {
          if (t.exponents[j] == 0) continue;
          double dm = t.coefficient * t.exponents[j];
          for (int l = 0; l < d; ++l)
            dm *= std::pow(x[l], l == j ? t.exponents[l] - 1 : t.exponents[l]);
          jac[t.component * d + j] += dm;
        }
      }
      break;
  }
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) r2 += x[i] * x[i];
  return std::sqrt(r2);
}

void DiffusionModel::field_into(const double* x, double* out) const {
  const double r = raw_and_jacobian(x, out, nullptr);
  if (field_.kind == FieldKind::constant) return;
  const double t = r / field_.cutoff_radius;
  if (t <= 1.0) return;
  const double psi = cutoff_profile(t);
  for (int i = 0; i < d_; ++i) out[i] *= psi;
}

void DiffusionModel::jacobian_into(const double* x, double* out) const {
  const int d = d_;
  double f[16];
  std::vector<double> fbuf;
  double* fp = f;
  if (d > 16) {
    fbuf.resize(d);
    fp = fbuf.data();
  }
  const double r = raw_and_jacobian(x, fp, out);
  if (field_.kind == FieldKind::constant) return;
  const double t = r / field_.cutoff_radius;
  if (t <= 1.0) return;
  const double psi = cutoff_profile(t);
  const double dpsi = cutoff_profile_derivative(t) / field_.cutoff_radius;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i * d + j] = out[i * d + j] * psi + fp[i] * dpsi * x[j] / r;
}

namespace {

void require_finite(const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) throw DomainError("field evaluated at a non-finite point");
}

}  // namespace

Vec eval_field(const DiffusionModel& model, const Vec& x) {
  if (x.size() != model.dimension()) throw DomainError("point dimension mismatch");
  require_finite(x);
  Vec out(model.dimension());
  model.field_into(x.data(), out.data());
  return out;
}

Mat eval_jacobian(const DiffusionModel& model, const Vec& x) {
  if (x.size() != model.dimension()) throw DomainError("point dimension mismatch");
  require_finite(x);
  const int d = model.dimension();
  std::vector<double> buf(d * d);
  model.jacobian_into(x.data(), buf.data());
  Mat out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = buf[i * d + j];
  return out;
}

Vec halton_point(std::size_t index, int dimension, double lo, double hi) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  Vec p(dimension);
  for (int j = 0; j < dimension; ++j) {
    const int base = primes[j % 12];
    double f = 1.0, r = 0.0;
    std::size_t i = index;
    while (i > 0) {
      f /= base;
      r += f * static_cast<double>(i % base);
      i /= base;
    }
    p[j] = lo + (hi - lo) * r;
  }
  return p;
}

FieldBounds estimate_field_bounds(const DiffusionModel& model, std::size_t samples,
                                  std::size_t offset) {
  const int d = model.dimension();
  const double box = model.field().kind == FieldKind::constant ? 1.0 : 2.0 * model.field().cutoff_radius;
  const double h = 1e-4 * std::max(1.0, box);
  FieldBounds b;
  std::vector<double> f(d), j(d * d), jp(d * d), jm(d * d);
  for (std::size_t s = 0; s < samples; ++s) {
    Vec x = halton_point(s + offset, d, -box, box);
    model.field_into(x.data(), f.data());
    model.jacobian_into(x.data(), j.data());
    double nf = 0.0, nj = 0.0, nh = 0.0;
    for (double v : f) nf += v * v;
    for (double v : j) nj += v * v;
    for (int k = 0; k < d; ++k) {
      Vec xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      model.jacobian_into(xp.data(), jp.data());
      model.jacobian_into(xm.data(), jm.data());
      for (int q = 0; q < d * d; ++q) {
        const double dq = (jp[q] - jm[q]) / (2.0 * h);
        nh += dq * dq;
      }
    }
    b.value = std::max(b.value, std::sqrt(nf));
    b.jacobian = std::max(b.jacobian, std::sqrt(nj));
    b.hessian = std::max(b.hessian, std::sqrt(nh));
  }
  b.value *= 1.1;
  b.jacobian *= 1.1;
  b.hessian *= 1.1;
  return b;
}

std::uint64_t model_hash(const DiffusionModel& model) {
  std::ostringstream os;
  os.precision(17);
  os << model.dimension() << '|' << model.delta() << '|';
  for (double v : model.k().entries()) os << v << ',';
  os << '|';
  for (double v : model.sigma().entries()) os << v << ',';
  const auto& f = model.field();
  os << '|' << to_string(f.kind) << '|' << f.a << ',' << f.b << ',' << f.c << '|';
  for (double v : f.value) os << v << ',';
  for (double v : f.matrix) os << v << ',';
  for (const auto& t : f.terms) {
    os << t.component << ':' << t.coefficient << ':';
    for (int e : t.exponents) os << e << ';';
  }
  os << '|' << f.cutoff_radius << '|' << f.cutoff_profile;
  const std::string s = os.str();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace mfp
