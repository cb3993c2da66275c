#include "mfphase/hermite.hpp"

#include "mfphase/errors.hpp"
#include "mfphase/quadrature.hpp"
#include "mfphase/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mfp {

namespace {
const double kH0 = std::pow(2.0 * std::numbers::pi, -0.25);
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);
}  // namespace

void hermite_functions(double x, int n, double* out, double damping) noexcept {
  if (n < 0) return;
  out[0] = kH0 * (damping > 0.0 ? std::exp(-damping * x * x) : 1.0);
  if (n == 0) return;
  out[1] = x * out[0];
  for (int k = 2; k <= n; ++k)
    out[k] = (x * out[k - 1] - std::sqrt(static_cast<double>(k - 1)) * out[k - 2]) /
             std::sqrt(static_cast<double>(k));
}

double weight(const std::vector<double>& k, const std::vector<double>& sigma, double theta,
              const double* x) {
  double q = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) q += k[i] * x[i] * x[i] / (sigma[i] * sigma[i]);
  return std::exp(-0.5 * theta * q);
}

HermiteBasis::HermiteBasis(std::vector<double> k, std::vector<double> sigma, double theta, double r,
                           int L)
    : d_(static_cast<int>(k.size())), theta_(theta), r_(r), L_(L), k_(std::move(k)),
      sigma_(std::move(sigma)) {
  if (d_ < 1 || sigma_.size() != k_.size()) throw ConfigError("basis: k and sigma must match");
  if (!(theta_ > 0.0 && theta_ <= 1.0)) throw ConfigError("basis: theta must lie in (0, 1]");
  if (L_ < 0) throw ConfigError("basis: truncation L must be >= 0");
  if (!std::isfinite(r_)) throw ConfigError("basis: r must be finite");
  s_.resize(d_);
  for (int i = 0; i < d_; ++i) {
    if (!(k_[i] > 0.0) || !(sigma_[i] > 0.0))
      throw ConfigError("basis: k and sigma entries must be positive");
    s_[i] = std::sqrt(theta_ * k_[i]) / sigma_[i];
  }
  size_ = 1;
  for (int i = 0; i < d_; ++i) size_ *= static_cast<std::size_t>(L_ + 1);
  lambda_.resize(size_);
  dual_factor_.resize(size_);
  for (std::size_t f = 0; f < size_; ++f) {
    const auto l = multi_index(f);
    double lam = 0.0;
    for (int i = 0; i < d_; ++i) lam += k_[i] * l[i];
    lambda_[f] = theta_ * lam;
    dual_factor_[f] = std::pow(1.0 + lambda_[f], -0.5 * r_);
  }
}

HermiteBasis::HermiteBasis(const DiffusionModel& model, double theta, double r, int L)
    : HermiteBasis(model.k().entries(), model.sigma().entries(), theta, r, L) {}

std::vector<int> HermiteBasis::multi_index(std::size_t flat) const {
  std::vector<int> l(d_);
  for (int i = d_ - 1; i >= 0; --i) {
    l[i] = static_cast<int>(flat % static_cast<std::size_t>(L_ + 1));
    flat /= static_cast<std::size_t>(L_ + 1);
  }
  return l;
}

std::size_t HermiteBasis::flat_index(const std::vector<int>& l) const {
  if (static_cast<int>(l.size()) != d_) throw RangeError("multi-index has wrong dimension");
  std::size_t f = 0;
  for (int i = 0; i < d_; ++i) {
    if (l[i] < 0 || l[i] > L_) throw RangeError("multi-index outside the truncation");
    f = f * static_cast<std::size_t>(L_ + 1) + static_cast<std::size_t>(l[i]);
  }
  return f;
}

int HermiteBasis::shell(std::size_t flat) const {
  int s = 0;
  for (int v : multi_index(flat)) s = std::max(s, v);
  return s;
}

double HermiteBasis::weight(const double* x) const { return mfp::weight(k_, sigma_, theta_, x); }

double HermiteBasis::eval(const std::vector<int>& l, const double* x) const {
  flat_index(l);  // range check
  std::vector<double> h(L_ + 1);
  double v = 1.0;
  for (int i = 0; i < d_; ++i) {
    hermite_functions(s_[i] * x[i], l[i], h.data());
    v *= std::sqrt(s_[i]) * h[l[i]];
  }
  return v;
}

void HermiteBasis::eval_all(const double* x, double* out, double damping) const {
  const int n = L_ + 1;
  std::vector<double> h(static_cast<std::size_t>(d_) * n);
  for (int i = 0; i < d_; ++i) {
    const double y = s_[i] * x[i];
    // w_theta^a = prod exp(-a y_i^2 / 2)
    hermite_functions(y, L_, h.data() + static_cast<std::size_t>(i) * n, 0.5 * damping);
    for (int j = 0; j < n; ++j) h[static_cast<std::size_t>(i) * n + j] *= std::sqrt(s_[i]);
  }
  // Build the tensor product axis by axis.
  out[0] = 1.0;
  std::size_t len = 1;
  std::vector<double> tmp(size_);
  for (int i = 0; i < d_; ++i) {
    const double* hi = h.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t a = 0; a < len; ++a)
      for (int j = 0; j < n; ++j) tmp[a * n + j] = out[a] * hi[j];
    len *= n;
    std::copy(tmp.begin(), tmp.begin() + static_cast<long>(len), out);
  }
}

bool HermiteBasis::same_space(const HermiteBasis& o) const {
  return d_ == o.d_ && theta_ == o.theta_ && r_ == o.r_ && L_ == o.L_ && k_ == o.k_ &&
         sigma_ == o.sigma_;
}

std::string HermiteBasis::describe() const {
  std::ostringstream os;
  os << "theta=" << theta_ << " r=" << r_ << " L=" << L_;
  return os.str();
}

double DualVector::norm() const { return std::sqrt(norm_squared); }

double DualVector::relative_tail() const {
  if (!tail_known || !std::isfinite(tail_estimate)) return std::numeric_limits<double>::infinity();
  if (norm_squared == 0.0) return tail_estimate == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(1.0 + tail_estimate / norm_squared) - 1.0;
}

std::vector<double> DualVector::partial_norms() const {
  std::vector<double> out;
  double s = 0.0;
  for (double v : shell_sums) {
    s += v;
    out.push_back(std::sqrt(s));
  }
  return out;
}

namespace {

// Shell sums of c_l^2 with c_l = dual_factor * pairing.
void fill_norms(const HermiteBasis& b, DualVector& v) {
  v.shell_sums.assign(b.truncation() + 1, 0.0);
  for (std::size_t f = 0; f < b.size(); ++f) {
    const double c = b.dual_factor(f) * v.pairings[f];
    v.shell_sums[b.shell(f)] += c * c;
  }
  double s = 0.0;
  for (double x : v.shell_sums) s += x;
  v.norm_squared = s;

  const int L = b.truncation();
  const auto& S = v.shell_sums;
  v.tail_known = true;
  if (s == 0.0) {
    v.tail_estimate = 0.0;
    return;
  }
  if (L < 3) {
    v.tail_known = false;
    v.tail_estimate = std::numeric_limits<double>::infinity();
    return;
  }
  // Two trailing blocks of h shells each (h even, so parity zeros and the oscillation of
  // point-mass coefficients average out).
  const int h = std::max(2, 2 * ((L + 1) / 8));
  double Ba = 0.0, Bb = 0.0;
  for (int n = L - 2 * h + 1; n <= L - h; ++n) Ba += S[n];
  for (int n = L - h + 1; n <= L; ++n) Bb += S[n];
  if (Bb == 0.0) {
    v.tail_estimate = 0.0;
    return;
  }
  if (Bb >= Ba) {
    v.tail_estimate = std::numeric_limits<double>::infinity();
    return;
  }
  const double q = Bb / Ba;
  const double geometric = Bb * q / (1.0 - q);
  const double na = L - 1.5 * h + 0.5, nb = L - 0.5 * h + 0.5;
  const double p = std::log(Ba / Bb) / std::log(nb / na);
  double power = std::numeric_limits<double>::infinity();
  if (p > 1.0) power = Bb / h * std::pow(nb, p) * std::pow(L + 0.5, 1.0 - p) / (p - 1.0);
  v.tail_estimate = std::max(geometric, power);
}

}  // namespace

DualVector dual_from_pairings(const HermiteBasis& basis, std::vector<double> pairings) {
  if (pairings.size() != basis.size()) throw ConfigError("pairings do not match the basis size");
  DualVector v;
  v.theta = basis.theta();
  v.r = basis.r();
  v.L = basis.truncation();
  v.d = basis.dimension();
  v.pairings = std::move(pairings);
  fill_norms(basis, v);
  return v;
}

PointMeasure empirical_measure(const std::vector<double>& points, int d) {
  PointMeasure u;
  u.d = d;
  u.points = points;
  const std::size_t n = points.size() / static_cast<std::size_t>(d);
  u.weights.assign(n, n ? 1.0 / static_cast<double>(n) : 0.0);
  return u;
}

DualVector dual_coefficients(const HermiteBasis& basis, const PointMeasure& u) {
  if (u.d != basis.dimension()) throw ConfigError("measure and basis dimensions differ");
  const std::size_t n = u.weights.size();
  const std::size_t M = basis.size();
  // Blocks of particles summed in a fixed order keep the result thread-count independent.
  constexpr std::size_t block = 256;
  const std::size_t nblocks = (n + block - 1) / block;
  std::vector<double> partial(nblocks * M, 0.0);
  for (double v : u.points)
    if (!std::isfinite(v)) throw DomainError("non-finite point in measure");
#pragma omp parallel for schedule(static, 1)
  for (std::size_t b = 0; b < nblocks; ++b) {
    std::vector<double> vals(M);
    double* acc = partial.data() + b * M;
    const std::size_t end = std::min(n, (b + 1) * block);
    for (std::size_t i = b * block; i < end; ++i) {
      const double* x = u.points.data() + i * static_cast<std::size_t>(u.d);
      basis.eval_all(x, vals.data());
      const double w = u.weights[i];
      for (std::size_t f = 0; f < M; ++f) acc[f] += w * vals[f];
    }
  }
  std::vector<double> pair(M, 0.0);
  for (std::size_t b = 0; b < nblocks; ++b)
    for (std::size_t f = 0; f < M; ++f) pair[f] += partial[b * M + f];
  return dual_from_pairings(basis, std::move(pair));
}

std::vector<double> l2_coefficients(const HermiteBasis& basis,
                                    const std::function<double(const double*)>& f, int order) {
  const int d = basis.dimension(), L = basis.truncation();
  const GaussHermiteRule g = gauss_hermite(order);
  const int Q = g.order();
  std::vector<Mat> A(d);
  std::vector<double> h(L + 1);
  for (int i = 0; i < d; ++i) {
    A[i].resize(L + 1, Q);
    const double c = kSqrt2Pi / std::sqrt(basis.scale(i));
    for (int q = 0; q < Q; ++q) {
      hermite_functions(g.nodes[q], L, h.data());
      for (int l = 0; l <= L; ++l) A[i](l, q) = c * g.weights[q] * h[l];
    }
  }
  Tensor F;
  F.dims.assign(d, Q);
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(Q);
  F.data.resize(n);
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  for (std::size_t q = 0; q < n; ++q) {
    for (int i = 0; i < d; ++i) x[i] = g.nodes[idx[i]] / basis.scale(i);
    F.data[q] = f(x.data());
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < Q) break;
      idx[i] = 0;
    }
  }
  return apply_all_axes(std::move(F), A).data;
}

DualVector dual_coefficients(const HermiteBasis& basis,
                             const std::function<double(const double*)>& density, int order) {
  auto ratio = [&](const double* x) {
    const double w = basis.weight(x);
    const double u = density(x);
    return u == 0.0 ? 0.0 : u / w;
  };
  return dual_from_pairings(basis, l2_coefficients(basis, ratio, order));
}

DualVector subtract(const HermiteBasis& basis, const DualVector& a, const DualVector& b) {
  for (const DualVector* v : {&a, &b})
    if (v->theta != basis.theta() || v->r != basis.r() || v->L != basis.truncation() ||
        v->d != basis.dimension() || v->pairings.size() != basis.size())
      throw ConfigError("dual vectors live in different bases (theta, r, L)");
  std::vector<double> p(a.pairings.size());
  for (std::size_t f = 0; f < p.size(); ++f) p[f] = a.pairings[f] - b.pairings[f];
  return dual_from_pairings(basis, std::move(p));
}

double dual_norm(const DualVector& v, double max_relative_tail) {
  const double rel = v.relative_tail();
  if (!(rel <= max_relative_tail)) {
    std::ostringstream os;
    os << "dual norm truncation at L=" << v.L << " not converged (relative tail ";
    if (std::isfinite(rel)) os << rel; else os << "unbounded";
    os << ", limit " << max_relative_tail << ")";
    throw TruncationError(os.str());
  }
  return v.norm();
}

double spectral_sobolev_norm(const HermiteBasis& basis, const std::vector<double>& coeffs,
                             double r) {
  double s = 0.0;
  for (std::size_t f = 0; f < basis.size(); ++f)
    s += std::pow(1.0 + basis.lambda(f), r) * coeffs[f] * coeffs[f];
  return std::sqrt(s);
}

double derivative_sum_norm(const HermiteBasis& basis, const std::vector<double>& coeffs, int r) {
  const int d = basis.dimension(), L = basis.truncation();
  // d/dx_i psi_l = s_i sqrt(l_i) psi_{l - e_i}: derivative coefficients are shifted copies.
  std::vector<Mat> D(d);
  for (int i = 0; i < d; ++i) {
    D[i] = Mat::Zero(L + 1, L + 1);
    for (int m = 0; m < L; ++m) D[i](m, m + 1) = basis.scale(i) * std::sqrt(static_cast<double>(m + 1));
  }
  double total = 0.0;
  std::vector<int> ord(d, 0);
  while (true) {
    int sum = 0;
    for (int v : ord) sum += v;
    if (sum <= r) {
      Tensor t;
      t.dims.assign(d, L + 1);
      t.data = coeffs;
      for (int i = 0; i < d; ++i)
        for (int p = 0; p < ord[i]; ++p) t = apply_axis(t, i, D[i]);
      for (double v : t.data) total += v * v;
    }
    int i = d - 1;
    for (; i >= 0; --i) {
      if (++ord[i] <= r) break;
      ord[i] = 0;
    }
    if (i < 0) break;
  }
  return std::sqrt(total);
}

double eigen_residual(const HermiteBasis& basis, const std::vector<int>& l, int order) {
  const std::size_t flat = basis.flat_index(l);
  const int d = basis.dimension();
  const GaussHermiteRule g = gauss_hermite(order);
  const int Q = g.order();
  int maxl = 0;
  for (int v : l) maxl = std::max(maxl, v);
  std::vector<std::vector<double>> h(Q, std::vector<double>(maxl + 1));
  for (int q = 0; q < Q; ++q) hermite_functions(g.nodes[q], maxl, h[q].data());
  const double lam = basis.lambda(flat);
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(Q);
  std::vector<int> idx(d, 0);
  double acc = 0.0, norm_const = 1.0;
  for (int i = 0; i < d; ++i) norm_const *= kSqrt2Pi / basis.scale(i);
  std::vector<double> val(d), d1(d), d2(d), x(d);
  for (std::size_t q = 0; q < n; ++q) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const int li = l[i];
      const double s = basis.scale(i);
      const auto& hh = h[idx[i]];
      x[i] = g.nodes[idx[i]] / s;
      w *= g.weights[idx[i]];
      val[i] = std::sqrt(s) * hh[li];
      d1[i] = li >= 1 ? std::sqrt(s) * s * std::sqrt(static_cast<double>(li)) * hh[li - 1] : 0.0;
      d2[i] = li >= 2 ? std::sqrt(s) * s * s * std::sqrt(static_cast<double>(li) * (li - 1)) * hh[li - 2]
                      : 0.0;
    }
    double psi = 1.0;
    for (int i = 0; i < d; ++i) psi *= val[i];
    double Lpsi = 0.0;
    for (int i = 0; i < d; ++i) {
      double rest = 1.0;
      for (int j = 0; j < d; ++j)
        if (j != i) rest *= val[j];
      const double sig2 = basis.sigma()[i] * basis.sigma()[i];
      Lpsi += rest * (sig2 * d2[i] - basis.theta() * basis.k()[i] * x[i] * d1[i]);
    }
    const double res = Lpsi + lam * psi;
    acc += w * res * res;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < Q) break;
      idx[i] = 0;
    }
  }
  return std::sqrt(acc * norm_const);
}

double gram_error(const HermiteBasis& basis, int max_degree, int order) {
  const int d = basis.dimension();
  if (max_degree > basis.truncation()) throw RangeError("gram degree exceeds truncation");
  const GaussHermiteRule g = gauss_hermite(order);
  const int Q = g.order();
  std::size_t nq = 1, nm = 1;
  for (int i = 0; i < d; ++i) {
    nq *= static_cast<std::size_t>(Q);
    nm *= static_cast<std::size_t>(max_degree + 1);
  }
  // Values of each selected basis element at each node, with sqrt of the quadrature weight.
  Mat V(nq, nm);
  std::vector<int> qi(d, 0);
  std::vector<double> x(d);
  double norm_const = 1.0;
  for (int i = 0; i < d; ++i) norm_const *= kSqrt2Pi / basis.scale(i);
  for (std::size_t q = 0; q < nq; ++q) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      x[i] = g.nodes[qi[i]] / basis.scale(i);
      w *= g.weights[qi[i]];
    }
    std::vector<int> li(d, 0);
    for (std::size_t m = 0; m < nm; ++m) {
      V(q, m) = std::sqrt(w * norm_const) * basis.eval(li, x.data());
      for (int i = d - 1; i >= 0; --i) {
        if (++li[i] <= max_degree) break;
        li[i] = 0;
      }
    }
    for (int i = d - 1; i >= 0; --i) {
      if (++qi[i] < Q) break;
      qi[i] = 0;
    }
  }
  const Mat G = V.transpose() * V;
  return (G - Mat::Identity(nm, nm)).cwiseAbs().maxCoeff();
}

Mat cross_projection_1d(double s_from, int L_from, double s_to, int L_to) {
  if (s_from == s_to) {
    Mat B = Mat::Zero(L_to + 1, L_from + 1);
    for (int n = 0; n <= std::min(L_from, L_to); ++n) B(n, n) = 1.0;
    return B;
  }
  const int Q = (L_from + L_to) / 2 + 2;
  const GaussHermiteRule g = gauss_hermite(Q);
  const double rho = s_to / s_from;
  std::vector<double> hf(L_from + 1), ht(L_to + 1);
  Mat B = Mat::Zero(L_to + 1, L_from + 1);
  for (int q = 0; q < Q; ++q) {
    hermite_functions(g.nodes[q], L_from, hf.data());
    hermite_functions(rho * g.nodes[q], L_to, ht.data());
    for (int n = 0; n <= L_to; ++n)
      for (int m = 0; m <= L_from; ++m) B(n, m) += g.weights[q] * ht[n] * hf[m];
  }
  return B * (kSqrt2Pi * std::sqrt(rho));
}

std::vector<double> transfer_density(const HermiteBasis& from, const std::vector<double>& c,
                                     const HermiteBasis& to) {
  if (from.dimension() != to.dimension()) throw ConfigError("basis dimensions differ");
  if (c.size() != from.size()) throw ConfigError("coefficient count does not match basis");
  const int d = from.dimension();
  std::vector<Mat> B(d);
  for (int i = 0; i < d; ++i)
    B[i] = cross_projection_1d(from.scale(i), from.truncation(), to.scale(i), to.truncation());
  Tensor t;
  t.dims.assign(d, from.truncation() + 1);
  t.data = c;
  return apply_all_axes(std::move(t), B).data;
}

ComparisonReport cross_weight_comparison(const std::vector<PointMeasure>& family,
                                         const HermiteBasis& at_theta,
                                         const HermiteBasis& at_theta_prime) {
  if (at_theta_prime.theta() > at_theta.theta())
    throw ConfigError("comparison requires theta' <= theta");
  ComparisonReport rep;
  for (const auto& u : family) {
    const double a = dual_norm(dual_coefficients(at_theta, u));
    const double b = dual_norm(dual_coefficients(at_theta_prime, u));
    const double ratio = a == b ? 1.0 : b / a;
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

DualVector delta_dual(const HermiteBasis& basis, const double* x) {
  PointMeasure u;
  u.d = basis.dimension();
  u.points.assign(x, x + u.d);
  u.weights = {1.0};
  return dual_coefficients(basis, u);
}

}  // namespace mfp
