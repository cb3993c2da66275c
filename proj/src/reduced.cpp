#include "mfphase/reduced.hpp"

#include "mfphase/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mfp {

SmoothedField::SmoothedField(const DiffusionModel& model, int order) : model_(model), order_(order) {
  if (order < 2) throw ConfigError("numerics.Q (quadrature order) must be >= 2");
  std::vector<double> var(model.dimension());
  for (int i = 0; i < model.dimension(); ++i) var[i] = model.gamma_ratio(i);
  rule_ = gaussian_tensor_rule(var, order);
}

void SmoothedField::value_into(const double* z, double* out) const {
  const int d = dimension();
  double x[16], f[16];
  for (int i = 0; i < d; ++i) out[i] = 0.0;
  for (std::size_t q = 0; q < rule_.size(); ++q) {
    const double* p = rule_.point(q);
    for (int i = 0; i < d; ++i) x[i] = z[i] + p[i];
    model_.field_into(x, f);
    for (int i = 0; i < d; ++i) out[i] += rule_.weights[q] * f[i];
  }
}

void SmoothedField::jacobian_into(const double* z, double* out) const {
  const int d = dimension();
  double x[16], j[256];
  for (int i = 0; i < d * d; ++i) out[i] = 0.0;
  for (std::size_t q = 0; q < rule_.size(); ++q) {
    const double* p = rule_.point(q);
    for (int i = 0; i < d; ++i) x[i] = z[i] + p[i];
    model_.jacobian_into(x, j);
    for (int i = 0; i < d * d; ++i) out[i] += rule_.weights[q] * j[i];
  }
}

Vec SmoothedField::value(const Vec& z) const {
  Vec out(dimension());
  value_into(z.data(), out.data());
  return out;
}

Mat SmoothedField::jacobian(const Vec& z) const {
  const int d = dimension();
  std::vector<double> buf(d * d);
  jacobian_into(z.data(), buf.data());
  Mat J(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) J(i, k) = buf[i * d + k];
  return J;
}

OdeRhs SmoothedField::flow() const {
  return [this](const OdeState& x, OdeState& dx, double) { value_into(x.data(), dx.data()); };
}

OdeRhs SmoothedField::variational_flow() const {
  return [this](const OdeState& x, OdeState& dx, double) {
    const int d = dimension();
    double J[256];
    value_into(x.data(), dx.data());
    jacobian_into(x.data(), J);
    const double* Phi = x.data() + d;
    double* dPhi = dx.data() + d;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        double s = 0.0;
        for (int l = 0; l < d; ++l) s += J[i * d + l] * Phi[l * d + k];
        dPhi[i * d + k] = s;
      }
  };
}

namespace {

OdeState with_identity(const Vec& x) {
  const int d = static_cast<int>(x.size());
  OdeState s(d + d * d, 0.0);
  for (int i = 0; i < d; ++i) {
    s[i] = x[i];
    s[d + i * d + i] = 1.0;
  }
  return s;
}

Vec head(const OdeState& s, int d) {
  Vec v(d);
  for (int i = 0; i < d; ++i) v[i] = s[i];
  return v;
}

Mat tail_matrix(const OdeState& s, int d) {
  Mat M(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) M(i, k) = s[d + i * d + k];
  return M;
}

// Cubic Hermite on a uniform periodic grid.
Vec hermite_interp(const std::vector<Vec>& y, const std::vector<Vec>& dy, double period, double u) {
  const int M = static_cast<int>(y.size());
  const double h = period / M;
  double s = u / h;
  double fl = std::floor(s);
  int j = static_cast<int>(fl) % M;
  if (j < 0) j += M;
  const double t = s - fl;
  const int j1 = (j + 1) % M;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2,
               h11 = t3 - t2;
  return h00 * y[j] + h10 * h * dy[j] + h01 * y[j1] + h11 * h * dy[j1];
}

}  // namespace

double LimitCycle::wrap(double u) const {
  double w = std::fmod(u, period);
  if (w < 0) w += period;
  if (w >= period) w -= period;
  return w;
}

Vec LimitCycle::state(double u) const { return hermite_interp(samples, velocities, period, wrap(u)); }

Vec LimitCycle::velocity(double u) const {
  return hermite_interp(velocities, accelerations, period, wrap(u));
}

Vec LimitCycle::prc_at(double u) const { return hermite_interp(prc, prc_rates, period, wrap(u)); }

Mat LimitCycle::center_projection(double u) const {
  return velocity(u) * prc_at(u).transpose();
}

Mat LimitCycle::stable_projection(double u) const {
  return Mat::Identity(d, d) - center_projection(u);
}

int LimitCycle::nearest_sample(const Vec& x) const {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (int j = 0; j < size(); ++j) {
    const double dd = (samples[j] - x).squaredNorm();
    if (dd < bd) {
      bd = dd;
      best = j;
    }
  }
  return best;
}

double LimitCycle::trivial_multiplier_error() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& m : multipliers) best = std::min(best, std::abs(m - 1.0));
  return best;
}

double LimitCycle::max_nontrivial_modulus() const {
  std::size_t triv = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < multipliers.size(); ++i)
    if (std::abs(multipliers[i] - 1.0) < best) {
      best = std::abs(multipliers[i] - 1.0);
      triv = i;
    }
  double mx = 0.0;
  for (std::size_t i = 0; i < multipliers.size(); ++i)
    if (i != triv) mx = std::max(mx, std::abs(multipliers[i]));
  return mx;
}

LimitCycle find_limit_cycle(const SmoothedField& field, const Vec& guess, const CycleOptions& opt) {
  const int d = field.dimension();
  if (guess.size() != d) throw ConfigError("cycle guess has wrong dimension");
  const OdeRhs flow = field.flow();
  const OdeRhs var = field.variational_flow();

  OdeState x(guess.data(), guess.data() + d);
  const double g0 = field.value(guess).norm();
  integrate(flow, x, 0.0, opt.transient, opt.ode);
  Vec x0 = head(x, d);
  Vec n0 = field.value(x0);
  if (n0.norm() <= 1e-6 * std::max(1.0, g0))
    throw NoCycleError("trajectory settled on an equilibrium: no periodic orbit");

  auto g = [&](const OdeState& y) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += (y[i] - x0[i]) * n0[i];
    return s;
  };
  OdeState y = x;
  double T = 0.0;
  if (!integrate_to_event(flow, y, 0.0, opt.max_return_time, 1e-6, g, T, opt.ode))
    throw NoCycleError("no return to the Poincare section within the maximal time");

  // Newton on (x, T): phi_T(x) - x = 0 and (x - x0).n0 = 0.
  LimitCycle cyc;
  cyc.d = d;
  Vec xs = x0;
  double first = -1.0;
  bool ok = false;
  for (int it = 0; it <= opt.max_newton; ++it) {
    OdeState s = with_identity(xs);
    integrate(var, s, 0.0, T, opt.ode);
    const Vec phi = head(s, d);
    const Mat Phi = tail_matrix(s, d);
    const Vec r = phi - xs;
    const double res = r.norm();
    cyc.newton_history.push_back(res);
    if (first < 0) first = res;
    if (res <= opt.shooting_tolerance) {
      ok = true;
      cyc.shooting_residual = res;
      break;
    }
    if (!std::isfinite(res) || res > 1e3 * std::max(first, 1e-3))
      throw ConvergenceError("shooting Newton iteration diverged", cyc.newton_history);
    Mat J = Mat::Zero(d + 1, d + 1);
    J.topLeftCorner(d, d) = Phi - Mat::Identity(d, d);
    J.topRightCorner(d, 1) = field.value(phi);
    J.bottomLeftCorner(1, d) = n0.transpose();
    Vec rhs(d + 1);
    rhs.head(d) = -r;
    rhs[d] = -(xs - x0).dot(n0);
    const Vec dx = J.fullPivLu().solve(rhs);
    xs += dx.head(d);
    T += dx[d];
    if (!(T > 0.0)) throw ConvergenceError("shooting produced a non-positive period", cyc.newton_history);
  }
  if (!ok) throw ConvergenceError("shooting Newton iteration did not converge", cyc.newton_history);
  cyc.period = T;

  // Uniform fine samples, then re-origin at the max-|G| sample.
  const int M = opt.samples;
  std::vector<double> times(M);
  for (int j = 0; j < M; ++j) times[j] = T * j / M;
  std::vector<Vec> raw;
  raw.reserve(M);
  integrate_times(flow, OdeState(xs.data(), xs.data() + d), times,
                  [&](const OdeState& s, double) { raw.push_back(head(s, d)); }, opt.ode);
  int jmax = 0;
  double vmax = -1.0;
  for (int j = 0; j < M; ++j) {
    const double v = field.value(raw[j]).norm();
    if (v > vmax * (1 + 1e-12) || (std::abs(v - vmax) <= 1e-12 * vmax && raw[j][0] < raw[jmax][0])) {
      vmax = std::max(v, vmax);
      jmax = j;
    }
  }
  // Re-integrate from the anchor so samples are exact flow images of it.
  const Vec anchor = raw[jmax];
  cyc.samples.clear();
  integrate_times(flow, OdeState(anchor.data(), anchor.data() + d), times,
                  [&](const OdeState& s, double) { cyc.samples.push_back(head(s, d)); }, opt.ode);
  cyc.velocities.resize(M);
  cyc.accelerations.resize(M);
  for (int j = 0; j < M; ++j) {
    cyc.velocities[j] = field.value(cyc.samples[j]);
    cyc.accelerations[j] = field.jacobian(cyc.samples[j]) * cyc.velocities[j];
  }
  cyc.anchor = anchor;
  cyc.normal = cyc.velocities[0].normalized();

  OdeState s = with_identity(anchor);
  integrate(var, s, 0.0, T, opt.ode);
  cyc.monodromy = tail_matrix(s, d);
  Eigen::EigenSolver<Mat> es(cyc.monodromy);
  for (int i = 0; i < d; ++i) cyc.multipliers.push_back(es.eigenvalues()[i]);

  // Left eigenvector at multiplier 1, normalized by Z . alpha' = 1.
  Eigen::EigenSolver<Mat> est(cyc.monodromy.transpose());
  int idx = 0;
  double bestd = std::numeric_limits<double>::infinity();
  for (int i = 0; i < d; ++i) {
    const double dd = std::abs(est.eigenvalues()[i] - 1.0);
    if (dd < bestd) {
      bestd = dd;
      idx = i;
    }
  }
  Vec z0 = est.eigenvectors().col(idx).real();
  z0 /= z0.dot(cyc.velocities[0]);

  // Backward adjoint Z' = -DG(alpha)^T Z along the interpolated cycle (stable backwards).
  const LimitCycle* cp = &cyc;
  OdeRhs adj = [cp, &field, d](const OdeState& zs, OdeState& dz, double t) {
    const Vec a = cp->state(t);
    double J[256];
    field.jacobian_into(a.data(), J);
    for (int i = 0; i < d; ++i) {
      double acc = 0.0;
      for (int l = 0; l < d; ++l) acc += J[l * d + i] * zs[l];
      dz[i] = -acc;
    }
  };
  // Two backward periods: the first washes out any error in z0.
  std::vector<double> back(M + 1);
  for (int j = 0; j <= M; ++j) back[j] = T - T * j / M;
  OdeState zs(z0.data(), z0.data() + d);
  integrate(adj, zs, 2.0 * T, T, opt.ode);
  cyc.prc.assign(M, Vec::Zero(d));
  integrate_times(adj, zs, back, [&](const OdeState& z, double t) {
    const int j = static_cast<int>(std::llround(t / T * M)) % M;
    cyc.prc[j] = head(z, d);
  }, opt.ode);
  // Renormalize pointwise against drift from interpolation error.
  cyc.prc_rates.resize(M);
  for (int j = 0; j < M; ++j) {
    cyc.prc[j] /= cyc.prc[j].dot(cyc.velocities[j]);
    cyc.prc_rates[j] = -field.jacobian(cyc.samples[j]).transpose() * cyc.prc[j];
  }
  return cyc;
}

Mat principal_matrix(const LimitCycle& cycle, const SmoothedField& field, double u, double t,
                     const OdeOptions& opt) {
  OdeState s = with_identity(cycle.state(u));
  integrate(field.variational_flow(), s, 0.0, t, opt);
  return tail_matrix(s, cycle.d);
}

IsochronMap::IsochronMap(std::shared_ptr<const LimitCycle> cycle,
                         std::shared_ptr<const SmoothedField> field, OdeOptions ode)
    : cycle_(std::move(cycle)), field_(std::move(field)), ode_(ode) {
  // Medial-axis proxy from a subsample of the cycle.
  const auto& c = *cycle_;
  const int M = c.size();
  const int stride = std::max(1, M / 256);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < M; i += stride)
    for (int j = i + stride; j < M; j += stride) {
      const int sep = std::min(j - i, M - (j - i));
      if (sep * 4 < M) continue;
      best = std::min(best, (c.samples[i] - c.samples[j]).norm());
    }
  tube_radius_ = 0.25 * best;  // half the distance to the medial-axis proxy
}

double IsochronMap::distance(const Vec& x) const {
  return (cycle_->samples[cycle_->nearest_sample(x)] - x).norm();
}

double IsochronMap::project_phase(const Vec& y) const {
  const auto& c = *cycle_;
  const int j = c.nearest_sample(y);
  double u = c.period * j / c.size();
  for (int it = 0; it < 20; ++it) {
    const Vec a = c.state(u);
    const Vec z = c.prc_at(u);
    const double g = z.dot(y - a);
    // g'(u) = Z'(u).(y - a) - Z(u).alpha'(u) = Z' . (y - a) - 1
    const double h = 1e-6 * c.period;
    const double dz = (c.prc_at(u + h) - c.prc_at(u - h)).dot(y - a) / (2 * h);
    const double step = g / (dz - 1.0);
    u -= step;
    if (std::abs(step) < 1e-14 * c.period) break;
  }
  return c.wrap(u);
}

double IsochronMap::phase(const Vec& x) const {
  const int d = cycle_->d;
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(x[i])) throw DomainError("isochron evaluated at a non-finite point");
  if (distance(x) > tube_radius_) {
    std::ostringstream os;
    os << "state at distance " << distance(x) << " lies outside the isochron tube (radius "
       << tube_radius_ << ")";
    throw OutOfBasinError(os.str());
  }
  // Plain flow: whole periods leave the asymptotic phase unchanged.
  OdeState s(x.data(), x.data() + d);
  const OdeRhs flow = field_->flow();
  for (int n = 1;; ++n) {
    integrate(flow, s, 0.0, cycle_->period, ode_);
    const Vec y = Eigen::Map<const Vec>(s.data(), d);
    const double u = project_phase(y);
    if ((cycle_->state(u) - y).norm() < 1e-7) return u;
    if (n >= 60) throw OutOfBasinError("trajectory did not settle on the cycle");
  }
}

Vec IsochronMap::gradient(const Vec& x) const { return evaluate(x, false).gradient; }

Mat IsochronMap::hessian(const Vec& x, double step) const {
  const int d = cycle_->d;
  Mat H(d, d);
  for (int k = 0; k < d; ++k) {
    Vec xp = x, xm = x;
    xp[k] += step;
    xm[k] -= step;
    H.col(k) = (gradient(xp) - gradient(xm)) / (2 * step);
  }
  return 0.5 * (H + H.transpose());
}

PhaseInfo IsochronMap::evaluate(const Vec& x, bool with_hessian) const {
  const int d = cycle_->d;
  for (int i = 0; i < d; ++i)
    if (!std::isfinite(x[i])) throw DomainError("isochron evaluated at a non-finite point");
  if (distance(x) > tube_radius_) {
    std::ostringstream os;
    os << "state at distance " << distance(x) << " lies outside the isochron tube (radius "
       << tube_radius_ << ")";
    throw OutOfBasinError(os.str());
  }
  const double T = cycle_->period;
  OdeState s = with_identity(x);
  const OdeRhs var = field_->variational_flow();
  int n = 0;
  Vec y;
  for (;;) {
    integrate(var, s, 0.0, T, ode_);
    ++n;
    y = head(s, d);
    const double u = project_phase(y);
    if ((cycle_->state(u) - y).norm() < 1e-7) break;
    if (n >= 60) throw OutOfBasinError("trajectory did not settle on the cycle");
  }
  PhaseInfo out;
  out.phase = project_phase(y);  // elapsed time n T is a multiple of the period
  out.gradient = tail_matrix(s, d).transpose() * cycle_->prc_at(out.phase);
  if (with_hessian) out.hessian = hessian(x);
  return out;
}

double IsochronMap::calibrate_tube(int probes) {
  const auto& c = *cycle_;
  const int d = c.d;
  for (int attempt = 0; attempt < 30; ++attempt) {
    bool good = true;
    for (int p = 0; p < probes && good; ++p) {
      const double u = c.period * (p + 0.5) / probes;
      Vec dir(d);
      for (int i = 0; i < d; ++i)
        dir[i] = std::cos(2.0 * std::numbers::pi * std::fmod((p + 1) * (0.618033988749895 + 0.1 * i), 1.0) + i);
      if (dir.norm() == 0.0) dir[0] = 1.0;
      dir.normalize();
      const Vec x = c.state(u) + 0.95 * tube_radius_ * dir;
      try {
        (void)phase(x);
      } catch (const OutOfBasinError&) {
        good = false;
      }
    }
    if (good) return tube_radius_;
    tube_radius_ *= 0.8;
  }
  throw OutOfBasinError("could not find an isochron tube in which all probes settle");
}

OracleCoefficients oracle_phase_coefficients(const IsochronMap& iso, const DiffusionModel& model,
                                             int samples) {
  if (!(model.delta() > 0.0)) throw ConfigError("oracle coefficients require delta > 0");
  const auto& c = iso.cycle();
  const int d = c.d;
  if (samples < 4) throw ConfigError("oracle needs at least 4 cycle samples");
  double sg = 0.0, sh = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double u = c.period * j / samples;
    const Vec a = c.state(u);
    const Vec z = c.prc_at(u);
    const Mat H = iso.hessian(a);
    if (!H.allFinite()) throw DomainError("isochron Hessian unavailable on the cycle");
    for (int k = 0; k < d; ++k) {
      const double s2 = model.sigma()[k] * model.sigma()[k];
      sg += s2 * z[k] * z[k];
      sh += s2 * H(k, k);
    }
  }
  OracleCoefficients o;
  o.samples = samples;
  o.mean_sigma_gradient = sg / samples;
  o.mean_sigma_hessian = sh / samples;
  const double delta = model.delta();
  o.b_fd = o.mean_sigma_hessian / delta;
  o.a2_fd = 2.0 * o.mean_sigma_gradient / (delta * delta);
  return o;
}

}  // namespace mfp
