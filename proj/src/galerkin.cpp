#include "mfphase/galerkin.hpp"

#include "mfphase/errors.hpp"
#include "mfphase/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mfp {

namespace {
const double kSqrt2Pi = std::sqrt(2.0 * std::numbers::pi);
}

GalerkinSolver::GalerkinSolver(const DiffusionModel& model, GalerkinOptions opt)
    : model_(model), opt_(opt), basis_(model, 1.0, 0.0, opt.L) {
  if (opt_.L < 1) throw ConfigError("numerics.L must be >= 1");
  if (!(opt_.dt > 0.0)) throw ConfigError("numerics.galerkin_dt must be positive");
  if (opt_.finite_N && !(opt_.N >= 1.0)) throw ConfigError("finite-N generator needs N >= 1");
  Q_ = opt_.Q > 0 ? opt_.Q : 2 * opt_.L;
  if (Q_ < opt_.L + 1) throw ConfigError("galerkin grid order must be >= L + 1");
  const int d = model.dimension(), L = opt_.L;
  const GaussHermiteRule g = gauss_hermite(Q_);
  nodes_ = g.nodes;
  eval_.resize(d);
  proj_.resize(d);
  std::vector<double> h(L + 1);
  for (int i = 0; i < d; ++i) {
    const double s = basis_.scale(i);
    eval_[i].resize(Q_, L + 1);
    proj_[i].resize(L + 1, Q_);
    for (int q = 0; q < Q_; ++q) {
      hermite_functions(g.nodes[q], L, h.data());
      for (int l = 0; l <= L; ++l) {
        eval_[i](q, l) = std::sqrt(s) * h[l];
        proj_[i](l, q) = std::sqrt(s) * h[l] * kSqrt2Pi / s * g.weights[q];
      }
    }
  }
  lambda_.resize(basis_.size());
  for (std::size_t f = 0; f < basis_.size(); ++f) lambda_[f] = basis_.lambda(f);
  psi0_ = 1.0;
  for (int i = 0; i < d; ++i) psi0_ *= std::sqrt(basis_.scale(i)) * std::pow(2.0 * std::numbers::pi, -0.25);
}

SpectralState GalerkinSolver::gaussian_state(const Vec& m) const {
  if (m.size() != model_.dimension()) throw ConfigError("mean has wrong dimension");
  SpectralState s;
  s.c.assign(basis_.size(), 0.0);
  s.c[0] = psi0_;
  s.m = m;
  return s;
}

SpectralState GalerkinSolver::mode_state(const std::vector<int>& l, double amplitude, const Vec& m) const {
  SpectralState s = gaussian_state(m);
  s.c[basis_.flat_index(l)] += amplitude;
  return s;
}

SpectralState GalerkinSolver::project_density(const std::function<double(const double*)>& p,
                                              const Vec& m) const {
  SpectralState s;
  s.m = m;
  auto ratio = [&](const double* x) {
    const double v = p(x);
    return v == 0.0 ? 0.0 : v / basis_.weight(x);
  };
  s.c = l2_coefficients(basis_, ratio, Q_);
  return s;
}

void GalerkinSolver::transport(const std::vector<double>& c, const Vec& m, std::vector<double>& dc,
                               Vec& dm) const {
  const int d = model_.dimension(), L = opt_.L;
  const double delta = model_.delta();
  dc.assign(basis_.size(), 0.0);
  dm = Vec::Zero(d);
  if (opt_.finite_N) {
    // -(1/N) div(sigma^2 grad p): couples l to l - 2 e_k.
    for (std::size_t f = 0; f < basis_.size(); ++f) {
      auto l = basis_.multi_index(f);
      for (int k = 0; k < d; ++k) {
        if (l[k] < 2) continue;
        auto lm = l;
        lm[k] -= 2;
        dc[f] -= model_.k()[k] * std::sqrt(static_cast<double>(l[k]) * (l[k] - 1)) *
                 c[basis_.flat_index(lm)] / opt_.N;
      }
    }
  }
  if (delta == 0.0) return;

  Tensor C;
  C.dims.assign(d, L + 1);
  C.data = c;
  const Tensor P = apply_all_axes(C, eval_);  // p / w_1 at the grid
  const std::size_t n = P.data.size();
  std::vector<double> F(n * d);
  std::vector<int> idx(d, 0);
  double x[16];
  for (std::size_t q = 0; q < n; ++q) {
    for (int i = 0; i < d; ++i) x[i] = nodes_[idx[i]] / basis_.scale(i) + m[i];
    model_.field_into(x, F.data() + q * d);
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < Q_) break;
      idx[i] = 0;
    }
  }
  // <p, F_m>: project P * F_k and read the l = 0 coefficient divided by psi_0.
  std::vector<Mat> proj0(d);
  for (int i = 0; i < d; ++i) proj0[i] = proj_[i].row(0);
  Tensor G;
  G.dims.assign(d, Q_);
  G.data.resize(n);
  std::vector<double> mean_f(d);
  for (int k = 0; k < d; ++k) {
    for (std::size_t q = 0; q < n; ++q) G.data[q] = P.data[q] * F[q * d + k];
    mean_f[k] = apply_all_axes(G, proj0).data[0] / psi0_;
  }
  for (int k = 0; k < d; ++k) {
    dm[k] = delta * mean_f[k];
    // <p, V_k psi_l> with V_k = F_k(. + m) - <p, F_k(. + m)>.
    for (std::size_t q = 0; q < n; ++q) G.data[q] = P.data[q] * (F[q * d + k] - mean_f[k]);
    const Tensor T = apply_all_axes(G, proj_);
    const double sk = basis_.scale(k);
    for (std::size_t f = 0; f < basis_.size(); ++f) {
      auto l = basis_.multi_index(f);
      if (l[k] == 0) continue;
      auto lm = l;
      lm[k] -= 1;
      dc[f] += delta * sk * std::sqrt(static_cast<double>(l[k])) * T.data[basis_.flat_index(lm)];
    }
  }
}

void GalerkinSolver::derivative(const SpectralState& s, std::vector<double>& dc, Vec& dm) const {
  transport(s.c, s.m, dc, dm);
  for (std::size_t f = 0; f < basis_.size(); ++f) dc[f] -= lambda_[f] * s.c[f];
}

void GalerkinSolver::step(SpectralState& s, double h) const {
  const std::size_t n = basis_.size();
  std::vector<double> d1, d2, E(n);
  Vec m1, m2;
  for (std::size_t f = 0; f < n; ++f) E[f] = std::exp(-lambda_[f] * h);
  transport(s.c, s.m, d1, m1);
  std::vector<double> ct(n);
  for (std::size_t f = 0; f < n; ++f) ct[f] = E[f] * (s.c[f] + h * d1[f]);
  const Vec mt = s.m + h * m1;
  transport(ct, mt, d2, m2);
  for (std::size_t f = 0; f < n; ++f) s.c[f] = E[f] * (s.c[f] + 0.5 * h * d1[f]) + 0.5 * h * d2[f];
  s.m += 0.5 * h * (m1 + m2);
  s.t += h;
  bool finite = s.m.allFinite();
  for (double v : s.c) finite = finite && std::isfinite(v);
  if (!finite) throw IntegrationError("non-finite spectral state", static_cast<long long>(s.t / h));
}

void GalerkinSolver::evolve(SpectralState& s, double horizon,
                            const std::function<void(const SpectralState&)>& observer) const {
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be >= 0");
  const long long n = static_cast<long long>(std::ceil(horizon / opt_.dt - 1e-9));
  const double t_end = s.t + horizon;
  for (long long k = 0; k < n; ++k) {
    const double h = std::min(opt_.dt, t_end - s.t);
    if (h <= 0.0) break;
    step(s, h);
    if (k % 200 == 199) check_resolution(s);
    if (observer) observer(s);
  }
  s.t = t_end;
}

double GalerkinSolver::mass(const SpectralState& s) const { return s.c[0] / psi0_; }

Vec GalerkinSolver::mean(const SpectralState& s) const {
  // x_i = h_1(s_i x_i) / (s_i h_0) and psi_{e_i} = psi_0 h_1 / h_0 => <p, x_i> = c_{e_i} / (s_i * psi_0) ... scaled below
  const int d = model_.dimension();
  Vec out(d);
  for (int i = 0; i < d; ++i) {
    std::vector<int> l(d, 0);
    l[i] = 1;
    // psi_{e_i}(x) = psi_0 * s_i x_i, so <p, x_i> = c_{e_i} / (psi_0 s_i).
    out[i] = s.c[basis_.flat_index(l)] / (psi0_ * basis_.scale(i));
  }
  return out;
}

double GalerkinSolver::second_moment(const SpectralState& s, int i) const {
  const int d = model_.dimension();
  if (opt_.L < 2) throw RangeError("second moment needs L >= 2");
  std::vector<int> l(d, 0);
  l[i] = 2;
  // y^2 = sqrt(2) He_2/sqrt(2) + 1: psi_{2e_i} = psi_0 (y^2 - 1)/sqrt(2), y = s_i x_i.
  const double c2 = s.c[basis_.flat_index(l)];
  const double y2 = (std::sqrt(2.0) * c2 + s.c[0]) / psi0_;
  return y2 / (basis_.scale(i) * basis_.scale(i));
}

double GalerkinSolver::top_shell_fraction(const SpectralState& s) const {
  double top = 0.0, all = 0.0;
  for (std::size_t f = 0; f < basis_.size(); ++f) {
    const double e = s.c[f] * s.c[f];
    all += e;
    if (basis_.shell(f) == opt_.L) top += e;
  }
  return all == 0.0 ? 0.0 : top / all;
}

void GalerkinSolver::check_resolution(const SpectralState& s) const {
  const double frac = top_shell_fraction(s);
  if (frac > opt_.aliasing_threshold) {
    std::ostringstream os;
    os << "spectral resolution exhausted: top shell holds " << frac << " of the energy at L=" << opt_.L;
    throw ResolutionError(os.str());
  }
}

double GalerkinSolver::density(const SpectralState& s, const double* x) const {
  std::vector<double> v(basis_.size());
  basis_.eval_all(x, v.data(), 1.0);
  double acc = 0.0;
  for (std::size_t f = 0; f < v.size(); ++f) acc += s.c[f] * v[f];
  return acc;
}

double GalerkinSolver::min_density(const SpectralState& s, int n, double extent) const {
  const int d = model_.dimension();
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  double best = std::numeric_limits<double>::infinity();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  for (std::size_t q = 0; q < total; ++q) {
    for (int i = 0; i < d; ++i) {
      const double sd = std::sqrt(model_.gamma_ratio(i));
      x[i] = (n == 1 ? 0.0 : -extent + 2.0 * extent * idx[i] / (n - 1)) * sd;
    }
    best = std::min(best, density(s, x.data()));
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return best;
}

double state_distance(const GalerkinSolver& solver, const SpectralState& a, const SpectralState& b,
                      double theta, double r) {
  const HermiteBasis& from = solver.basis();
  const HermiteBasis to(from.k(), from.sigma(), theta, r, from.truncation());
  std::vector<double> diff(a.c.size());
  for (std::size_t f = 0; f < diff.size(); ++f) diff[f] = a.c[f] - b.c[f];
  const DualVector v = dual_from_pairings(to, transfer_density(from, diff, to));
  return std::sqrt(v.norm_squared + (a.m - b.m).squaredNorm());
}

double flow_to_section(const GalerkinSolver& solver, SpectralState& s, const Vec& anchor,
                       const Vec& normal, double min_time, double max_time) {
  const double h = solver.options().dt;
  const double t0 = s.t;
  auto g = [&](const SpectralState& x) { return (x.m - anchor).dot(normal); };
  double g_prev = g(s);
  long long k = 0;
  while (s.t - t0 < max_time) {
    const SpectralState prev = s;
    solver.step(s, h);
    if (++k % 200 == 0) solver.check_resolution(s);
    const double g_cur = g(s);
    if (s.t - t0 > min_time && g_prev < 0.0 && g_cur >= 0.0) {
      // Illinois regula falsi on the fractional step length.
      double a = 0.0, b = h, fa = g_prev, fb = g_cur;
      int side = 0;
      SpectralState trial = s;
      for (int it = 0; it < 80 && b - a > 1e-14 * h; ++it) {
        const double c = (a * fb - b * fa) / (fb - fa);
        trial = prev;
        solver.step(trial, c);
        const double fc = g(trial);
        if (fc == 0.0) {
          a = b = c;
          break;
        }
        if ((fc < 0.0) == (fa < 0.0)) {
          a = c;
          fa = fc;
          if (side == -1) fb *= 0.5;
          side = -1;
        } else {
          b = c;
          fb = fc;
          if (side == 1) fa *= 0.5;
          side = 1;
        }
      }
      const double tau = 0.5 * (a + b);
      s = prev;
      solver.step(s, tau);
      return s.t - t0;
    }
    g_prev = g_cur;
  }
  throw ConvergenceError("mean path did not return to the Poincare section", {});
}

PeriodicSolutionArtifact find_periodic_solution(const GalerkinSolver& solver, const LimitCycle& hint,
                                                const PicardOptions& opt) {
  const double delta = solver.model().delta();
  if (!(delta > 0.0)) throw ConfigError("periodic solution requires delta > 0");
  if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  PeriodicSolutionArtifact art;
  art.delta = delta;
  art.L = solver.options().L;
  art.theta = opt.theta;
  art.r = opt.r;
  art.anchor = hint.anchor;
  art.normal = hint.normal;
  art.reduced_period = hint.period;
  const double T_guess = hint.period / delta;

  SpectralState x = solver.gaussian_state(hint.anchor);
  double beta = opt.damping;
  double T = T_guess;
  double prev_res = -1.0;
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    SpectralState y = x;
    y.t = 0.0;
    T = flow_to_section(solver, y, art.anchor, art.normal, 0.5 * T_guess, 2.0 * T_guess);
    y.t = 0.0;
    x.t = 0.0;
    const double res = state_distance(solver, y, x, opt.theta, opt.r);
    art.residual_history.push_back(res);
    if (res <= opt.tolerance) {
      converged = true;
      art.residual = res;
      x = y;  // one more application keeps the reported state on the computed orbit
      break;
    }
    if (opt.adaptive_damping && prev_res > 0.0 && beta < 1.0) {
      // Observed ratio (1 - beta) + beta * lambda; undamped once lambda <= 0.25.
      const double lam = (res / prev_res - (1.0 - beta)) / beta;
      if (lam <= 0.25) beta = 1.0;
    }
    prev_res = res;
    for (std::size_t f = 0; f < x.c.size(); ++f) x.c[f] += beta * (y.c[f] - x.c[f]);
    x.m += beta * (y.m - x.m);
  }
  if (!converged)
    throw ConvergenceError("Picard iteration for the periodic solution did not converge (possible "
                           "bifurcation or under-resolution)", art.residual_history);
  art.period = T;

  // Snapshots at j T / M from fractional steps off the fixed-dt trajectory.
  const int M = opt.snapshots;
  const double h = solver.options().dt;
  SpectralState cur = x;
  cur.t = 0.0;
  art.snapshots.clear();
  for (int j = 0; j < M; ++j) {
    const double tj = T * j / M;
    while (cur.t + h <= tj + 1e-12) solver.step(cur, h);
    SpectralState snap = cur;
    if (tj - cur.t > 0.0) solver.step(snap, tj - cur.t);
    snap.t = tj;
    art.snapshots.push_back(snap);
    art.gamma.push_back(snap.m);
  }
  double worst = 0.0;
  for (const Vec& gm : art.gamma) {
    const int j = hint.nearest_sample(gm);
    double best = std::numeric_limits<double>::infinity();
    const double hs = hint.period / hint.size();
    for (int k = -20; k <= 20; ++k) best = std::min(best, (hint.state(hs * (j + k / 10.0)) - gm).norm());
    worst = std::max(worst, best);
  }
  art.max_distance_to_reduced = worst;
  return art;
}

SpectralState periodic_state_at(const GalerkinSolver& solver, const PeriodicSolutionArtifact& art,
                                double t) {
  const double T = art.period;
  double u = std::fmod(t, T);
  if (u < 0) u += T;
  const int M = static_cast<int>(art.snapshots.size());
  int j = static_cast<int>(std::floor(u / T * M));
  j = std::clamp(j, 0, M - 1);
  SpectralState s = art.snapshots[j];
  const double h = solver.options().dt;
  double remaining = u - s.t;
  while (remaining > 1e-12) {
    const double step = std::min(h, remaining);
    solver.step(s, step);
    remaining -= step;
  }
  s.t = u;
  return s;
}

}  // namespace mfp
