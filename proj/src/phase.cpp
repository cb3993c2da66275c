#include "mfphase/phase.hpp"

#include "mfphase/errors.hpp"
#include "mfphase/rng.hpp"

#include <boost/math/interpolators/makima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfp {

namespace {

double wrap_to(double x, double T) {
  double r = std::fmod(x, T);
  if (r < 0.0) r += T;
  return r;
}

// Into (-T/2, T/2].
double centered(double x, double T) {
  double r = wrap_to(x, T);
  if (r > 0.5 * T) r -= T;
  return r;
}

}  // namespace

PhaseExtractor::PhaseExtractor(std::shared_ptr<const IsochronMap> iso, const PeriodicSolutionArtifact& art)
    : iso_(std::move(iso)), T_(art.period), Ta_(iso_->cycle().period) {
  const int M = static_cast<int>(art.gamma.size());
  if (M < 4) throw ConfigError("periodic solution artifact needs >= 4 snapshots");
  if (!(T_ > 0.0)) throw ConfigError("periodic solution artifact has no period");
  std::vector<double> u(M), t(M);
  for (int j = 0; j < M; ++j) {
    u[j] = iso_->phase(art.gamma[j]);
    t[j] = art.snapshots[j].t;
    if (j > 0) {
      u[j] = u[j - 1] + wrap_to(u[j] - u[j - 1], Ta_);
      if (!(u[j] > u[j - 1]))
        throw ConvergenceError("phase calibration along the periodic solution is not monotone", {});
    }
  }
  if (u[M - 1] - u[0] >= Ta_) throw ConvergenceError("phase calibration wraps more than once", {});
  u_origin_ = u[0];
  // Periodic extension by 3 knots on each side.
  const int pad = 3;
  std::vector<double> ku, kr;
  for (int j = -pad; j < M + pad; ++j) {
    const int q = ((j % M) + M) % M;
    const double shift = std::floor(static_cast<double>(j) / M);
    const double uj = u[q] + shift * Ta_;
    const double tj = t[q] + shift * T_;
    ku.push_back(uj);
    kr.push_back(tj - uj * T_ / Ta_);
  }
  auto spline = std::make_shared<boost::math::interpolators::makima<std::vector<double>>>(
      std::move(ku), std::move(kr));
  residual_ = [spline](double x) { return (*spline)(x); };
}

double PhaseExtractor::reduced_phase(const Vec& m) const { return iso_->phase(m); }

double PhaseExtractor::clock(double u) const {
  const double uu = u_origin_ + wrap_to(u - u_origin_, Ta_);
  return wrap_to(residual_(uu) + uu * T_ / Ta_, T_);
}

double PhaseExtractor::extract(const Vec& m) const { return clock(reduced_phase(m)); }

PhaseTrace dephasing_trace(const std::vector<PhaseObservation>& obs, const PhaseExtractor& ex, int N,
                           int replica, int report_every) {
  if (N < 1) throw ConfigError("trace needs N >= 1");
  if (report_every < 1) throw ConfigError("report_every must be >= 1");
  PhaseTrace tr;
  tr.N = N;
  tr.replica = replica;
  if (obs.empty()) return tr;
  const double T = ex.period();
  const double t0 = obs.front().wall_time;
  auto flag = [&](const char* why) {
    if (!tr.flagged) {
      tr.flagged = true;
      tr.flag = why;
    }
  };
  bool have_origin = false;
  double prev = 0.0;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const auto& o = obs[k];
    const double t = (o.wall_time - t0) / N;
    const bool reported = k % static_cast<std::size_t>(report_every) == 0;
    double phase;
    try {
      phase = ex.extract(o.m);
    } catch (const OutOfBasinError&) {
      tr.gap_times.push_back(t);
      if (reported || !have_origin) flag("gap");
      continue;
    }
    if (!have_origin) {
      tr.u0 = phase;
      have_origin = true;
    }
    const double raw = centered(phase - tr.u0 - (o.wall_time - t0), T);
    const double v = k == 0 ? 0.0 : prev + centered(raw - prev, T);
    if (std::abs(v - prev) >= 0.25 * T) flag("unwrap");
    prev = v;
    if (reported) {
      tr.times.push_back(t);
      tr.v.push_back(v);
    }
  }
  return tr;
}

namespace {

struct Moments {
  std::vector<double> mean, var;
};

Moments across(const std::vector<const PhaseTrace*>& tr, const std::vector<int>& idx) {
  const std::size_t K = tr.front()->v.size();
  const double n = static_cast<double>(idx.size());
  Moments m;
  m.mean.assign(K, 0.0);
  m.var.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double s = 0.0;
    for (int i : idx) s += tr[i]->v[k];
    const double mu = s / n;
    double q = 0.0;
    for (int i : idx) q += (tr[i]->v[k] - mu) * (tr[i]->v[k] - mu);
    m.mean[k] = mu;
    m.var[k] = q / (n - 1.0);
  }
  return m;
}

}  // namespace

DiffusionEstimate estimate_coefficients(const std::vector<PhaseTrace>& traces, int resamples,
                                        std::uint64_t seed, int min_replicas) {
  std::vector<const PhaseTrace*> use;
  int flagged = 0;
  for (const auto& t : traces) {
    if (t.flagged)
      ++flagged;
    else
      use.push_back(&t);
  }
  const int R = static_cast<int>(use.size());
  if (R < std::max(2, min_replicas)) {
    std::ostringstream os;
    os << "insufficient unflagged replicas: " << R << " usable, " << flagged << " flagged, "
       << min_replicas << " required";
    throw StatisticsError(os.str());
  }
  const std::vector<double>& times = use.front()->times;
  if (times.size() < 3) throw StatisticsError("traces need >= 3 observation times");
  for (const auto* t : use)
    if (t->times != times) throw StatisticsError("traces are on different observation grids");
  if (resamples < 1) throw ConfigError("bootstrap resamples must be >= 1");

  DiffusionEstimate est;
  est.replicas = R;
  est.flagged = flagged;
  est.resamples = resamples;
  est.times = times;
  std::vector<int> all(R);
  for (int i = 0; i < R; ++i) all[i] = i;
  const Moments mo = across(use, all);
  est.mean_v = mo.mean;
  est.var_v = mo.var;
  const LinearFit fm = linear_fit(times, mo.mean);
  const LinearFit fv = linear_fit(times, mo.var);
  est.b_hat = fm.slope;
  est.a2_hat = fv.slope;
  est.a2_sd_hat = std::sqrt(std::max(0.0, fv.slope));
  est.r2_mean = fm.r2;
  est.r2_variance = fv.r2;
  est.diagnostics_ok = fv.r2 >= 0.9;

  std::vector<double> bs(resamples), as(resamples);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < resamples; ++r) {
    const Moments b = across(use, bootstrap_indices(seed, r, R));
    bs[r] = linear_fit(times, b.mean).slope;
    as[r] = linear_fit(times, b.var).slope;
  }
  est.b_ci = {quantile(bs, 0.025), quantile(bs, 0.975)};
  est.a2_ci = {quantile(as, 0.025), quantile(as, 0.975)};
  est.a2_sd_ci = {std::sqrt(std::max(0.0, est.a2_ci.lo)), std::sqrt(std::max(0.0, est.a2_ci.hi))};
  std::vector<double> last(R);
  for (int i = 0; i < R; ++i) last[i] = use[i]->v.back();
  est.final_normality = jarque_bera(last);
  return est;
}

std::vector<PhaseTrace> synthetic_traces(double b, double c, const std::vector<double>& times,
                                         int replicas, std::uint64_t seed) {
  if (c < 0.0) throw ConfigError("synthetic variance slope must be >= 0");
  const NormalStream z(seed, rng_domain::synthetic);
  std::vector<PhaseTrace> out(replicas);
  for (int r = 0; r < replicas; ++r) {
    PhaseTrace& tr = out[r];
    tr.replica = r;
    tr.times = times;
    tr.v.resize(times.size());
    double w = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (k > 0) {
        double z0, z1;
        z.pair(static_cast<std::uint32_t>(r), k, 0, z0, z1);
        w += std::sqrt(times[k] - times[k - 1]) * z0;
      }
      tr.v[k] = b * times[k] + std::sqrt(c) * w;
    }
    tr.v[0] = 0.0;
  }
  return out;
}

std::uint64_t replica_seed(std::uint64_t seed, int N, int replica) {
  std::uint64_t z = seed ^ (static_cast<std::uint64_t>(N) << 32) ^ static_cast<std::uint64_t>(replica);
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

PhaseTrace simulate_dephasing(const DiffusionModel& model, const PhaseExtractor& ex, const Vec& m0,
                              int N, int replica, const DephasingRunOptions& opt) {
  if (opt.observations < 2) throw ConfigError("experiment.observations must be >= 2");
  const double wall = N * opt.t_f;
  const double report = wall / opt.observations;
  const long long report_steps = std::llround(report / opt.dt);
  if (report_steps < 1 || std::abs(report_steps * opt.dt - report) > 1e-9 * std::max(1.0, report))
    throw ConfigError("observation interval N t_f / observations must be a multiple of dt");
  long long per = std::max(1LL, std::llround(report / opt.extraction_stride));
  while (report_steps % per != 0) --per;  // extraction grid must contain the report grid
  const long long stride = report_steps / per;
  ParticleEnsemble ens = make_ensemble(model, N, opt.dt, replica_seed(opt.seed, N, replica),
                                       std::vector<double>(m0.data(), m0.data() + m0.size()),
                                       InitialLaw::gaussian, opt.scheme);
  std::vector<PhaseObservation> obs;
  obs.reserve(static_cast<std::size_t>(per * opt.observations + 1));
  run(ens, model, wall,
      {Observer{stride, [&](const ParticleEnsemble& e) {
                  obs.push_back({e.t, Eigen::Map<const Vec>(e.m.data(), e.d)});
                }}});
  return dephasing_trace(obs, ex, N, replica, static_cast<int>(per));
}

PeriodicOrbitTable::PeriodicOrbitTable(std::shared_ptr<const GalerkinSolver> solver,
                                       const PeriodicSolutionArtifact& art, int entries)
    : solver_(std::move(solver)), T_(art.period) {
  if (entries < 1) throw ConfigError("orbit table needs >= 1 entry");
  if (art.snapshots.empty()) throw ConfigError("periodic solution artifact has no snapshots");
  const double h = solver_->options().dt;
  SpectralState cur = art.snapshots.front();
  cur.t = 0.0;
  table_.reserve(entries);
  for (int j = 0; j < entries; ++j) {
    const double tj = T_ * j / entries;
    while (cur.t + h <= tj + 1e-12) solver_->step(cur, h);
    SpectralState snap = cur;
    if (tj - cur.t > 0.0) solver_->step(snap, tj - cur.t);
    snap.t = tj;
    table_.push_back(std::move(snap));
  }
}

SpectralState PeriodicOrbitTable::at(double t) const {
  const double u = wrap_to(t, T_);
  const int K = static_cast<int>(table_.size());
  const int j = std::clamp(static_cast<int>(std::floor(u / T_ * K)), 0, K - 1);
  SpectralState s = table_[j];
  const double h = solver_->options().dt;
  double remaining = u - s.t;
  while (remaining > 1e-12) {
    const double step = std::min(h, remaining);
    solver_->step(s, step);
    remaining -= step;
  }
  s.t = u;
  return s;
}

double proximity_distance(const ParticleEnsemble& ens, const PhaseExtractor& ex,
                          const PeriodicOrbitTable& orbit, const HermiteBasis& basis) {
  Vec m = Eigen::Map<const Vec>(ens.m.data(), ens.d);
  const SpectralState q = orbit.at(ex.extract(m));
  const DualVector emp = dual_coefficients(basis, empirical_measure(ens.Y, ens.d));
  const DualVector ref = dual_from_pairings(basis, transfer_density(orbit.solver().basis(), q.c, basis));
  const double dn = dual_norm(subtract(basis, emp, ref));
  return std::sqrt(dn * dn + (m - q.m).squaredNorm());
}

ProximityAudit::ProximityAudit(const PhaseExtractor& ex, const PeriodicOrbitTable& orbit,
                               HermiteBasis basis)
    : ex_(ex), orbit_(orbit), basis_(std::move(basis)) {}

void ProximityAudit::observe(const ParticleEnsemble& ens) {
  rep_.N = ens.N;
  rep_.times.push_back(ens.t / ens.N);
  try {
    rep_.distances.push_back(proximity_distance(ens, ex_, orbit_, basis_));
  } catch (const OutOfBasinError&) {
    rep_.distances.push_back(std::numeric_limits<double>::quiet_NaN());
    ++rep_.gaps;
  } catch (const TruncationError&) {
    rep_.distances.push_back(std::numeric_limits<double>::quiet_NaN());
    ++rep_.unresolved;
  }
}

ProximityReport ProximityAudit::report() const {
  ProximityReport r = rep_;
  int covered = 0;
  r.sup = 0.0;
  for (double d : r.distances) {
    if (std::isnan(d)) continue;
    ++covered;
    r.sup = std::max(r.sup, d);
  }
  r.coverage = r.distances.empty() ? 0.0 : static_cast<double>(covered) / r.distances.size();
  return r;
}

LinearFit proximity_slope(const std::vector<double>& Ns, const std::vector<double>& sups) {
  if (Ns.size() != sups.size()) throw StatisticsError("proximity slope: size mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (!(Ns[i] > 0.0 && sups[i] > 0.0)) throw StatisticsError("proximity slope needs positive values");
    x.push_back(std::log(Ns[i]));
    y.push_back(std::log(sups[i]));
  }
  return linear_fit(x, y);
}

}  // namespace mfp
