#include "mfphase/particle.hpp"

#include "mfphase/errors.hpp"
#include "mfphase/reduce.hpp"

#include <algorithm>
#include <cmath>

namespace mfp {

std::string to_string(Scheme s) {
  return s == Scheme::exponential ? "exponential" : "euler-maruyama";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "euler-maruyama") return Scheme::euler_maruyama;
  if (name == "exponential") return Scheme::exponential;
  throw ConfigError("unknown scheme '" + name + "'");
}

std::vector<double> ParticleEnsemble::positions() const {
  std::vector<double> x(Y);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(i) * d + j] += m[j];
  return x;
}

StepCoefficients step_coefficients(Scheme scheme, double k, double sigma, double dt) {
  if (scheme == Scheme::euler_maruyama) return {1.0 - k * dt, dt, std::sqrt(2.0 * dt) * sigma};
  const double e = std::exp(-k * dt);
  return {e, -std::expm1(-k * dt) / k, sigma * std::sqrt(-std::expm1(-2.0 * k * dt) / k)};
}

ParticleEnsemble make_ensemble(const DiffusionModel& model, int N, double dt, std::uint64_t seed,
                               const std::vector<double>& m0, InitialLaw law, Scheme scheme,
                               std::uint32_t noise_domain) {
  const int d = model.dimension();
  if (N < 1) throw ConfigError("particle count must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (static_cast<int>(m0.size()) != d) throw ConfigError("initial mean has wrong dimension");
  ParticleEnsemble e;
  e.N = N;
  e.d = d;
  e.dt = dt;
  e.scheme = scheme;
  e.m = m0;
  e.noise = NormalStream(seed, noise_domain);
  e.Y.assign(static_cast<std::size_t>(N) * d, 0.0);
  if (law == InitialLaw::gaussian) {
    const NormalStream init(seed, rng_domain::initial ^ (noise_domain << 8));
    std::vector<double> sd(d);
    for (int j = 0; j < d; ++j) sd[j] = std::sqrt(model.gamma_ratio(j));
    for (int i = 0; i < N; ++i) {
      // Auxiliary stream id N, one "step" per particle.
      init.fill(static_cast<std::uint32_t>(N), static_cast<std::uint64_t>(i), e.particle(i), d);
      for (int j = 0; j < d; ++j) e.particle(i)[j] *= sd[j];
    }
    for (int j = 0; j < d; ++j) {
      const double mean = pairwise_mean(e.Y.data() + j, N, d);
      for (int i = 0; i < N; ++i) e.particle(i)[j] -= mean;
    }
  }
  return e;
}

namespace {

struct Scratch {
  std::vector<double> F, xi;
};

thread_local Scratch scratch;

template <bool Parallel>
void step_impl(ParticleEnsemble& ens, const DiffusionModel& model) {
  const int N = ens.N, d = ens.d;
  if (d != model.dimension()) throw ConfigError("ensemble and model dimensions differ");
  const std::size_t n = static_cast<std::size_t>(N) * d;
  auto& F = scratch.F;
  auto& xi = scratch.xi;
  F.resize(n);
  xi.resize(n);
  const double* m = ens.m.data();
  double* Y = ens.Y.data();
  const std::uint64_t s = static_cast<std::uint64_t>(ens.step);
  const NormalStream& noise = ens.noise;

  // Phase 1: field values and noise draws.
#pragma omp parallel for schedule(static, 64) if (Parallel)
  for (int i = 0; i < N; ++i) {
    double x[16];
    const double* y = Y + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) x[j] = y[j] + m[j];
    model.field_into(x, F.data() + static_cast<std::size_t>(i) * d);
    noise.fill(static_cast<std::uint32_t>(i), s, xi.data() + static_cast<std::size_t>(i) * d, d);
  }

  double Fbar[16], xibar[16];
  StepCoefficients co[16];
  const double delta = model.delta();
  for (int j = 0; j < d; ++j) {
    Fbar[j] = pairwise_mean(F.data() + j, N, d);
    xibar[j] = pairwise_mean(xi.data() + j, N, d);
    co[j] = step_coefficients(ens.scheme, model.k()[j], model.sigma()[j], ens.dt);
  }

  // Phase 2: apply increments.
#pragma omp parallel for schedule(static, 64) if (Parallel)
  for (int i = 0; i < N; ++i) {
    double* y = Y + static_cast<std::size_t>(i) * d;
    const double* f = F.data() + static_cast<std::size_t>(i) * d;
    const double* z = xi.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j)
      y[j] = co[j].a * y[j] + co[j].b * delta * (f[j] - Fbar[j]) + co[j].c * (z[j] - xibar[j]);
  }

  // Phase 3: exact recentering.
  double Ybar[16];
  for (int j = 0; j < d; ++j) Ybar[j] = pairwise_mean(Y + j, N, d);
#pragma omp parallel for schedule(static, 64) if (Parallel)
  for (int i = 0; i < N; ++i) {
    double* y = Y + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) y[j] -= Ybar[j];
  }

  bool finite = true;
  for (int j = 0; j < d; ++j) {
    const double sq = std::sqrt(2.0 * ens.dt) * model.sigma()[j];
    ens.m[j] += ens.dt * delta * Fbar[j] + sq * xibar[j];
    finite = finite && std::isfinite(ens.m[j]) && std::isfinite(Ybar[j]);
  }
  ++ens.step;
  ens.t = static_cast<double>(ens.step) * ens.dt;
  // Any non-finite particle contaminates the means, so this check is exhaustive.
  if (!finite) throw IntegrationError("non-finite particle state", ens.step);
}

}  // namespace

void step(ParticleEnsemble& ens, const DiffusionModel& model) {
  if (ens.d > 16) throw ConfigError("particle kernel supports dimension <= 16");
  step_impl<true>(ens, model);
}

void step_serial(ParticleEnsemble& ens, const DiffusionModel& model) {
  if (ens.d > 16) throw ConfigError("particle kernel supports dimension <= 16");
  step_impl<false>(ens, model);
}

double recentering_residual(const ParticleEnsemble& ens) {
  double s = 0.0;
  for (int j = 0; j < ens.d; ++j) {
    const double mj = pairwise_mean(ens.Y.data() + j, ens.N, ens.d);
    s += mj * mj;
  }
  return std::sqrt(s);
}

double max_abs_particle(const ParticleEnsemble& ens) {
  double best = 0.0;
  for (int i = 0; i < ens.N; ++i) {
    double s = 0.0;
    for (int j = 0; j < ens.d; ++j) s += ens.particle(i)[j] * ens.particle(i)[j];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

RunSummary run(ParticleEnsemble& ens, const DiffusionModel& model, double horizon,
               const std::vector<Observer>& observers) {
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be >= 0");
  const double ratio = horizon / ens.dt;
  const long long steps = std::llround(ratio);
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-6 * std::max(1.0, ratio))
    throw ConfigError("horizon must be a multiple of dt");
  for (const auto& o : observers)
    if (o.stride < 1) throw ConfigError("observer stride must be >= 1");
  RunSummary out;
  auto notify = [&](long long k) {
    for (const auto& o : observers)
      if (k % o.stride == 0 && o.callback) {
        o.callback(ens);
        ++out.observations;
      }
  };
  notify(0);
  for (long long k = 1; k <= steps; ++k) {
    step(ens, model);
    notify(k);
  }
  out.steps = steps;
  out.t_final = ens.t;
  return out;
}

CoupledPair make_coupled_pair(const DiffusionModel& model, int N, int M, double dt,
                              std::uint64_t seed, const std::vector<double>& m0) {
  if (M < 1) throw ConfigError("reference proxy size must be >= 1");
  CoupledPair p;
  // Draw X_i(0) i.i.d. around m0; split into mean and recentered parts.
  const int d = model.dimension();
  ParticleEnsemble e = make_ensemble(model, N, dt, seed, m0, InitialLaw::zero);
  const NormalStream init(seed, rng_domain::initial);
  std::vector<double> x(static_cast<std::size_t>(N) * d);
  for (int i = 0; i < N; ++i) {
    init.fill(static_cast<std::uint32_t>(N), static_cast<std::uint64_t>(i), x.data() + static_cast<std::size_t>(i) * d, d);
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(i) * d + j] = m0[j] + std::sqrt(model.gamma_ratio(j)) * x[static_cast<std::size_t>(i) * d + j];
  }
  for (int j = 0; j < d; ++j) {
    const double mean = pairwise_mean(x.data() + j, N, d);
    e.m[j] = mean;
    for (int i = 0; i < N; ++i) e.particle(i)[j] = x[static_cast<std::size_t>(i) * d + j] - mean;
  }
  p.ensemble = std::move(e);
  p.reference = std::move(x);
  p.proxy = make_ensemble(model, M, dt, seed, m0, InitialLaw::zero, Scheme::euler_maruyama,
                          rng_domain::reference);
  const NormalStream pinit(seed, rng_domain::reference ^ 0x100u);
  std::vector<double> z(static_cast<std::size_t>(M) * d);
  for (int i = 0; i < M; ++i) {
    pinit.fill(static_cast<std::uint32_t>(M), static_cast<std::uint64_t>(i), z.data() + static_cast<std::size_t>(i) * d, d);
    for (int j = 0; j < d; ++j) z[static_cast<std::size_t>(i) * d + j] = m0[j] + std::sqrt(model.gamma_ratio(j)) * z[static_cast<std::size_t>(i) * d + j];
  }
  for (int j = 0; j < d; ++j) {
    const double mean = pairwise_mean(z.data() + j, M, d);
    p.proxy.m[j] = mean;
    for (int i = 0; i < M; ++i) p.proxy.particle(i)[j] = z[static_cast<std::size_t>(i) * d + j] - mean;
  }
  return p;
}

CouplingCurve couple_to_mckean_vlasov(CoupledPair& pair, const DiffusionModel& model,
                                      double horizon, long long record_stride) {
  ParticleEnsemble& ens = pair.ensemble;
  const int N = ens.N, d = ens.d;
  if (pair.reference.size() != static_cast<std::size_t>(N) * d)
    throw ConfigError("reference trajectories do not match the particle noise streams");
  if (ens.scheme != Scheme::euler_maruyama || pair.proxy.scheme != Scheme::euler_maruyama)
    throw ConfigError("coupling requires the euler-maruyama scheme");
  if (pair.proxy.dt != ens.dt) throw ConfigError("proxy and ensemble dt differ");
  const long long steps = std::llround(horizon / ens.dt);
  if (record_stride < 1) record_stride = 1;

  std::vector<double> xi(d), f(d), xb(d);
  CouplingCurve curve;
  double running = 0.0;
  auto record = [&]() {
    std::vector<double> err(N);
    for (int i = 0; i < N; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = ens.particle(i)[j] + ens.m[j] - pair.reference[static_cast<std::size_t>(i) * d + j];
        s += diff * diff;
      }
      err[i] = std::sqrt(s);
    }
    running = std::max(running, pairwise_mean(err.data(), N));
    curve.t.push_back(ens.t);
    curve.error.push_back(running);
  };
  record();
  pair.mean_law_trace.assign(pair.proxy.m.begin(), pair.proxy.m.end());
  const double h = ens.dt, delta = model.delta();
  for (long long k = 1; k <= steps; ++k) {
    // Reference copies use the proxy mean at the start of the step and particle i's noise.
    const std::vector<double> mref = pair.proxy.m;
    const std::uint64_t s = static_cast<std::uint64_t>(ens.step);
    for (int i = 0; i < N; ++i) {
      double* x = pair.reference.data() + static_cast<std::size_t>(i) * d;
      ens.noise.fill(static_cast<std::uint32_t>(i), s, xi.data(), d);
      model.field_into(x, f.data());
      for (int j = 0; j < d; ++j)
        xb[j] = x[j] + h * (delta * f[j] - model.k()[j] * (x[j] - mref[j])) +
                std::sqrt(2.0 * h) * model.sigma()[j] * xi[j];
      std::copy(xb.begin(), xb.end(), x);
    }
    step(ens, model);
    step(pair.proxy, model);
    pair.mean_law_trace.insert(pair.mean_law_trace.end(), pair.proxy.m.begin(), pair.proxy.m.end());
    if (k % record_stride == 0 || k == steps) record();
  }
  return curve;
}

}  // namespace mfp
