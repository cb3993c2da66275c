#pragma once

#include "mfphase/model.hpp"
#include "mfphase/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mfp {

enum class Scheme {
  euler_maruyama,  // first-order drift and noise
  exponential,     // OU part integrated exactly, transport frozen over the step
};

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

// N particles in recentered coordinates Y_i = X_i - m, plus the empirical mean m.
struct ParticleEnsemble {
  int N = 0;
  int d = 0;
  std::vector<double> Y;  // row-major N x d
  std::vector<double> m;  // size d
  double t = 0.0;
  long long step = 0;
  double dt = 1e-3;
  Scheme scheme = Scheme::euler_maruyama;
  NormalStream noise;  // stream i drives particle i; stream N is the auxiliary stream

  const double* particle(int i) const noexcept { return Y.data() + static_cast<std::size_t>(i) * d; }
  double* particle(int i) noexcept { return Y.data() + static_cast<std::size_t>(i) * d; }
  std::vector<double> positions() const;  // X_i = Y_i + m, row-major
};

enum class InitialLaw {
  zero,       // Y_i = 0
  gaussian,   // i.i.d. N(0, sigma^2/K) recentered, i.e. covariance (1 - 1/N) sigma^2/K
};

// Builds an ensemble; initial draws use the auxiliary stream (domain `initial`).
ParticleEnsemble make_ensemble(const DiffusionModel& model, int N, double dt, std::uint64_t seed,
                               const std::vector<double>& m0, InitialLaw law = InitialLaw::gaussian,
                               Scheme scheme = Scheme::euler_maruyama,
                               std::uint32_t noise_domain = rng_domain::dynamics);

// Step coefficients for one coordinate: Y <- a Y + b delta (F - Fbar) + c (xi - xibar).
struct StepCoefficients {
  double a, b, c;
};
StepCoefficients step_coefficients(Scheme scheme, double k, double sigma, double dt);

// One step of the recentered system, OpenMP-parallel over particles. Results are
// bitwise independent of the thread count.
void step(ParticleEnsemble& ens, const DiffusionModel& model);
// Same update, single-threaded; kept as the reference for tests and benchmarks.
void step_serial(ParticleEnsemble& ens, const DiffusionModel& model);

// |mean_i Y_i| (Euclidean) and max_i |Y_i|.
double recentering_residual(const ParticleEnsemble& ens);
double max_abs_particle(const ParticleEnsemble& ens);

struct Observer {
  long long stride = 1;  // in steps
  std::function<void(const ParticleEnsemble&)> callback;
};

struct RunSummary {
  long long steps = 0;
  double t_final = 0.0;
  long long observations = 0;
};

// Advances by horizon (a multiple of dt); observers fire at the start and every stride steps.
RunSummary run(ParticleEnsemble& ens, const DiffusionModel& model, double horizon,
               const std::vector<Observer>& observers = {});

// Particle system coupled to independent McKean-Vlasov copies driven by the same noise.
// The law's mean is proxied by a self-consistent ensemble of M particles with its own noise.
struct CoupledPair {
  ParticleEnsemble ensemble;
  std::vector<double> reference;  // N x d, X-bar_i
  ParticleEnsemble proxy;         // M particles; proxy.m approximates E[X-bar_t]
  std::vector<double> mean_law_trace;
};

// X_i(0) = X-bar_i(0) i.i.d. N(m0, sigma^2/K); proxy drawn from the same law independently.
CoupledPair make_coupled_pair(const DiffusionModel& model, int N, int M, double dt,
                              std::uint64_t seed, const std::vector<double>& m0);

struct CouplingCurve {
  std::vector<double> t;
  std::vector<double> error;  // running sup of mean_i |X_i - X-bar_i|
};

// Euler-Maruyama only; throws ConfigError on mismatched noise streams or another scheme.
CouplingCurve couple_to_mckean_vlasov(CoupledPair& pair, const DiffusionModel& model,
                                      double horizon, long long record_stride = 1);

}  // namespace mfp
