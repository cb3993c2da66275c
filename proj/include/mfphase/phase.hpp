#pragma once

#include "mfphase/galerkin.hpp"
#include "mfphase/hermite.hpp"
#include "mfphase/particle.hpp"
#include "mfphase/reduced.hpp"
#include "mfphase/stats.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mfp {

// Phase of the mean on the periodic solution, in [0, T_delta).
//
// The reduced isochron phase of m is mapped onto the periodic solution's clock through the
// calibration u_j = Theta_red(gamma(t_j)); between calibration points t(u) is interpolated
// (periodic modified Akima on the nonuniform u_j).
class PhaseExtractor {
 public:
  PhaseExtractor(std::shared_ptr<const IsochronMap> iso, const PeriodicSolutionArtifact& art);

  double period() const noexcept { return T_; }
  double reduced_period() const noexcept { return Ta_; }
  const IsochronMap& isochron() const noexcept { return *iso_; }

  // Reduced isochron phase in [0, T_alpha); OutOfBasinError outside the tube.
  double reduced_phase(const Vec& m) const;
  double extract(const Vec& m) const;
  // Calibration map u -> t, exposed for tests.
  double clock(double u) const;

 private:
  std::shared_ptr<const IsochronMap> iso_;
  double T_ = 0.0, Ta_ = 0.0, u_origin_ = 0.0;
  std::function<double(double)> residual_;  // r(u) = t(u) - u T / T_alpha, periodic
};

struct PhaseTrace {
  std::vector<double> times;  // rescaled: wall time / N
  std::vector<double> v;      // unwrapped phase deviations, v[0] = 0
  double u0 = 0.0;
  int N = 0;
  int replica = 0;
  bool flagged = false;
  std::string flag;                // reason when flagged
  std::vector<double> gap_times;   // rescaled times of out-of-tube observations
};

struct PhaseObservation {
  double wall_time = 0.0;
  Vec m;
};

// v_k = unwrap(phase(m_k) - u0 - (t_k - t_0) mod T_delta), u0 = phase(m_0).
// Unwrapping runs over every observation; only every `report_every`-th one (starting with the
// first) enters the trace. Out-of-tube observations are gaps: the trace is flagged when a gap
// hits a reported time, and any unwrap increment of at least T_delta / 4 (across gaps too)
// flags an ambiguity.
PhaseTrace dephasing_trace(const std::vector<PhaseObservation>& obs, const PhaseExtractor& ex,
                           int N, int replica, int report_every = 1);

struct DiffusionEstimate {
  double b_hat = 0.0;
  Interval b_ci;
  double a2_hat = 0.0;  // slope of var(v) vs t (variance reading)
  Interval a2_ci;
  double a2_sd_hat = 0.0;  // sqrt of the slope (standard-deviation reading)
  Interval a2_sd_ci;
  double r2_variance = 0.0;
  double r2_mean = 0.0;
  bool diagnostics_ok = true;
  int replicas = 0;
  int flagged = 0;
  int resamples = 0;
  NormalityTest final_normality;  // of v(t_f) across replicas; diagnostic only
  std::vector<double> times, mean_v, var_v;
};

// Slopes of the across-replica mean and variance of v; percentile 95% CIs from a replica
// bootstrap. StatisticsError with fewer than min_replicas unflagged traces or mismatched grids.
DiffusionEstimate estimate_coefficients(const std::vector<PhaseTrace>& traces, int resamples = 10000,
                                        std::uint64_t seed = 0, int min_replicas = 30);

// v(t_k) = b t_k + sqrt(c) W(t_k) on the given grid, one Brownian path per replica.
std::vector<PhaseTrace> synthetic_traces(double b, double c, const std::vector<double>& times,
                                         int replicas, std::uint64_t seed);

struct DephasingRunOptions {
  double dt = 0.2;
  Scheme scheme = Scheme::exponential;
  double t_f = 1.0;                 // rescaled horizon; wall horizon is N t_f
  int observations = 20;            // reported intervals over [0, t_f]
  double extraction_stride = 10.0;  // wall time between unwrapping extractions (rounded to divide)
  std::uint64_t seed = 1;
};

// Independent 64-bit seed per (seed, N, replica) via splitmix64.
std::uint64_t replica_seed(std::uint64_t seed, int N, int replica);

// One replica: Y_i(0) i.i.d. N(0, sigma^2/K) recentered, m(0) = m0, then the dephasing trace.
PhaseTrace simulate_dephasing(const DiffusionModel& model, const PhaseExtractor& ex, const Vec& m0,
                              int N, int replica, const DephasingRunOptions& opt);

// States of the periodic solution tabulated over one period for cheap lookup.
class PeriodicOrbitTable {
 public:
  PeriodicOrbitTable(std::shared_ptr<const GalerkinSolver> solver, const PeriodicSolutionArtifact& art,
                     int entries = 512);
  double period() const noexcept { return T_; }
  SpectralState at(double t) const;  // flows from the previous table entry
  const GalerkinSolver& solver() const noexcept { return *solver_; }

 private:
  std::shared_ptr<const GalerkinSolver> solver_;
  double T_ = 0.0;
  std::vector<SpectralState> table_;
};

struct ProximityReport {
  int N = 0;
  std::vector<double> times;      // rescaled
  std::vector<double> distances;  // NaN at gaps
  double sup = 0.0;               // over covered observations
  double coverage = 0.0;          // covered fraction
  int gaps = 0;                   // out-of-tube observations
  int unresolved = 0;             // dual norm not converged at the basis truncation
};

// ||(p_N, m) - Gamma_phase||: empirical measure of Y against q at the extracted phase in
// H^{-r}_theta, plus |m - gamma|. Throws OutOfBasinError outside the tube and TruncationError
// when the empirical measure is not resolved by the basis.
double proximity_distance(const ParticleEnsemble& ens, const PhaseExtractor& ex,
                          const PeriodicOrbitTable& orbit, const HermiteBasis& basis);

class ProximityAudit {
 public:
  ProximityAudit(const PhaseExtractor& ex, const PeriodicOrbitTable& orbit, HermiteBasis basis);
  void observe(const ParticleEnsemble& ens);
  ProximityReport report() const;

 private:
  const PhaseExtractor& ex_;
  const PeriodicOrbitTable& orbit_;
  HermiteBasis basis_;
  ProximityReport rep_;
};

// log-log fit of sup-distance against N.
LinearFit proximity_slope(const std::vector<double>& Ns, const std::vector<double>& sups);

}  // namespace mfp
