#pragma once

#include "mfphase/model.hpp"
#include "mfphase/ode.hpp"
#include "mfphase/quadrature.hpp"

#include <complex>
#include <memory>
#include <vector>

namespace mfp {

// G(z) = sum_q w_q F(x_q + z) with a tensor Gauss-Hermite rule for rho = N(0, sigma^2 K^-1).
class SmoothedField {
 public:
  // Throws ConfigError for order < 2.
  SmoothedField(const DiffusionModel& model, int order = 20);

  int dimension() const noexcept { return model_.dimension(); }
  int order() const noexcept { return order_; }
  const DiffusionModel& model() const noexcept { return model_; }
  const TensorRule& rule() const noexcept { return rule_; }

  void value_into(const double* z, double* out) const;
  void jacobian_into(const double* z, double* out_rowmajor) const;
  Vec value(const Vec& z) const;
  Mat jacobian(const Vec& z) const;

  // z' = G(z)
  OdeRhs flow() const;
  // z' = G(z), Phi' = DG(z) Phi; state = [z, Phi row-major].
  OdeRhs variational_flow() const;

 private:
  DiffusionModel model_;
  int order_;
  TensorRule rule_;
};

struct CycleOptions {
  double transient = 200.0;
  double max_return_time = 1000.0;
  double shooting_tolerance = 1e-10;
  int max_newton = 30;
  int samples = 4096;       // fine samples used for interpolation
  OdeOptions ode{1e-12, 1e-12, 1e-3, 50'000'000};
};

// Periodic orbit alpha of the reduced ODE, with phase origin at the Poincare anchor.
struct LimitCycle {
  int d = 0;
  double period = 0.0;
  std::vector<Vec> samples;     // alpha(j T / M)
  std::vector<Vec> velocities;  // G(alpha(j T / M))
  std::vector<Vec> accelerations;  // DG(alpha) G(alpha)
  Vec anchor, normal;           // section through the max-|alpha'| point, normal alpha'
  Mat monodromy;                // principal matrix over one period from the anchor
  std::vector<std::complex<double>> multipliers;
  std::vector<Vec> prc;         // grad Theta along the cycle (adjoint solution), Z . alpha' = 1
  std::vector<Vec> prc_rates;   // Z' = -DG(alpha)^T Z
  double shooting_residual = 0.0;
  std::vector<double> newton_history;

  int size() const noexcept { return static_cast<int>(samples.size()); }
  double wrap(double u) const;  // into [0, T)
  Vec state(double u) const;    // cubic Hermite interpolation
  Vec velocity(double u) const;
  Vec prc_at(double u) const;   // cubic Hermite interpolation of the adjoint samples
  // P_c = alpha' Z^T and P_s = I - P_c at phase u.
  Mat center_projection(double u) const;
  Mat stable_projection(double u) const;
  // Index of the sample nearest to x.
  int nearest_sample(const Vec& x) const;
  // Multiplier closest to 1 and the largest modulus among the others.
  double trivial_multiplier_error() const;
  double max_nontrivial_modulus() const;
};

// Transient integration, Newton shooting on (x, T) with a phase condition, then resampling.
// Throws NoCycleError (equilibrium reached, no return) or ConvergenceError (Newton failure).
LimitCycle find_limit_cycle(const SmoothedField& field, const Vec& guess, const CycleOptions& opt = {});

// pi_{u+t,u}: principal matrix along the cycle from phase u over duration t.
Mat principal_matrix(const LimitCycle& cycle, const SmoothedField& field, double u, double t,
                     const OdeOptions& opt = {1e-12, 1e-12, 1e-3, 50'000'000});

struct PhaseInfo {
  double phase = 0.0;
  Vec gradient;
  Mat hessian;
};

// Asymptotic phase of points near the cycle.
class IsochronMap {
 public:
  IsochronMap(std::shared_ptr<const LimitCycle> cycle, std::shared_ptr<const SmoothedField> field,
              OdeOptions ode = {1e-10, 1e-10, 1e-3, 50'000'000});

  const LimitCycle& cycle() const noexcept { return *cycle_; }
  const SmoothedField& field() const noexcept { return *field_; }
  double tube_radius() const noexcept { return tube_radius_; }
  void set_tube_radius(double r) { tube_radius_ = r; }

  // Distance from x to the sampled cycle.
  double distance(const Vec& x) const;
  // Phase in [0, T); OutOfBasinError outside the tube or without convergence.
  double phase(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x, double step = 1e-4) const;
  PhaseInfo evaluate(const Vec& x, bool with_hessian) const;

  // Phase of a point already within ~1e-6 of the cycle via the linearized isochron.
  double project_phase(const Vec& y) const;

  // 0.5 x half the smallest distance between cycle points separated by >= T/4 in phase,
  // then shrunk by 0.8 until every probe point in the tube resolves.
  double calibrate_tube(int probes = 64);

 private:
  std::shared_ptr<const LimitCycle> cycle_;
  std::shared_ptr<const SmoothedField> field_;
  OdeOptions ode_;
  double tube_radius_ = 0.0;
  int settle_periods(const Vec& x) const;
};

struct OracleCoefficients {
  double b_fd = 0.0;   // drift of v per unit rescaled time
  double a2_fd = 0.0;  // variance growth of v per unit rescaled time
  double mean_sigma_hessian = 0.0;   // <sum sigma_k^2 d_kk Theta> over the cycle
  double mean_sigma_gradient = 0.0;  // <sum sigma_k^2 (d_k Theta)^2> over the cycle
  int samples = 0;
};

// Cycle averages of the phase-reduction terms for dm = delta G dt + sqrt(2/N) sigma dB,
// expressed per unit of rescaled time t = wall time / N. Requires delta > 0.
OracleCoefficients oracle_phase_coefficients(const IsochronMap& iso, const DiffusionModel& model,
                                             int samples = 128);

}  // namespace mfp
