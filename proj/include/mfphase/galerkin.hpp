#pragma once

#include "mfphase/hermite.hpp"
#include "mfphase/model.hpp"
#include "mfphase/reduced.hpp"
#include "mfphase/tensor.hpp"

#include <functional>
#include <vector>

namespace mfp {

// Density p = w_1 sum_l c_l psi_{l,1} (theta = 1 basis, c_l = <p, psi_l>) and mean m.
struct SpectralState {
  std::vector<double> c;
  Vec m;
  double t = 0.0;
};

struct GalerkinOptions {
  int L = 30;           // |l|_inf <= L
  int Q = 0;            // grid nodes per axis; 0 selects 2L
  double dt = 0.05;
  bool finite_N = false;  // use (1 - 1/N) diffusion
  double N = 0.0;
  double aliasing_threshold = 0.1;  // top-shell energy fraction triggering a resolution error
};

class GalerkinSolver {
 public:
  GalerkinSolver(const DiffusionModel& model, GalerkinOptions opt);

  const DiffusionModel& model() const noexcept { return model_; }
  const HermiteBasis& basis() const noexcept { return basis_; }
  const GalerkinOptions& options() const noexcept { return opt_; }
  int grid_order() const noexcept { return Q_; }

  SpectralState gaussian_state(const Vec& m) const;  // p = rho
  // rho plus `amplitude` times w_1 psi_l (mass unchanged for l != 0).
  SpectralState mode_state(const std::vector<int>& l, double amplitude, const Vec& m) const;
  // Coefficients of a density given pointwise.
  SpectralState project_density(const std::function<double(const double*)>& p, const Vec& m) const;

  // Time derivative of the full system (OU part included).
  void derivative(const SpectralState& s, std::vector<double>& dc, Vec& dm) const;
  // Transport part only; also returns <p, F_m>.
  void transport(const std::vector<double>& c, const Vec& m, std::vector<double>& dc, Vec& dm) const;

  // One integrating-factor RK2 step of size h (exact on the diagonal OU part).
  void step(SpectralState& s, double h) const;
  // Advances by horizon with step dt (last step shortened); observer after each step.
  void evolve(SpectralState& s, double horizon,
              const std::function<void(const SpectralState&)>& observer = {}) const;

  double mass(const SpectralState& s) const;
  Vec mean(const SpectralState& s) const;                // <p, x>
  double second_moment(const SpectralState& s, int i) const;  // <p, x_i^2>
  double top_shell_fraction(const SpectralState& s) const;
  // min of p over a uniform grid of n points per axis on [-extent, extent] (in std units).
  double min_density(const SpectralState& s, int n = 41, double extent = 4.0) const;
  // Throws ResolutionError when the top shell holds too much energy.
  void check_resolution(const SpectralState& s) const;

  // Density value at x.
  double density(const SpectralState& s, const double* x) const;

 private:
  DiffusionModel model_;
  GalerkinOptions opt_;
  HermiteBasis basis_;
  int Q_ = 0;
  std::vector<double> nodes_;         // GH nodes per axis (standard variable)
  std::vector<Mat> eval_;             // per axis Q x (L+1): sqrt(s) h_l(z_q)
  std::vector<Mat> proj_;             // per axis (L+1) x Q: sqrt(s) h_l(z_q) * sqrt(2 pi)/s * w_q
  std::vector<double> lambda_;        // per mode
  double psi0_ = 0.0;
};

struct PicardOptions {
  double damping = 0.5;
  bool adaptive_damping = true;  // switch to undamped steps once the map is seen to contract fast
  double tolerance = 1e-6;
  int max_iterations = 40;
  int snapshots = 64;
  double theta = 1.0;  // reporting norm
  double r = 4.0;
};

struct PeriodicSolutionArtifact {
  double period = 0.0;
  double delta = 0.0;
  int L = 0;
  double theta = 1.0, r = 4.0;
  Vec anchor, normal;  // Poincare section for gamma
  std::vector<SpectralState> snapshots;  // at j T / M, j = 0..M-1
  std::vector<Vec> gamma;                // means of the snapshots
  std::vector<double> residual_history;
  double residual = 0.0;
  double reduced_period = 0.0;
  double max_distance_to_reduced = 0.0;  // sup_j dist(gamma_j, alpha)
};

// Product-space distance || (c1, m1) - (c2, m2) || in H^{-r}_theta x R^d.
double state_distance(const GalerkinSolver& solver, const SpectralState& a, const SpectralState& b,
                      double theta, double r);

// Flows from s until gamma crosses the section upward after min_time; s holds the crossing
// state and the return time is returned. Throws ConvergenceError without a crossing.
double flow_to_section(const GalerkinSolver& solver, SpectralState& s, const Vec& anchor,
                       const Vec& normal, double min_time, double max_time);

// Damped Picard iteration on the Poincare return map, initialized at (rho, alpha_0).
PeriodicSolutionArtifact find_periodic_solution(const GalerkinSolver& solver, const LimitCycle& hint,
                                                const PicardOptions& opt = {});

// State at time t of the periodic solution by flowing from the nearest earlier snapshot.
SpectralState periodic_state_at(const GalerkinSolver& solver, const PeriodicSolutionArtifact& art,
                                double t);

}  // namespace mfp
