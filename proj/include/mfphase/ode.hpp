#pragma once

#include <functional>
#include <vector>

namespace mfp {

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState& x, OdeState& dxdt, double t)>;

struct OdeOptions {
  double atol = 1e-10;
  double rtol = 1e-10;
  double initial_dt = 1e-3;
  long long max_steps = 50'000'000;
};

// Adaptive Dormand-Prince 5(4) from t0 to t1 (either direction); x is updated in place.
// Throws IntegrationError on non-finite state or step exhaustion.
void integrate(const OdeRhs& rhs, OdeState& x, double t0, double t1, const OdeOptions& opt = {});

// Dense-output integration reporting the state at each requested time (monotone list).
void integrate_times(const OdeRhs& rhs, OdeState x, const std::vector<double>& times,
                     const std::function<void(const OdeState&, double)>& observer,
                     const OdeOptions& opt = {});

// Integrates from t0 until the first time t > t0 + min_time at which g(x(t)) crosses zero
// upward (from negative to non-negative), or until t0 + max_time. Returns true and sets
// x, t_hit at the crossing (located to ~1e-14 by secant iterations on the dense output).
bool integrate_to_event(const OdeRhs& rhs, OdeState& x, double t0, double max_time, double min_time,
                        const std::function<double(const OdeState&)>& g, double& t_hit,
                        const OdeOptions& opt = {});

}  // namespace mfp
