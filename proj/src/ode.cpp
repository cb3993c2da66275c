#include "mfphase/ode.hpp"

#include "mfphase/errors.hpp"

#include <boost/numeric/odeint.hpp>

#include <cmath>

namespace mfp {

namespace odeint = boost::numeric::odeint;

namespace {

using Dopri = odeint::runge_kutta_dopri5<OdeState>;

bool finite_state(const OdeState& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

auto dense(const OdeOptions& opt) { return odeint::make_dense_output(opt.atol, opt.rtol, Dopri()); }

}  // namespace

void integrate(const OdeRhs& rhs, OdeState& x, double t0, double t1, const OdeOptions& opt) {
  if (t0 == t1) return;
  auto stepper = odeint::make_controlled(opt.atol, opt.rtol, Dopri());
  const double dir = t1 > t0 ? 1.0 : -1.0;
  double dt = dir * std::min(std::abs(opt.initial_dt), std::abs(t1 - t0));
  double t = t0;
  long long steps = 0;
  while (dir * (t1 - t) > 0.0) {
    if (dir * (t + dt - t1) > 0.0) dt = t1 - t;
    const auto res = stepper.try_step(std::cref(rhs), x, t, dt);
    if (res == odeint::fail) {
      if (++steps > opt.max_steps) throw IntegrationError("ODE step budget exhausted", steps);
      continue;
    }
    if (++steps > opt.max_steps) throw IntegrationError("ODE step budget exhausted", steps);
    if (!finite_state(x)) throw IntegrationError("non-finite ODE state", steps);
  }
}

void integrate_times(const OdeRhs& rhs, OdeState x, const std::vector<double>& times,
                     const std::function<void(const OdeState&, double)>& observer,
                     const OdeOptions& opt) {
  if (times.empty()) return;
  if (times.size() == 1) {
    observer(x, times[0]);
    return;
  }
  auto stepper = dense(opt);
  const double dir = times.back() >= times.front() ? 1.0 : -1.0;
  stepper.initialize(x, times.front(), dir * opt.initial_dt);
  std::size_t k = 0;
  OdeState tmp(x.size());
  long long steps = 0;
  observer(x, times[k++]);
  while (k < times.size()) {
    while (k < times.size() && dir * (times[k] - stepper.current_time()) <= 0.0) {
      stepper.calc_state(times[k], tmp);
      observer(tmp, times[k]);
      ++k;
    }
    if (k >= times.size()) break;
    stepper.do_step(std::cref(rhs));
    if (++steps > opt.max_steps) throw IntegrationError("ODE step budget exhausted", steps);
    if (!finite_state(stepper.current_state())) throw IntegrationError("non-finite ODE state", steps);
  }
}

bool integrate_to_event(const OdeRhs& rhs, OdeState& x, double t0, double max_time, double min_time,
                        const std::function<double(const OdeState&)>& g, double& t_hit,
                        const OdeOptions& opt) {
  auto stepper = dense(opt);
  stepper.initialize(x, t0, opt.initial_dt);
  double g_prev = g(x);
  long long steps = 0;
  OdeState tmp(x.size());
  while (stepper.current_time() < t0 + max_time) {
    stepper.do_step(std::cref(rhs));
    if (++steps > opt.max_steps) throw IntegrationError("ODE step budget exhausted", steps);
    const OdeState& cur = stepper.current_state();
    if (!finite_state(cur)) throw IntegrationError("non-finite ODE state", steps);
    const double g_cur = g(cur);
    const double ta = stepper.previous_time(), tb = stepper.current_time();
    if (tb > t0 + min_time && g_prev < 0.0 && g_cur >= 0.0) {
      // Illinois-modified regula falsi on the dense interpolant.
      double a = ta, b = tb, fa = g_prev, fb = g_cur;
      int side = 0;
      for (int it = 0; it < 100 && std::abs(b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
        const double c = (a * fb - b * fa) / (fb - fa);
        stepper.calc_state(c, tmp);
        const double fc = g(tmp);
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
      t_hit = 0.5 * (a + b);
      stepper.calc_state(t_hit, x);
      return true;
    }
    g_prev = g_cur;
  }
  x = stepper.current_state();
  t_hit = stepper.current_time();
  return false;
}

}  // namespace mfp
