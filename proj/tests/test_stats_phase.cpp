#include "helpers.hpp"
#include "mfphase/errors.hpp"
#include "mfphase/phase.hpp"
#include "mfphase/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace mfp;

TEST_SUITE("stats") {
  TEST_CASE("linear fit") {
    const auto f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(1.0));
    CHECK(f.r2 == doctest::Approx(1.0));
    CHECK_THROWS_AS(linear_fit({1}, {1}), StatisticsError);
    CHECK_THROWS_AS(linear_fit({1, 1}, {1, 2}), StatisticsError);
  }

  TEST_CASE("moments and quantiles") {
    CHECK(mean({1, 2, 3, 4}) == doctest::Approx(2.5));
    CHECK(sample_variance({1, 2, 3, 4}) == doctest::Approx(5.0 / 3.0));
    CHECK(quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == doctest::Approx(2.0));
  }

  TEST_CASE("jarque-bera") {
    const NormalStream s(3, rng_domain::sampling);
    std::vector<double> z(4000), e(4000);
    s.fill(0, 0, z.data(), 4000);
    for (int i = 0; i < 4000; ++i) e[i] = z[i] * z[i];
    CHECK(jarque_bera(z).p_value > 0.001);
    CHECK(jarque_bera(e).p_value < 1e-6);
  }

  TEST_CASE("estimator on synthetic traces") {
    std::vector<double> times;
    for (int k = 0; k <= 20; ++k) times.push_back(k / 20.0);
    const auto tr = synthetic_traces(0.8, 3.0, times, 400, 17);
    const auto est = estimate_coefficients(tr, 1000, 2, 30);
    CHECK(est.b_ci.contains(0.8));
    CHECK(est.a2_ci.contains(3.0));
    CHECK(est.a2_sd_hat == doctest::Approx(std::sqrt(est.a2_hat)));
    CHECK(est.r2_variance > 0.9);
    CHECK(est.replicas == 400);
    CHECK(est.flagged == 0);
    // Identical seeds reproduce identical intervals.
    const auto again = estimate_coefficients(tr, 1000, 2, 30);
    CHECK(again.b_ci.lo == est.b_ci.lo);
  }

  TEST_CASE("estimator refuses too few usable replicas") {
    std::vector<double> times{0.0, 0.5, 1.0};
    auto tr = synthetic_traces(0.0, 1.0, times, 35, 1);
    for (int i = 0; i < 10; ++i) {
      tr[i].flagged = true;
      tr[i].flag = "gap";
    }
    CHECK_THROWS_AS(estimate_coefficients(tr, 100, 0, 30), StatisticsError);
    const auto est = estimate_coefficients(tr, 100, 0, 20);
    CHECK(est.replicas == 25);
    CHECK(est.flagged == 10);
    tr[20].times.pop_back();
    tr[20].v.pop_back();
    CHECK_THROWS_AS(estimate_coefficients(tr, 100, 0, 20), StatisticsError);
  }
}

namespace {

struct PhaseFixture {
  std::shared_ptr<IsochronMap> iso;
  PeriodicSolutionArtifact art;
  std::unique_ptr<PhaseExtractor> ex;
};

// Periodic artifact laid exactly on the reduced Hopf cycle, period T_alpha / delta.
const PhaseFixture& phase_fixture() {
  static const PhaseFixture fx = [] {
    PhaseFixture f;
    auto field = std::make_shared<SmoothedField>(testutil::hopf(0.05), 12);
    Vec g(2);
    g << 1.0, 0.0;
    auto cyc = std::make_shared<LimitCycle>(find_limit_cycle(*field, g));
    f.iso = std::make_shared<IsochronMap>(cyc, field);
    f.iso->calibrate_tube(32);
    const double delta = 0.05, T = cyc->period / delta;
    const int M = 32;
    f.art.period = T;
    f.art.delta = delta;
    f.art.reduced_period = cyc->period;
    for (int j = 0; j < M; ++j) {
      SpectralState s;
      s.t = T * j / M;
      s.m = cyc->state(cyc->period * j / M);
      f.art.snapshots.push_back(s);
      f.art.gamma.push_back(s.m);
    }
    f.ex = std::make_unique<PhaseExtractor>(f.iso, f.art);
    return f;
  }();
  return fx;
}

}  // namespace

TEST_SUITE("phase") {
  TEST_CASE("clock is the linear rescaling on an exact artifact") {
    const auto& fx = phase_fixture();
    const double Ta = fx.iso->cycle().period, T = fx.ex->period();
    for (double u : {0.0, 0.3, 1.7, 4.4, 6.2}) {
      const double got = fx.ex->clock(u);
      CHECK(std::abs(std::remainder(got - u * T / Ta, T)) < 1e-9 * T);
    }
  }

  TEST_CASE("trace of a uniformly rotating mean is zero; a phase kick shows up") {
    const auto& fx = phase_fixture();
    const auto& c = fx.iso->cycle();
    const double delta = 0.05;
    const int N = 100;
    std::vector<PhaseObservation> obs, kicked;
    for (int k = 0; k <= 40; ++k) {
      const double t = 2.5 * k;
      obs.push_back({t, c.state(c.wrap(delta * t + 0.4))});
      const double extra = k >= 20 ? 0.3 : 0.0;  // reduced-time kick
      kicked.push_back({t, c.state(c.wrap(delta * t + 0.4 + extra))});
    }
    const auto tr = dephasing_trace(obs, *fx.ex, N, 0, 4);
    CHECK_FALSE(tr.flagged);
    CHECK(tr.v.size() == 11);
    for (double v : tr.v) CHECK(std::abs(v) < 1e-6);
    CHECK(tr.times.back() == doctest::Approx(100.0 / N));
    const auto tk = dephasing_trace(kicked, *fx.ex, N, 0, 1);
    CHECK(tk.v.back() == doctest::Approx(0.3 / delta).epsilon(1e-6));
  }

  TEST_CASE("gaps and large jumps flag the trace") {
    const auto& fx = phase_fixture();
    const auto& c = fx.iso->cycle();
    Vec far(2);
    far << 0.0, 0.01;
    std::vector<PhaseObservation> gap{{0.0, c.state(0.0)}, {1.0, far}, {2.0, c.state(0.1)}};
    const auto tg = dephasing_trace(gap, *fx.ex, 10, 0, 1);
    CHECK(tg.flagged);
    CHECK(tg.flag == "gap");
    std::vector<PhaseObservation> jump{{0.0, c.state(0.0)}, {1.0, c.state(0.05 + c.period * 0.3)}};
    const auto tj = dephasing_trace(jump, *fx.ex, 10, 0, 1);
    CHECK(tj.flagged);
    CHECK(tj.flag == "unwrap");
  }

  TEST_CASE("replica seeds are distinct") {
    CHECK(replica_seed(1, 2000, 0) != replica_seed(1, 2000, 1));
    CHECK(replica_seed(1, 2000, 0) != replica_seed(1, 8000, 0));
    CHECK(replica_seed(1, 2000, 5) == replica_seed(1, 2000, 5));
  }

  TEST_CASE("simulated dephasing is reproducible") {
    const auto& fx = phase_fixture();
    DephasingRunOptions o;
    o.dt = 0.05;
    o.t_f = 0.2;
    o.observations = 4;
    o.extraction_stride = 1.0;
    const auto model = testutil::hopf(0.05, 0.05);
    const auto a = simulate_dephasing(model, *fx.ex, fx.art.gamma[0], 200, 3, o);
    const auto b = simulate_dephasing(model, *fx.ex, fx.art.gamma[0], 200, 3, o);
    CHECK(a.v == b.v);
    CHECK(a.v.size() == 5);
    o.dt = 0.3;
    CHECK_THROWS_AS(simulate_dephasing(model, *fx.ex, fx.art.gamma[0], 200, 3, o), ConfigError);
  }
}
