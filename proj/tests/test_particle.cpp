#include "helpers.hpp"
#include "mfphase/errors.hpp"
#include "mfphase/particle.hpp"

#include <doctest.h>
#include <omp.h>

#include <cmath>

using namespace mfp;

TEST_SUITE("particle") {
  TEST_CASE("recentered EM step reproduces the direct particle system") {
    // Direct Euler-Maruyama on X_i with the same normals, then compare positions.
    const auto model = testutil::fhn(0.3);
    const int N = 50, d = 2;
    const double dt = 1e-3;
    auto ens = make_ensemble(model, N, dt, 7, {0.4, -0.1});
    std::vector<double> X = ens.positions();
    for (int s = 0; s < 200; ++s) {
      std::vector<double> xi(N * d), F(N * d), mx(d, 0.0);
      for (int i = 0; i < N; ++i) {
        ens.noise.fill(i, s, xi.data() + i * d, d);
        model.field_into(X.data() + i * d, F.data() + i * d);
        for (int j = 0; j < d; ++j) mx[j] += X[i * d + j] / N;
      }
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < d; ++j)
          X[i * d + j] += dt * model.delta() * F[i * d + j] - dt * model.k()[j] * (X[i * d + j] - mx[j]) +
                          std::sqrt(2 * dt) * model.sigma()[j] * xi[i * d + j];
      step(ens, model);
    }
    const auto P = ens.positions();
    double err = 0.0;
    for (int q = 0; q < N * d; ++q) err = std::max(err, std::abs(P[q] - X[q]));
    CHECK(err < 1e-11);
  }

  TEST_CASE("recentering holds at every step") {
    const auto model = testutil::fhn(0.05);
    auto ens = make_ensemble(model, 300, 1e-2, 3, {1.0, 0.0});
    double worst = 0.0;
    run(ens, model, 5.0, {Observer{1, [&](const ParticleEnsemble& e) {
                               worst = std::max(worst, recentering_residual(e) / (1 + max_abs_particle(e)));
                             }}});
    CHECK(worst <= 1e-10);
  }

  TEST_CASE("results independent of the thread count") {
    const auto model = testutil::fhn(0.05);
    std::vector<std::vector<double>> finals;
    const int saved = omp_get_max_threads();
    for (int t : {1, 2, 8}) {
      omp_set_num_threads(t);
      auto ens = make_ensemble(model, 1000, 1e-2, 11, {1.0, 0.0});
      run(ens, model, 1.0);
      auto x = ens.positions();
      x.insert(x.end(), ens.m.begin(), ens.m.end());
      finals.push_back(x);
    }
    omp_set_num_threads(saved);
    CHECK(finals[0] == finals[1]);
    CHECK(finals[0] == finals[2]);
  }

  TEST_CASE("serial and parallel kernels agree bitwise") {
    const auto model = testutil::fhn(0.05);
    auto a = make_ensemble(model, 500, 1e-2, 2, {1.0, 0.0});
    auto b = a;
    for (int s = 0; s < 50; ++s) {
      step(a, model);
      step_serial(b, model);
    }
    CHECK(a.Y == b.Y);
    CHECK(a.m == b.m);
  }

  TEST_CASE("exponential scheme preserves the OU stationary variance exactly") {
    for (double dt : {1e-3, 0.2, 2.0}) {
      const auto c = step_coefficients(Scheme::exponential, 1.5, 0.7, dt);
      const double v = 0.49 / 1.5;
      CHECK(c.a * c.a * v + c.c * c.c == doctest::Approx(v).epsilon(1e-14));
      CHECK(c.b == doctest::Approx((1 - std::exp(-1.5 * dt)) / 1.5));
    }
    const auto em = step_coefficients(Scheme::euler_maruyama, 1.5, 0.7, 0.01);
    CHECK(em.a == doctest::Approx(1 - 0.015));
    CHECK(em.c == doctest::Approx(std::sqrt(0.02) * 0.7));
  }

  TEST_CASE("gaussian initial law is recentered with the right spread") {
    const auto model = testutil::fhn();
    const auto e = make_ensemble(model, 20000, 1e-3, 5, {0.0, 0.0});
    CHECK(recentering_residual(e) < 1e-14);
    double s0 = 0.0, s1 = 0.0;
    for (int i = 0; i < e.N; ++i) {
      s0 += e.particle(i)[0] * e.particle(i)[0];
      s1 += e.particle(i)[1] * e.particle(i)[1];
    }
    CHECK(s0 / e.N == doctest::Approx(0.2).epsilon(0.05));
    CHECK(s1 / e.N == doctest::Approx(0.02).epsilon(0.05));
  }

  TEST_CASE("errors") {
    const auto model = testutil::fhn();
    CHECK_THROWS_AS(make_ensemble(model, 0, 1e-3, 1, {0.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(make_ensemble(model, 10, -1.0, 1, {0.0, 0.0}), ConfigError);
    auto e = make_ensemble(model, 10, 1e-3, 1, {0.0, 0.0});
    CHECK_THROWS_AS(run(e, model, 0.0015), ConfigError);
    e.Y[0] = NAN;
    CHECK_THROWS_AS(step(e, model), IntegrationError);
  }

  TEST_CASE("coupling curve is a running supremum") {
    const auto model = testutil::fhn(0.05);
    auto pair = make_coupled_pair(model, 50, 500, 1e-2, 4, {1.0, 0.0});
    const auto c = couple_to_mckean_vlasov(pair, model, 1.0, 10);
    REQUIRE(c.t.size() == c.error.size());
    CHECK(c.t.size() == 11);
    for (std::size_t k = 1; k < c.error.size(); ++k) CHECK(c.error[k] >= c.error[k - 1]);
    CHECK(c.error.front() < 1e-14);  // identical start up to the mean/recentered split
  }
}
