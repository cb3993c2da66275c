#include "helpers.hpp"
#include "mfphase/errors.hpp"
#include "mfphase/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace mfp;

TEST_SUITE("model") {
  TEST_CASE("cutoff profile shape") {
    CHECK(cutoff_profile(0.5) == 1.0);
    CHECK(cutoff_profile(1.0) == 1.0);
    CHECK(cutoff_profile(2.0) == 0.0);
    CHECK(cutoff_profile(1.5) == doctest::Approx(0.5).epsilon(1e-14));
    double prev = 1.0;
    for (double t = 1.0; t <= 2.0; t += 0.01) {
      const double v = cutoff_profile(t);
      CHECK(v <= prev + 1e-15);
      prev = v;
      const double h = 1e-6;
      if (t > 1.01 && t < 1.99)
        CHECK(cutoff_profile_derivative(t) ==
              doctest::Approx((cutoff_profile(t + h) - cutoff_profile(t - h)) / (2 * h)).epsilon(1e-5));
    }
  }

  TEST_CASE("fitzhugh-nagumo values inside the cutoff") {
    const auto m = testutil::fhn();
    Vec x(2);
    x << 1.2, -0.4;
    const Vec f = eval_field(m, x);
    CHECK(f[0] == doctest::Approx(1.2 - 1.2 * 1.2 * 1.2 / 3.0 + 0.4));
    CHECK(f[1] == doctest::Approx((1.2 + 1.0 / 3.0 + 0.4) / 10.0));
  }

  TEST_CASE("field vanishes beyond twice the cutoff radius") {
    const auto m = testutil::fhn();
    Vec x(2);
    x << 15.0, 15.0;
    CHECK(eval_field(m, x).norm() == 0.0);
  }

  TEST_CASE("jacobian matches central differences across the cutoff band") {
    const auto m = testutil::fhn();
    for (double r : {0.5, 11.0, 14.0, 18.0}) {
      Vec x(2);
      x << r * 0.8, r * 0.6;
      const Mat J = eval_jacobian(m, x);
      const double h = 1e-6;
      for (int j = 0; j < 2; ++j) {
        Vec xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const Vec col = (eval_field(m, xp) - eval_field(m, xm)) / (2 * h);
        for (int i = 0; i < 2; ++i) CHECK(J(i, j) == doctest::Approx(col[i]).epsilon(1e-5).scale(1.0));
      }
    }
  }

  TEST_CASE("bounds are finite for the cut-off field") {
    const auto b = testutil::fhn().bounds();
    CHECK(std::isfinite(b.value));
    CHECK(b.value > 0.0);
    CHECK(std::isfinite(b.hessian));
  }

  TEST_CASE("validation") {
    VectorFieldSpec f;
    CHECK_THROWS_AS(DiffusionModel(2, -1.0, DiagonalMatrix({1, 1}), DiagonalMatrix({1, 1}), f), ConfigError);
    CHECK_THROWS_AS(DiagonalMatrix({1.0, 0.0}), ConfigError);
    CHECK_THROWS_AS(DiffusionModel(3, 0.1, DiagonalMatrix({1, 1, 1}), DiagonalMatrix({1, 1, 1}), f), ConfigError);
    Vec bad(2);
    bad << NAN, 0.0;
    CHECK_THROWS_AS(eval_field(testutil::fhn(), bad), DomainError);
  }

  TEST_CASE("custom table polynomial") {
    const auto m = testutil::hopf(0.0 + 1e-4);
    Vec x(2);
    x << 0.3, -0.2;
    const double r2 = 0.13;
    const Vec f = eval_field(m, x);
    CHECK(f[0] == doctest::Approx(0.3 + 0.2 - 0.3 * r2));
    CHECK(f[1] == doctest::Approx(0.3 - 0.2 + 0.2 * r2));
  }

  TEST_CASE("model hash changes with parameters") {
    CHECK(model_hash(testutil::fhn(0.02)) == model_hash(testutil::fhn(0.02)));
    CHECK(model_hash(testutil::fhn(0.02)) != model_hash(testutil::fhn(0.05)));
  }
}
