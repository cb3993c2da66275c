#include "helpers.hpp"
#include "mfphase/errors.hpp"
#include "mfphase/reduced.hpp"

#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

using namespace mfp;

namespace {

constexpr double kVar = 0.05;
const double kA = 1.0 - 4.0 * kVar;  // smoothed Hopf: squared cycle radius

struct HopfFixture {
  std::shared_ptr<SmoothedField> field;
  std::shared_ptr<LimitCycle> cycle;
  std::shared_ptr<IsochronMap> iso;
};

const HopfFixture& hopf_fixture() {
  static const HopfFixture fx = [] {
    HopfFixture f;
    f.field = std::make_shared<SmoothedField>(testutil::hopf(kVar), 12);
    Vec g(2);
    g << 1.0, 0.0;
    f.cycle = std::make_shared<LimitCycle>(find_limit_cycle(*f.field, g));
    f.iso = std::make_shared<IsochronMap>(f.cycle, f.field);
    f.iso->calibrate_tube(32);
    return f;
  }();
  return fx;
}

double wrap2pi(double a) {
  a = std::fmod(a, 2 * std::numbers::pi);
  return a < 0 ? a + 2 * std::numbers::pi : a;
}

}  // namespace

TEST_SUITE("reduced") {
  TEST_CASE("smoothed field equals the closed-form Gaussian average") {
    const auto& fx = hopf_fixture();
    Vec z(2);
    z << 0.4, -0.7;
    const Vec G = fx.field->value(z);
    const double r2 = z.squaredNorm();
    CHECK(G[0] == doctest::Approx(z[0] * kA - z[1] - z[0] * r2).epsilon(1e-12));
    CHECK(G[1] == doctest::Approx(z[0] + z[1] * kA - z[1] * r2).epsilon(1e-12));
    const Mat J = fx.field->jacobian(z);
    CHECK(J(0, 1) == doctest::Approx(-1.0 - 2 * z[0] * z[1]).epsilon(1e-10));
  }

  TEST_CASE("cycle of the smoothed Hopf field") {
    const auto& c = *hopf_fixture().cycle;
    CHECK(c.period == doctest::Approx(2 * std::numbers::pi).epsilon(1e-8));
    for (int j = 0; j < c.size(); j += 97) CHECK(c.samples[j].norm() == doctest::Approx(std::sqrt(kA)).epsilon(1e-8));
    CHECK(c.trivial_multiplier_error() < 1e-6);
    CHECK(c.max_nontrivial_modulus() == doctest::Approx(std::exp(-2 * kA * 2 * std::numbers::pi)).epsilon(1e-4).scale(1e-6));
    CHECK(c.shooting_residual < 1e-9);
  }

  TEST_CASE("phase response equals the angular gradient") {
    const auto& c = *hopf_fixture().cycle;
    for (double u : {0.0, 1.0, 2.5, 5.9}) {
      const Vec a = c.state(u), z = c.prc_at(u);
      CHECK(z[0] == doctest::Approx(-a[1] / kA).epsilon(1e-6).scale(1.0));
      CHECK(z[1] == doctest::Approx(a[0] / kA).epsilon(1e-6).scale(1.0));
      CHECK(z.dot(c.velocity(u)) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }

  TEST_CASE("isochrons are radial lines") {
    const auto& fx = hopf_fixture();
    const double a0 = std::atan2(fx.cycle->anchor[1], fx.cycle->anchor[0]);
    const double rad = fx.iso->tube_radius();
    REQUIRE(rad > 0.0);
    for (int k = 0; k < 12; ++k) {
      const double ang = 0.5 * k + 0.1;
      const double rr = std::sqrt(kA) + rad * std::sin(1.3 * k) * 0.9;
      Vec x(2);
      x << rr * std::cos(ang), rr * std::sin(ang);
      const double expected = wrap2pi(ang - a0);
      double got = fx.iso->phase(x);
      double diff = std::remainder(got - expected, 2 * std::numbers::pi);
      CHECK(std::abs(diff) < 1e-6);
      const Vec g = fx.iso->gradient(x);
      CHECK(g[0] == doctest::Approx(-x[1] / (rr * rr)).epsilon(1e-4).scale(1.0));
    }
  }

  TEST_CASE("isochron invariance under the flow") {
    const auto& fx = hopf_fixture();
    const auto& c = *fx.cycle;
    for (int k = 0; k < 10; ++k) {
      Vec x = c.state(0.6 * k) * (1.0 + 0.05 * std::cos(k));
      OdeState y(x.data(), x.data() + 2);
      integrate(fx.field->flow(), y, 0.0, 1.7);
      const Vec xt = Eigen::Map<Vec>(y.data(), 2);
      const double d = std::remainder(fx.iso->phase(xt) - fx.iso->phase(x) - 1.7, c.period);
      CHECK(std::abs(d) < 1e-6);
    }
  }

  TEST_CASE("out of basin") {
    const auto& fx = hopf_fixture();
    Vec x(2);
    x << 0.05, 0.0;
    CHECK_THROWS_AS(fx.iso->phase(x), OutOfBasinError);
  }

  TEST_CASE("principal matrix over one period is the monodromy") {
    const auto& fx = hopf_fixture();
    const auto& c = *fx.cycle;
    const Mat P = principal_matrix(c, *fx.field, 0.0, c.period);  // phase origin is the anchor
    CHECK((P - c.monodromy).norm() < 1e-6);
    const Mat Pc = c.center_projection(1.0), Ps = c.stable_projection(1.0);
    CHECK((Pc * Pc - Pc).norm() < 1e-6);
    CHECK((Pc + Ps - Mat::Identity(2, 2)).norm() < 1e-12);
  }

  TEST_CASE("oracle coefficients for a harmonic phase") {
    // Theta = angle: Laplacian zero, |grad Theta|^2 = 1/a on the cycle.
    const auto& fx = hopf_fixture();
    const auto m = testutil::hopf(kVar, 0.05);
    const auto o = oracle_phase_coefficients(*fx.iso, m, 32);
    CHECK(std::abs(o.mean_sigma_hessian) < 1e-4);
    CHECK(o.mean_sigma_gradient == doctest::Approx(kVar / kA).epsilon(1e-5));
    CHECK(o.a2_fd == doctest::Approx(2 * kVar / kA / (0.05 * 0.05)).epsilon(1e-5));
    CHECK_THROWS_AS(oracle_phase_coefficients(*fx.iso, m.with_delta(0.0), 32), ConfigError);
  }

  TEST_CASE("stable spiral has no cycle") {
    VectorFieldSpec f;
    f.kind = FieldKind::linear_test;
    f.matrix = {-1.0, -1.0, 1.0, -1.0};
    const SmoothedField field(DiffusionModel(2, 0.1, DiagonalMatrix({1, 1}), DiagonalMatrix({0.3, 0.3}), f), 8);
    Vec g(2);
    g << 1.0, 0.0;
    CHECK_THROWS_AS(find_limit_cycle(field, g), NoCycleError);
  }
}
