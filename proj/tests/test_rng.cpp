#include "mfphase/rng.hpp"
#include "mfphase/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace mfp;

TEST_SUITE("rng") {
  // Random123 known-answer vectors for philox4x32-10.
  TEST_CASE("philox known answers") {
    using C = Philox4x32::Counter;
    using K = Philox4x32::Key;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}) ==
          C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, K{0xffffffffu, 0xffffffffu}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, K{0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("normal stream moments and addressing") {
    const NormalStream s(42, rng_domain::dynamics);
    std::vector<double> z;
    for (std::uint64_t k = 0; k < 50000; ++k) {
      double a, b;
      s.pair(3, k, 0, a, b);
      z.push_back(a);
      z.push_back(b);
    }
    CHECK(std::abs(mean(z)) < 4.0 / std::sqrt(z.size()));
    CHECK(std::abs(sample_variance(z) - 1.0) < 0.02);
    double a1, b1, a2, b2;
    s.pair(3, 7, 0, a1, b1);
    s.pair(3, 7, 0, a2, b2);
    CHECK(a1 == a2);
    const NormalStream other(42, rng_domain::initial);
    other.pair(3, 7, 0, a2, b2);
    CHECK(a1 != a2);
  }

  TEST_CASE("uniform never zero and in range") {
    CHECK(u01_open_closed(0, 0) > 0.0);
    CHECK(u01_open_closed(0xffffffffu, 0xffffffffu) <= 1.0);
  }

  TEST_CASE("bootstrap indices deterministic and in range") {
    const auto a = bootstrap_indices(5, 3, 100), b = bootstrap_indices(5, 3, 100);
    CHECK(a == b);
    CHECK(a != bootstrap_indices(5, 4, 100));
    for (int i : a) CHECK((i >= 0 && i < 100));
  }
}
