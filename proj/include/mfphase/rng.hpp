#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace mfp {

// Philox4x32-10 counter-based generator (Salmon et al. 2011).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t M0 = 0xD2511F53u;
  static constexpr std::uint32_t M1 = 0xCD9E8D57u;
  static constexpr std::uint32_t W0 = 0x9E3779B9u;
  static constexpr std::uint32_t W1 = 0xBB67AE85u;

  static constexpr Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += W0;
        key[1] += W1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// Uniform on (0, 1] from two 32-bit words (53 random bits), never exactly zero.
inline double u01_open_closed(std::uint32_t hi, std::uint32_t lo) noexcept {
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 21) ^ (lo >> 11);
  return (static_cast<double>(bits & ((1ull << 53) - 1)) + 1.0) * 0x1.0p-53;
}

// Deterministic normal variates addressed by (seed, stream, step, slot).
// Stream ids identify particles; a separate domain tag separates independent families
// (initial conditions, reference ensembles, bootstrap) drawn from the same seed.
class NormalStream {
 public:
  NormalStream() = default;
  NormalStream(std::uint64_t seed, std::uint32_t domain) noexcept : seed_(seed), domain_(domain) {}

  // Two independent N(0,1) values for the given address; `pair` indexes successive pairs.
  void pair(std::uint32_t stream, std::uint64_t step, std::uint32_t pair_index, double& z0,
            double& z1) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32), pair_index,
                                  static_cast<std::uint32_t>(seed_ >> 32) ^ (domain_ * 0x9E3779B9u)};
    const Philox4x32::Key key{stream, static_cast<std::uint32_t>(seed_)};
    const auto r = Philox4x32::block(ctr, key);
    const double u1 = u01_open_closed(r[0], r[1]);
    const double u2 = u01_open_closed(r[2], r[3]);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    z0 = rad * std::cos(ang);
    z1 = rad * std::sin(ang);
  }

  // Fills out[0..n) with normals for (stream, step).
  void fill(std::uint32_t stream, std::uint64_t step, double* out, int n) const noexcept {
    int j = 0;
    std::uint32_t p = 0;
    for (; j + 1 < n; j += 2, ++p) pair(stream, step, p, out[j], out[j + 1]);
    if (j < n) {
      double spare;
      pair(stream, step, p, out[j], spare);
    }
  }

  // Uniform on (0,1] at an address (used for bootstrap resampling).
  double uniform(std::uint32_t stream, std::uint64_t step, std::uint32_t slot) const noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32), slot,
                                  static_cast<std::uint32_t>(seed_ >> 32) ^ (domain_ * 0x9E3779B9u) ^ 0x5bd1e995u};
    const Philox4x32::Key key{stream, static_cast<std::uint32_t>(seed_)};
    const auto r = Philox4x32::block(ctr, key);
    return u01_open_closed(r[0], r[1]);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t domain() const noexcept { return domain_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint32_t domain_ = 0;
};

namespace rng_domain {
inline constexpr std::uint32_t dynamics = 0;
inline constexpr std::uint32_t initial = 1;
inline constexpr std::uint32_t reference = 2;
inline constexpr std::uint32_t bootstrap = 3;
inline constexpr std::uint32_t synthetic = 4;
inline constexpr std::uint32_t sampling = 5;
}  // namespace rng_domain

}  // namespace mfp
