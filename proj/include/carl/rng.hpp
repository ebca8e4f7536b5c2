#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "carl/constants.hpp"

// Counter-based random numbers (Philox4x32-10, Salmon et al. 2011).
//
// Every variate is a pure function of (seed, substream, element, step), so
// simulation results do not depend on how the atom loop is split across
// threads, and streams for different atoms/steps never collide.

namespace carl::rng {

namespace detail {

inline constexpr std::uint32_t kPhiloxW32A = 0x9E3779B9u;
inline constexpr std::uint32_t kPhiloxW32B = 0xBB67AE85u;
inline constexpr std::uint32_t kPhiloxM4x32A = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM4x32B = 0xCD9E8D57u;

inline void mul_hilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo,
                     std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

}  // namespace detail

using Block = std::array<std::uint32_t, 4>;

// One 128-bit Philox4x32-10 block for counter (c0,c1,c2,c3) under key k.
inline Block philox4x32(std::uint64_t key, std::uint32_t c0, std::uint32_t c1,
                        std::uint32_t c2, std::uint32_t c3) {
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  Block x{c0, c1, c2, c3};
  for (int round = 0; round < 10; ++round) {
    std::uint32_t lo0, hi0, lo1, hi1;
    detail::mul_hilo(detail::kPhiloxM4x32A, x[0], lo0, hi0);
    detail::mul_hilo(detail::kPhiloxM4x32B, x[2], lo1, hi1);
    x = Block{hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
    k0 += detail::kPhiloxW32A;
    k1 += detail::kPhiloxW32B;
  }
  return x;
}

// Uniform double in (0,1) from 64 random bits. 52-bit grid with a half-step
// offset: both the offset sum and the product stay exactly representable, so
// the endpoints 0 and 1 can never be produced (safe for log()).
inline double u01(std::uint32_t lo, std::uint32_t hi) {
  const std::uint64_t bits =
      (static_cast<std::uint64_t>(hi) << 32) | static_cast<std::uint64_t>(lo);
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

// Substream tags: keep variates for different purposes on disjoint counters.
enum class Stream : std::uint32_t {
  init_position = 0,
  init_velocity = 1,
  langevin_kick = 2,
  kuramoto_kick = 3,
  kuramoto_freq = 4,
  scratch = 5,
};

// Addressed draws. `element` is the atom/oscillator index, `step` the time
// step (0 for initialization streams).
struct Draw {
  std::uint64_t seed;
  Stream stream;

  Block block(std::uint32_t element, std::uint64_t step) const {
    return philox4x32(seed, element, static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(step),
                      static_cast<std::uint32_t>(step >> 32));
  }

  double uniform01(std::uint32_t element, std::uint64_t step = 0) const {
    const Block b = block(element, step);
    return u01(b[0], b[1]);
  }

  // Standard-normal pair via Box-Muller on one Philox block.
  std::array<double, 2> normal_pair(std::uint32_t element,
                                    std::uint64_t step = 0) const {
    const Block b = block(element, step);
    const double u1 = u01(b[0], b[1]);
    const double u2 = u01(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phase = constants::two_pi * u2;
    return {r * std::cos(phase), r * std::sin(phase)};
  }

  double normal(std::uint32_t element, std::uint64_t step = 0) const {
    return normal_pair(element, step)[0];
  }
};

}  // namespace carl::rng
