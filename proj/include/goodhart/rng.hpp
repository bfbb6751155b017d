#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace goodhart {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32-10 block function (Salmon et al., SC'11).
inline Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) {
  constexpr std::uint32_t m0 = 0xD2511F53u;
  constexpr std::uint32_t m1 = 0xCD9E8D57u;
  constexpr std::uint32_t w0 = 0x9E3779B9u;
  constexpr std::uint32_t w1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += w0;
      key[1] += w1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Maps 64 random bits to a double in (0, 1].
inline double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Maps 32 random bits to a double in (0, 1].
inline double bits32_to_unit(std::uint32_t bits) {
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-32;
}

// Counter-based stream: block i of stream s under seed k is a pure function
// of (k, s, i), so any draw can be regenerated without replaying the stream.
struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::uint64_t counter = 0;

  Philox4x32Counter block(std::uint64_t index) const {
    const Philox4x32Counter ctr{static_cast<std::uint32_t>(index),
                                static_cast<std::uint32_t>(index >> 32),
                                static_cast<std::uint32_t>(stream),
                                static_cast<std::uint32_t>(stream >> 32)};
    const Philox4x32Key key{static_cast<std::uint32_t>(seed),
                            static_cast<std::uint32_t>(seed >> 32)};
    return philox4x32(ctr, key);
  }

  // Two independent uniforms in (0, 1] for draw number `index`.
  std::array<double, 2> uniform_pair(std::uint64_t index) const {
    const auto b = block(index);
    return {bits_to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]),
            bits_to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3])};
  }

  double uniform_at(std::uint64_t index) const { return uniform_pair(index)[0]; }

  double next() { return uniform_at(counter++); }
};

namespace detail {

// Cumulative Poisson(1) probabilities P[K <= k] for k = 0..17; beyond that the
// remaining mass is below 1e-16.
inline constexpr std::array<double, 18> kPoisson1Cdf = [] {
  std::array<double, 18> c{};
  double p = 0.36787944117144233;
  double acc = p;
  c[0] = acc;
  for (int k = 1; k < 18; ++k) {
    p /= k;
    acc += p;
    c[static_cast<std::size_t>(k)] = acc;
  }
  return c;
}();

}  // namespace detail

// Inverse-CDF Poisson(1) draw from a uniform in (0, 1].
inline int poisson1_from_uniform(double u) {
  int k = 0;
  while (k < 17 && u > detail::kPoisson1Cdf[static_cast<std::size_t>(k)]) ++k;
  return k;
}

namespace detail {

inline int poisson1_from_bits32_slow(std::uint32_t bits) {
  const double scaled = static_cast<double>(bits) + 1.0;
  int k = 0;
  while (k < 17 && scaled > kPoisson1Cdf[static_cast<std::size_t>(k)] * 0x1.0p32) ++k;
  return k;
}

// Draw indexed by the top 16 bits; 255 marks buckets that straddle a CDF step.
inline const std::vector<std::uint8_t>& poisson1_bucket_table() {
  static const std::vector<std::uint8_t> table = [] {
    std::vector<std::uint8_t> t(1u << 16);
    for (std::uint32_t h = 0; h < (1u << 16); ++h) {
      const int lo = poisson1_from_bits32_slow(h << 16);
      const int hi = poisson1_from_bits32_slow((h << 16) | 0xFFFFu);
      t[h] = lo == hi ? static_cast<std::uint8_t>(lo) : std::uint8_t{255};
    }
    return t;
  }();
  return table;
}

}  // namespace detail

// Same draw as poisson1_from_uniform(bits32_to_unit(bits)), via a table.
inline int poisson1_from_bits32(std::uint32_t bits) {
  const std::uint8_t k = detail::poisson1_bucket_table()[bits >> 16];
  return k != 255 ? k : detail::poisson1_from_bits32_slow(bits);
}

}  // namespace goodhart
