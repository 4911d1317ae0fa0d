#pragma once

#include <array>
#include <cstdint>

namespace pathflow {

using Philox4x32Counter = std::array<std::uint32_t, 4>;
using Philox4x32Key = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., SC'11).
Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept;

// Uniform in (0, 1) from 52 random bits at cell midpoints; never 0 or 1.
double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept;

// Standard normal by inverse CDF.
double inverse_normal_cdf(double u);

/**
 * Stateless Gaussian stream keyed by a 64-bit seed.
 *
 * normal(a, b, c) is a pure function of (seed, a, b, c); each Philox block
 * yields two normals, selected by the low bit of c.
 */
class CounterNormal {
 public:
  explicit CounterNormal(std::uint64_t seed) noexcept;
  double normal(std::uint64_t a, std::uint32_t b, std::uint32_t c) const;

 private:
  Philox4x32Key key_;
};

}  // namespace pathflow
