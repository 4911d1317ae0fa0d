#include "pathflow/rng.hpp"

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace pathflow {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

Philox4x32Counter philox4x32(Philox4x32Counter ctr, Philox4x32Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double uniform_open(std::uint32_t hi, std::uint32_t lo) noexcept {
  // 52 bits so that the midpoint offset stays exactly representable below 1.
  const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 20) ^ (lo >> 12);
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

double inverse_normal_cdf(double u) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u); }

CounterNormal::CounterNormal(std::uint64_t seed) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

double CounterNormal::normal(std::uint64_t a, std::uint32_t b, std::uint32_t c) const {
  const Philox4x32Counter out = philox4x32(
      {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), b, c >> 1}, key_);
  const bool second = (c & 1u) != 0;
  return inverse_normal_cdf(second ? uniform_open(out[2], out[3]) : uniform_open(out[0], out[1]));
}

}  // namespace pathflow
