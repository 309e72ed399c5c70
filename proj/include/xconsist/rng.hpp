#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace xconsist {

// Counter-based stream: "splitmix64-ctr/v1". Value i of stream s under seed k
// is a pure function of (k, s, i), so trials can run in any order or on any
// thread and still draw identical numbers.
inline constexpr const char* kCounterRngName = "splitmix64-ctr/v1";

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t counter_bits(std::uint64_t seed, std::uint64_t stream,
                                     std::uint64_t index) {
  std::uint64_t key = splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL);
  key = splitmix64_mix(key ^ (stream * 0xd1b54a32d192ed03ULL));
  return splitmix64_mix(key + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

// Uniform double in [0, 1) with 53 random bits.
constexpr double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double counter_uniform(std::uint64_t seed, std::uint64_t stream,
                                 std::uint64_t index) {
  return bits_to_unit(counter_bits(seed, stream, index));
}

// Sequential generator over the same mixing function, for code that wants a
// conventional engine (uniform_01/normal helpers below keep results identical
// across standard-library implementations).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  double uniform01() { return bits_to_unit((*this)()); }

  // Box-Muller; one value per call.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t state_;
};

}  // namespace xconsist
