// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

namespace ksep {

// Splittable counter-based RNG (SplitMix64 finalizer over an advancing
// counter).  Replica streams come from split(), so results do not depend on
// thread scheduling.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Stream for substream `index` (one per replica / test cell).
  SplitMix64 split(std::uint64_t index) const {
    return SplitMix64(mix(state_ ^ mix(index + 0x632BE59BD9B4E019ULL)));
  }

  // Uniform in [0, 1).
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double exponential(double rate) { return -std::log1p(-uniform01()) / rate; }

  // Uniform integer in [0, n); multiply-shift (bias < n / 2^64).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace ksep
