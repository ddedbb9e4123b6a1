#pragma once

#include <cstdint>
#include <stdexcept>

#include "enrich/math/normal.hpp"

namespace enrich::math {

// Counter-based stream: every draw is a pure function of
// (seed, stream_id, counter), so replicates can be generated independently
// and in any order. Distinct stream ids give statistically independent
// sequences. Single-owner mutable state; never share one instance across
// threads.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_(derive_key(seed, stream_id)), counter_(0) {}

  // Child stream with an independent key; used to give each simulated
  // subject its own deterministic draw sequence.
  RngStream substream(std::uint64_t k) const { return RngStream(key_, k); }

  std::uint64_t next_u64() { return mix(key_ + (counter_++) * kGamma); }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1), never returning either endpoint.
  double uniform_open() { return ((next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  // Standard normal through the inverse cdf; one counter tick per draw.
  double normal() { return norm_quantile(uniform_open()); }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::domain_error("exponential: rate must be > 0");
    double u = uniform();
    return -std::log1p(-u) / rate;
  }

  std::uint64_t counter() const { return counter_; }

 private:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) {
    // Two mixing rounds keep nearby (seed, stream) pairs decorrelated.
    std::uint64_t k = mix(seed + kGamma) ^ mix(stream_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    return mix(k + kGamma);
  }

  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace enrich::math
