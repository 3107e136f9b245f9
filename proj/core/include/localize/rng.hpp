#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace localize {

// Counter-based pseudo-random stream (splitmix64). Each stream is keyed by
// (seed, stream_id, substream); the i-th output is a hash of key + i, so
// streams can be created independently on any thread and always produce the
// same sequence. This is what makes trial-level parallelism bitwise
// reproducible regardless of scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : state_(key) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id,
                    std::uint64_t substream) {
    std::uint64_t k = mix(seed ^ 0x6a09e667f3bcc909ULL);
    k = mix(k ^ (stream_id * 0x9e3779b97f4a7c15ULL));
    k = mix(k ^ (substream * 0xbf58476d1ce4e5b9ULL));
    return Rng(k);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_open01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
  std::uint64_t uniform_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal via Box-Muller; the spare of each pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void normal_fill(std::span<double> out) {
    for (double& x : out) x = normal();
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace localize
