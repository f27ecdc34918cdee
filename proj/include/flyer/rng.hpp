#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace flyer {

/// Counter-based random stream (SplitMix64 over key + counter).
///
/// Every source of randomness in a run is a named substream of the single
/// run seed, so state is two integers: trivially checkpointable and
/// platform-independent. Gaussian draws consume exactly two counter steps
/// (no cached spare), which keeps replay accounting simple.
class Rng {
 public:
  Rng() = default;
  Rng(std::uint64_t key, std::uint64_t counter) : key_(key), counter_(counter) {}

  /// Derive the substream `name[index]` of a master seed.
  static Rng substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    std::uint64_t k = mix(seed ^ fnv1a(name));
    k = mix(k + 0x9e3779b97f4a7c15ull * (index + 1));
    return Rng(k, 0);
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n) {
    // 64-bit multiply-shift; bias is negligible for n << 2^64.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal via Box-Muller. Consumes two draws.
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }
  void set_counter(std::uint64_t c) { counter_ = c; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace flyer
