#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace asalpp {

// Portable deterministic randomness. The standard library distributions are
// implementation-defined, so every stochastic component in the project draws
// from these primitives instead.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Mixes two 64-bit values into a new seed (used to derive per-iteration and
/// per-node streams from one run seed).
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (0x9E3779B97F4A7C15ULL + (b << 6) + (b >> 2));
  splitmix64(s);
  return splitmix64(s);
}

inline std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s) { return fnv1a64(s.data(), s.size()); }

/// Seeded stream of uniform and standard-normal doubles (splitmix64 +
/// Box-Muller). Deterministic across platforms up to libm rounding.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // 1 - u keeps the log argument in (0, 1].
    double u1 = 1.0 - next_uniform();
    double u2 = next_uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace asalpp
