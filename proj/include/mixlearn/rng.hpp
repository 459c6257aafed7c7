#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "mixlearn/core.hpp"

namespace mixlearn {

/// Identifier of an independent random stream. Counter-based: any
/// (seed, stream) pair can be opened directly without sequential
/// splitting, which keeps replicate-parallel Monte Carlo reproducible.
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s) ^ b;
  return splitmix64(h);
}
}  // namespace detail

inline RngStream derive_stream(std::uint64_t seed, std::uint64_t replicate) {
  return RngStream{seed, replicate};
}

/// Open a child stream namespace keyed by `key`. The parent pair is
/// hashed into the seed so (parent, key) collisions across different
/// parents are negligible.
inline RngStream substream(const RngStream& base, std::uint64_t key) {
  return RngStream{detail::mix(base.seed, base.stream), key};
}

/// xoshiro256++ engine seeded by splitmix64 expansion of (seed, stream).
/// Identical streams reproduce bit-identical sequences.
class Rng {
 public:
  explicit Rng(RngStream stream) {
    std::uint64_t s = detail::mix(stream.seed, stream.stream);
    for (auto& word : state_) word = detail::splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1].
  double uniform01_open_low() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; pairs are cached so consumption
  /// stays deterministic per stream.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform01_open_low();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    have_cached_ = true;
    return r * std::cos(angle);
  }

  Vec normal_vector(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

  /// Centered Laplace with the given scale (density exp(-|z|/scale)/(2 scale)).
  double laplace(double scale) {
    const double u = uniform01() - 0.5;
    return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
  }

  /// Rademacher sign, +1 or -1.
  int pick_sign() { return (next_u64() >> 63) ? 1 : -1; }

  /// Index j with probability weights[j]; weights assumed to sum to 1.
  int categorical(const std::vector<double>& weights) {
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < weights.size(); ++j) {
      acc += weights[j];
      if (u < acc) return static_cast<int>(j);
    }
    return static_cast<int>(weights.size()) - 1;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace mixlearn
