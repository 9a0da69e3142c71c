#pragma once
// Deterministic, cross-platform random number generator.
//
// The standard library distributions (std::normal_distribution etc.) are not
// required to produce identical streams across implementations, so everything
// downstream of a seed is generated here from first principles:
// xoshiro256++ for the raw 64-bit stream, splitmix64 for seeding, an explicit
// 53-bit mantissa conversion for uniforms, and Box-Muller for normals.
// Identical seeds therefore give bitwise-identical draws on every platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace sdgan {

namespace detail {

// splitmix64: used to expand a single seed into the 256-bit xoshiro state and
// to derive sub-stream seeds. Reference: Steele, Lea & Flood (2014).
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace detail

/// xoshiro256++ generator with Box-Muller normals and seed-derived
/// sub-streams. Copyable; copies continue independently from the same state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = detail::splitmix64(sm);
  }

  std::uint64_t seed() const { return seed_; }

  /// Raw 64-bit draw (xoshiro256++).
  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl64(state_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    if (!(lo < hi)) throw std::invalid_argument("Rng::uniform: require lo < hi");
    return lo + (hi - lo) * uniform();
  }

  /// Unbiased-enough integer in [0, n) via 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  /// Standard normal draw (Box-Muller; generates pairs, caches the spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double two_pi_u2 = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(two_pi_u2);
    has_spare_ = true;
    return r * std::cos(two_pi_u2);
  }

  /// Derives an independent sub-stream from the *original seed* and a tag.
  /// Splitting does not consume or depend on draws made so far, so stream
  /// layouts stay stable even when one consumer draws a variable amount.
  Rng split(std::uint64_t stream_tag) const {
    std::uint64_t mix = seed_ ^ (0x9e3779b97f4a7c15ULL * (stream_tag + 1));
    return Rng(detail::splitmix64(mix));
  }

  // --- state access for checkpointing -------------------------------------
  struct State {
    std::uint64_t seed;
    std::array<std::uint64_t, 4> words;
    double spare;
    bool has_spare;
  };

  State save_state() const { return State{seed_, state_, spare_, has_spare_}; }

  static Rng restore(const State& s) {
    Rng r(s.seed);
    r.state_ = s.words;
    r.spare_ = s.spare;
    r.has_spare_ = s.has_spare;
    return r;
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace sdgan
