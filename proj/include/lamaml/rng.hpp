#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lamaml {

// SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and stream splitting.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

// xoshiro256** 1.0 (Blackman, Vigna 2018), seeded from SplitMix64 as the
// authors recommend. All randomness in the library flows through this
// generator so runs are reproducible across platforms.
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static Rng from_state(const std::array<std::uint64_t, 4>& state) {
    Rng r;
    r.s_ = state;
    return r;
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_below(n)); }

  // Standard normal via Box-Muller; second draw is cached.
  double normal();

  // Fisher-Yates; own implementation so shuffles are identical everywhere.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // UniformRandomBitGenerator interface.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next(); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// FNV-1a 64-bit hash, used to derive per-purpose RNG streams from a label.
std::uint64_t fnv1a64(std::string_view s);

// Independent, labelled RNG stream: components ("init", "reservoir", ...)
// never consume each other's draws. State is xoshiro256** seeded from
// SplitMix64(master_seed ^ fnv1a64(label)).
Rng seeded_rng(std::uint64_t master_seed, std::string_view stream_label);

}  // namespace lamaml
