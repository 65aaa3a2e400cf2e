#pragma once

#include <cstdint>
#include <limits>

namespace slowsep {

// xoshiro256++ (Blackman & Vigna). Seeded through splitmix64 so that
// consecutive integer seeds give unrelated streams. Satisfies
// UniformRandomBitGenerator, so it plugs into <random> distributions.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& w : state_) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t x = z;
      x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
      x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
      state_index_assign(w, x ^ (x >> 31));
    }
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() {
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

  // Uniform double in [0,1) with 53 random bits.
  double u01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Bernoulli(p) draw.
  bool bernoulli(double p) { return u01() < p; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static void state_index_assign(std::uint64_t& w, std::uint64_t v) { w = v; }

  std::uint64_t state_[4];
};

}  // namespace slowsep
