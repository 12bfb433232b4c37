#pragma once

#include <cmath>
#include <cstdint>

namespace waoi {

// All randomness in the project flows through RngStream. A stream is keyed by
// (master_seed, run, agent, purpose), so distinct agents / replications /
// roles never share state and any single stream can be reproduced in
// isolation.

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamPurpose : std::uint64_t {
  generic = 0,
  decision = 1,     // per-agent scheduling randomization
  plant_noise = 2,  // process noise W
  initial_state = 3,
  bs_projection = 4,  // base-station hard-bandwidth projection
};

struct StreamId {
  std::uint64_t run = 0;
  std::uint64_t agent = 0;
  StreamPurpose purpose = StreamPurpose::generic;
};

// xoshiro256++ with splitmix64 seeding.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t master_seed, StreamId id) {
    // Fold the label into the seed chain; splitmix64 decorrelates
    // neighbouring labels.
    std::uint64_t s = master_seed;
    s ^= splitmix64_next(s) + id.run;
    s ^= splitmix64_next(s) + id.agent;
    s ^= splitmix64_next(s) + static_cast<std::uint64_t>(id.purpose);
    for (auto& word : state_) word = splitmix64_next(s);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

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

  // Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Standard normal via Marsaglia polar; spare value cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  // Unbiased uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t threshold = (~n + 1) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % n;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace waoi
