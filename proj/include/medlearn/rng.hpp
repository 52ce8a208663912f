#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace medlearn {

// splitmix64; used to expand seeds and to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derive the seed of an independent substream from (seed, tag). Tags are
// role constants or loop indices; chaining calls nests streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + (tag << 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b >> 1);
}

// Stream roles, so substreams of the same index never collide across uses.
namespace rng_tag {
constexpr std::uint64_t covariates = 0x10;
constexpr std::uint64_t assignment = 0x11;
constexpr std::uint64_t noise1 = 0x12;
constexpr std::uint64_t noise2 = 0x13;
constexpr std::uint64_t tree = 0x20;
constexpr std::uint64_t model_g0 = 0x30;
constexpr std::uint64_t model_g1 = 0x31;
constexpr std::uint64_t model_gm0 = 0x32;
constexpr std::uint64_t model_gm1 = 0x33;
constexpr std::uint64_t model_gy1 = 0x34;
constexpr std::uint64_t tsne = 0x40;
constexpr std::uint64_t kmeans = 0x41;
constexpr std::uint64_t replication = 0x50;
constexpr std::uint64_t bootstrap = 0x60;
constexpr std::uint64_t grid = 0x70;
}  // namespace rng_tag

// xoshiro256++ with a Box-Muller normal. Fully specified so that seeded
// results are reproducible independent of the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
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

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased integer in [0, bound) via rejection.
  std::uint64_t uniform_int(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

  // Standard normal, Box-Muller; the spare deviate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u in (0,1] so log(u) is finite.
    const double u = 1.0 - uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    const double theta = 2.0 * M_PI * v;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace medlearn
