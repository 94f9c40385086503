#pragma once

#include <cstdint>

namespace gnes {

// xoshiro256++ seeded through splitmix64. Self-contained so that runs are
// bit-reproducible across standard libraries and platforms; std::*_distribution
// implementations are not portable, so everything derives from next() here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 stream expands the seed into the four state words
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next() {
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

  // Unbiased integer in [0, n). Lemire's multiply-shift with rejection.
  std::uint64_t uniform_int(std::uint64_t n) {
    unsigned __int128 mul = static_cast<unsigned __int128>(next()) * n;
    auto low = static_cast<std::uint64_t>(mul);
    if (low < n) {
      const std::uint64_t threshold = -n % n;
      while (low < threshold) {
        mul = static_cast<unsigned __int128>(next()) * n;
        low = static_cast<std::uint64_t>(mul);
      }
    }
    return static_cast<std::uint64_t>(mul >> 64);
  }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t state_[4];
};

// FNV-1a over a byte string; used for content-addressed cache keys.
inline std::uint64_t fnv1a64(const char* data, std::size_t len) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace gnes
