#pragma once

#include <cstdint>
#include <random>

namespace refinekit {

// Seeded 64-bit Mersenne Twister (std::mt19937_64). Substreams for parallel
// workers or separate purposes (init, batching, prior draws) are derived by
// passing (seed, stream) through SplitMix64, so every stream is a pure
// function of the run seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

  double normal() { return normal_(engine_); }
  double uniform01() { return uniform_(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Stream ids used across the library.
namespace streams {
inline constexpr std::uint64_t kImageHeadInit = 1;
inline constexpr std::uint64_t kTextHeadInit = 2;
inline constexpr std::uint64_t kShuffle = 3;
inline constexpr std::uint64_t kPrior = 4;
inline constexpr std::uint64_t kSynth = 5;
}  // namespace streams

}  // namespace refinekit
