#pragma once

#include <cstdint>
#include <random>

namespace fic {

// splitmix64 used as a counter-based generator. Replicate i of a run keyed by
// (seed, i) owns its own stream, so Monte Carlo results do not depend on
// chunking or on how many threads consumed the replicates.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (0xd1342543de82ef95ull * (stream + 1)));
  return g();
}

inline SplitMix64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  return SplitMix64(mix_seed(seed, stream));
}

// Per-stream standard normal source. Keeps one distribution object alive so
// the polar method's cached spare deviate is used within a stream.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream) : rng_(mix_seed(seed, stream)) {}
  double operator()() { return normal_(rng_); }
  SplitMix64& engine() { return rng_; }

 private:
  SplitMix64 rng_;
  std::normal_distribution<double> normal_;
};

}  // namespace fic
