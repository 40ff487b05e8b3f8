#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace lrf {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives the seed of an independent stream from a parent seed and a
/// counter. Derivations chain, so `derive_seed(s, a, b)` names stream
/// (a, b) beneath `s`. Every random draw in the library flows from one
/// master seed through this function.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
  return mix64(parent ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream,
                                    Rest... rest) noexcept {
  return derive_seed(derive_seed(parent, stream), static_cast<std::uint64_t>(rest)...);
}

/// Thin wrapper over mt19937_64 whose derived draws are defined here rather
/// than by the standard library's distributions, so results do not depend on
/// the toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lrf
