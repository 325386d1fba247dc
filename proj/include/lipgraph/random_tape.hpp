#pragma once

#include <cstdint>
#include <random>

namespace lipgraph {

/// Explicit stream of uniform [0,1) draws. Two runs handed tapes with the same
/// seed see the same stream; this is the shared-randomness coupling.
///
/// Draws come from std::mt19937_64 and are mapped to doubles with the top 53
/// bits, so the stream is identical across standard libraries.
class RandomTape {
public:
  explicit RandomTape(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  /// Next uniform draw in [0,1). Advances the counter.
  double next() {
    ++counter_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

  /// Independent child tape for (seed, index); used to give every trial a
  /// private stream that does not depend on scheduling.
  [[nodiscard]] static RandomTape derive(std::uint64_t seed, std::uint64_t index) {
    return RandomTape(mix(seed ^ mix(index + 0x632be59bd9b4e019ULL)));
  }

  /// splitmix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t counter_ = 0;
};

} // namespace lipgraph
