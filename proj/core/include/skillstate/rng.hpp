#pragma once

#include <cstdint>
#include <initializer_list>

namespace skillstate {

/// One step of splitmix64. Chosen over <random> engines because its output
/// is fully specified by the algorithm, so seeded runs agree across
/// platforms and standard-library versions.
constexpr std::uint64_t split_mix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Mixes a base seed with a list of stream coordinates (cell, group,
/// episode, ...) into an independent 64-bit seed. Order-sensitive, so
/// (a, b) and (b, a) name different streams.
std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> lanes);

/// Deterministic random stream with platform-independent output.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return split_mix64(state_); }

  /// Uniform double in [0, 1), from the top 53 bits of one draw.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). The modulo bias is below 2^-50 for the
  /// bounds used here (all far under 2^32) and keeps the draw count at
  /// exactly one per call, which the seeded-trace format relies on.
  std::uint64_t bounded(std::uint64_t n) { return next_u64() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace skillstate
