#pragma once

#include <cstdint>

// Test-local generator for building random cases. Deliberately a different
// algorithm family from the library's stream so the two cannot mask each
// other's bugs.
namespace testsupport {

struct TestRng {
  std::uint64_t s;

  explicit TestRng(std::uint64_t seed) : s(seed ? seed : 0x2545f4914f6cdd1dULL) {}

  std::uint64_t next() {
    // xorshift64*
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return s * 0x2545f4914f6cdd1dULL;
  }

  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

  bool chance(int num, int den) { return below(den) < num; }
};

}  // namespace testsupport
