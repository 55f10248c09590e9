#include "skillstate/rng.hpp"

namespace skillstate {

std::uint64_t derive_seed(std::uint64_t base,
                          std::initializer_list<std::uint64_t> lanes) {
  // Chain one full splitmix64 avalanche per lane, feeding each output
  // back as the next state. Order-sensitive by construction, and a
  // lone mixing step keeps derive_seed(b, {}) clear of the raw base.
  std::uint64_t s = base;
  std::uint64_t acc = split_mix64(s);
  for (std::uint64_t lane : lanes) {
    s = acc ^ lane;
    acc = split_mix64(s);
  }
  return acc;
}

}  // namespace skillstate
