#include <benchmark/benchmark.h>

#include <vector>

#include "skillstate/rng.hpp"
#include "skillstate/state.hpp"

using namespace skillstate;

namespace {

std::vector<std::pair<EmbodimentState, StateDelta>> make_cases(size_t n) {
  const std::vector<std::string> locs = {"pantry", "table", "sink", "hall"};
  const std::vector<std::string> objs = {"bowl", "cup", "jar"};
  RandomStream rng(7);
  std::vector<std::pair<EmbodimentState, StateDelta>> cases;
  cases.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    auto gripper = [&]() -> GripperContent {
      auto k = rng.bounded(objs.size() + 1);
      if (k == 0) {
        return std::nullopt;
      }
      return ObjectId{objs[k - 1]};
    };
    EmbodimentState st{LocationId{locs[rng.bounded(locs.size())]}, gripper(),
                       gripper()};
    StateDelta d;
    if (rng.bounded(2) == 0) {
      auto a = rng.bounded(locs.size());
      auto b = rng.bounded(locs.size());
      d.scene = MoveOp{LocationId{locs[a]}, LocationId{locs[b]}};
    }
    auto op = [&]() {
      auto k = rng.bounded(3);
      if (k == 0) {
        return GripperOp::none();
      }
      ObjectId obj{objs[rng.bounded(objs.size())]};
      return k == 1 ? GripperOp::add(obj) : GripperOp::sub(obj);
    };
    d.left = op();
    d.right = op();
    cases.emplace_back(std::move(st), std::move(d));
  }
  return cases;
}

void BM_ApplyDelta(benchmark::State& bench) {
  auto cases = make_cases(1024);
  size_t i = 0;
  for (auto _ : bench) {
    const auto& [st, d] = cases[i++ & 1023];
    auto r = apply_delta(st, d);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ApplyDelta);

void BM_MatchesImplied(benchmark::State& bench) {
  auto cases = make_cases(1024);
  std::vector<std::pair<EmbodimentState, Precondition>> pats;
  pats.reserve(cases.size());
  for (const auto& [st, d] : cases) {
    pats.emplace_back(st, implied_precondition(d));
  }
  size_t i = 0;
  for (auto _ : bench) {
    const auto& [st, pre] = pats[i++ & 1023];
    bool m = matches(st, pre);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_MatchesImplied);

}  // namespace
