#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "skillstate/graph.hpp"
#include "support/graph_gen.hpp"
#include "support/ref_graph.hpp"
#include "support/ref_verify.hpp"
#include "support/testrng.hpp"

// Layered sweep in the reference encoding: per depth, keep for every
// (state, goals-done) node the lexicographically least plan reaching it,
// and return the least completing plan at the first depth one exists.
namespace testsupport {

inline std::optional<std::vector<std::string>> ref_shortest_plan(
    const skillstate::SkillStateGraph& g,
    const skillstate::EmbodimentState& initial,
    const std::vector<std::string>& goals, int max_depth = 64) {
  if (goals.empty()) {
    return std::vector<std::string>{};
  }
  auto skills = ref_skills(g);
  std::sort(skills.begin(), skills.end(),
            [](const RefSkill& a, const RefSkill& b) { return a.id < b.id; });

  using Key = std::pair<RefState, std::size_t>;
  std::map<Key, std::vector<std::string>> layer;
  layer[{encode(initial), 0}] = {};
  for (int depth = 0; depth < max_depth && !layer.empty(); ++depth) {
    std::map<Key, std::vector<std::string>> next;
    std::optional<std::vector<std::string>> completed;
    for (const auto& [key, plan] : layer) {
      for (const auto& k : skills) {
        if (!ref_matches(key.first, k.pat)) {
          continue;
        }
        auto ns = ref_apply(key.first, k.scene, k.left, k.right);
        if (!ns) {
          continue;
        }
        std::size_t ng = key.second + (k.id == goals[key.second] ? 1 : 0);
        auto np = plan;
        np.push_back(k.id);
        if (ng == goals.size()) {
          if (!completed || np < *completed) {
            completed = std::move(np);
          }
          continue;
        }
        auto [it, fresh] = next.try_emplace(Key{*ns, ng}, np);
        if (!fresh && np < it->second) {
          it->second = std::move(np);
        }
      }
    }
    if (completed) {
      return completed;
    }
    layer = std::move(next);
  }
  return std::nullopt;
}

struct RefTask {
  skillstate::EmbodimentState initial;
  std::vector<std::string> goals;
};

// Solvable by construction: goals are an ordered sample of the skills a
// feasible random walk actually executed.
inline std::optional<RefTask> random_solvable_task(
    const skillstate::SkillStateGraph& g, TestRng& rng) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    auto start = random_state_over(g, rng);
    auto walk = ref_random_walk(g, start, 3 + rng.below(6), rng);
    if (walk.empty()) {
      continue;
    }
    int count = 1 + rng.below(std::min<int>(3, static_cast<int>(walk.size())));
    std::set<int> picked;
    while (static_cast<int>(picked.size()) < count) {
      picked.insert(rng.below(static_cast<int>(walk.size())));
    }
    RefTask task;
    task.initial = start;
    for (int index : picked) {
      task.goals.push_back(walk[index]);
    }
    return task;
  }
  return std::nullopt;
}

}  // namespace testsupport
