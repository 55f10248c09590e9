#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "skillstate/graph.hpp"
#include "support/ref_state.hpp"
#include "support/state_cases.hpp"

// Reference answers for edge derivation and reachability pruning, computed
// by plain nested loops over the reference state encoding. Only the type
// conversion is shared with the library; the semantics are restated here.
namespace testsupport {

struct RefSkill {
  std::string id;
  RefPattern pat;
  std::string scene;
  std::string left;
  std::string right;
};

inline std::vector<RefSkill> ref_skills(const skillstate::SkillStateGraph& g) {
  std::vector<RefSkill> out;
  for (const auto& [id, sk] : g.skills) {
    out.push_back({id.name, encode(sk.pre), encode_scene(sk.delta.scene),
                   encode_gripper_op(sk.delta.left),
                   encode_gripper_op(sk.delta.right)});
  }
  return out;
}

inline std::vector<RefState> ref_states(const skillstate::SkillStateGraph& g) {
  std::vector<std::string> grippers{""};
  for (const auto& o : g.objects) {
    grippers.push_back(o.name);
  }
  std::vector<RefState> out;
  for (const auto& l : g.locations) {
    for (const auto& a : grippers) {
      for (const auto& b : grippers) {
        out.push_back({l.name, a, b});
      }
    }
  }
  return out;
}

inline std::set<std::pair<std::string, std::string>> ref_derive_edges(
    const skillstate::SkillStateGraph& g) {
  auto skills = ref_skills(g);
  auto states = ref_states(g);
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& i : skills) {
    for (const auto& j : skills) {
      for (const auto& s : states) {
        if (!ref_matches(s, i.pat)) {
          continue;
        }
        auto after = ref_apply(s, i.scene, i.left, i.right);
        if (after && ref_matches(*after, j.pat)) {
          edges.insert({i.id, j.id});
          break;
        }
      }
    }
  }
  return edges;
}

// Skills usable within `depth` executions from `start`; depth < 0 means the
// full closure.
inline std::set<std::string> ref_reachable_skills(
    const skillstate::SkillStateGraph& g,
    const skillstate::EmbodimentState& start, int depth) {
  auto skills = ref_skills(g);
  std::set<RefState> seen{encode(start)};
  std::vector<RefState> frontier{encode(start)};
  std::set<std::string> used;
  for (int level = 0; !frontier.empty() && (depth < 0 || level < depth);
       ++level) {
    std::vector<RefState> next;
    for (const auto& s : frontier) {
      for (const auto& k : skills) {
        if (!ref_matches(s, k.pat)) {
          continue;
        }
        auto after = ref_apply(s, k.scene, k.left, k.right);
        if (!after) {
          continue;
        }
        used.insert(k.id);
        if (seen.insert(*after).second) {
          next.push_back(*after);
        }
      }
    }
    frontier = std::move(next);
  }
  return used;
}

}  // namespace testsupport
