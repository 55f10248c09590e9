#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skillstate/result.hpp"
#include "skillstate/state.hpp"

namespace skillstate {

/// Identifier of a semantic skill node, unique within a graph.
struct SkillId {
  std::string name;
  auto operator<=>(const SkillId&) const = default;
};

/// Identifier of an action-level primitive.
struct ActionSkillId {
  std::string name;
  auto operator<=>(const ActionSkillId&) const = default;
};

enum class SkillCategory : std::uint8_t {
  Pick,
  Place,
  Navigate,
  Open,
  Close,
  Recovery,
  Other,
};

std::string_view to_string(SkillCategory category);
std::optional<SkillCategory> parse_category(std::string_view text);

/// Fine-grained primitive with no state semantics of its own; semantic
/// skills reference these by id.
struct ActionSkill {
  ActionSkillId id;
  std::string label;
  bool operator==(const ActionSkill&) const = default;
};

/// Graph node: a skill with a precondition pattern and the state variation
/// its execution induces.
struct SemanticSkill {
  SkillId id;
  std::string label;
  SkillCategory category = SkillCategory::Other;
  Precondition pre = Precondition::any();
  StateDelta delta;
  std::vector<ActionSkillId> action_refs;
  bool operator==(const SemanticSkill&) const = default;
};

/// Whether the edge set was listed in the source document or computed
/// from the feasibility rule.
enum class EdgeMode : std::uint8_t { Declared, Derived };

using Edge = std::pair<SkillId, SkillId>;

struct SkillStateGraph {
  std::set<LocationId> locations;
  std::set<ObjectId> objects;
  std::map<ActionSkillId, ActionSkill> actions;
  std::map<SkillId, SemanticSkill> skills;
  std::set<Edge> edges;
  EdgeMode edge_mode = EdgeMode::Derived;

  /// |locations| x (|objects|+1)^2, the size of the finite state space.
  std::size_t state_space_size() const {
    return locations.size() * (objects.size() + 1) * (objects.size() + 1);
  }

  bool operator==(const SkillStateGraph&) const = default;
};

struct TopoNode {
  SkillId id;
  std::string label;
  SkillCategory category = SkillCategory::Other;
  bool operator==(const TopoNode&) const = default;
};

/// State-stripped projection of a graph: skill nodes and adjacency only.
/// Every node id keys an adjacency entry; successor lists are sorted.
struct TopoView {
  std::vector<TopoNode> nodes;  // sorted by id
  std::map<SkillId, std::vector<SkillId>> adjacency;

  bool contains(const SkillId& id) const { return adjacency.count(id) != 0; }
  bool operator==(const TopoView&) const = default;
};

/// True iff the skill's precondition matches and its delta applies.
bool executable(const EmbodimentState& state, const SemanticSkill& skill);

/// All states over the graph's declared vocabulary, in a fixed order
/// (location-major, then left gripper, then right; contents ordered
/// empty-first then by object name).
std::vector<EmbodimentState> enumerate_states(const SkillStateGraph& graph);

inline constexpr std::size_t kDefaultMaxStates = 1'000'000;

struct StateSpaceTooLarge {
  std::size_t states;
  std::size_t bound;
};

/// Computes the feasible-transition edge set: (i, j) is an edge iff some
/// state matched by pre_i maps under delta_i to a state matched by pre_j.
/// Enumerates the full state space; refuses when it exceeds `max_states`.
Result<std::set<Edge>, StateSpaceTooLarge> derive_edges(
    const SkillStateGraph& graph, std::size_t max_states = kDefaultMaxStates);

/// Projects the graph onto nodes and adjacency, dropping all state data.
TopoView topo_view(const SkillStateGraph& graph);

inline constexpr int kUnboundedDepth = -1;

/// TopoView restricted to skills executable within `depth` executions
/// starting from `state` (kUnboundedDepth for the full reachable closure).
/// The result's nodes are always a subset of topo_view's.
TopoView prune_view(const SkillStateGraph& graph, const EmbodimentState& state,
                    int depth);

}  // namespace skillstate
