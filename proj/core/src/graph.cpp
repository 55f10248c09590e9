#include "skillstate/graph.hpp"

#include <algorithm>
#include <cstddef>

namespace skillstate {

std::string_view to_string(SkillCategory category) {
  switch (category) {
    case SkillCategory::Pick:
      return "Pick";
    case SkillCategory::Place:
      return "Place";
    case SkillCategory::Navigate:
      return "Navigate";
    case SkillCategory::Open:
      return "Open";
    case SkillCategory::Close:
      return "Close";
    case SkillCategory::Recovery:
      return "Recovery";
    case SkillCategory::Other:
      return "Other";
  }
  return "Other";
}

std::optional<SkillCategory> parse_category(std::string_view text) {
  for (SkillCategory c :
       {SkillCategory::Pick, SkillCategory::Place, SkillCategory::Navigate,
        SkillCategory::Open, SkillCategory::Close, SkillCategory::Recovery,
        SkillCategory::Other}) {
    if (text == to_string(c)) {
      return c;
    }
  }
  return std::nullopt;
}

bool executable(const EmbodimentState& state, const SemanticSkill& skill) {
  return matches(state, skill.pre) && apply_delta(state, skill.delta).ok();
}

std::vector<EmbodimentState> enumerate_states(const SkillStateGraph& graph) {
  std::vector<GripperContent> contents;
  contents.reserve(graph.objects.size() + 1);
  contents.push_back(std::nullopt);
  for (const auto& obj : graph.objects) {
    contents.push_back(obj);
  }
  std::vector<EmbodimentState> states;
  states.reserve(graph.state_space_size());
  for (const auto& loc : graph.locations) {
    for (const auto& left : contents) {
      for (const auto& right : contents) {
        states.push_back({loc, left, right});
      }
    }
  }
  return states;
}

namespace {

// Fixed-width bitset over state indices.
class StateBits {
 public:
  explicit StateBits(std::size_t n) : bits_((n + 63) / 64, 0) {}

  void set(std::size_t i) { bits_[i / 64] |= 1ULL << (i % 64); }

  bool intersects(const StateBits& other) const {
    for (std::size_t w = 0; w < bits_.size(); ++w) {
      if (bits_[w] & other.bits_[w]) {
        return true;
      }
    }
    return false;
  }

 private:
  std::vector<std::uint64_t> bits_;
};

// Maps states over the declared vocabulary to their enumeration index.
class StateIndex {
 public:
  explicit StateIndex(const SkillStateGraph& graph) {
    std::size_t i = 0;
    for (const auto& loc : graph.locations) {
      locs_[loc] = i++;
    }
    objs_[std::nullopt] = 0;
    i = 1;
    for (const auto& obj : graph.objects) {
      objs_[obj] = i++;
    }
    width_ = graph.objects.size() + 1;
  }

  std::optional<std::size_t> of(const EmbodimentState& st) const {
    auto loc = locs_.find(st.location);
    auto left = objs_.find(st.left);
    auto right = objs_.find(st.right);
    if (loc == locs_.end() || left == objs_.end() || right == objs_.end()) {
      return std::nullopt;
    }
    return (loc->second * width_ + left->second) * width_ + right->second;
  }

 private:
  std::map<LocationId, std::size_t> locs_;
  std::map<GripperContent, std::size_t> objs_;
  std::size_t width_ = 1;
};

}  // namespace

Result<std::set<Edge>, StateSpaceTooLarge> derive_edges(
    const SkillStateGraph& graph, std::size_t max_states) {
  std::size_t n = graph.state_space_size();
  if (n > max_states) {
    return StateSpaceTooLarge{n, max_states};
  }
  std::vector<EmbodimentState> states = enumerate_states(graph);
  StateIndex index(graph);

  std::vector<const SemanticSkill*> skills;
  skills.reserve(graph.skills.size());
  for (const auto& [id, skill] : graph.skills) {
    skills.push_back(&skill);
  }

  // For each skill, which states its precondition matches and which
  // states its delta can land on. An edge exists iff the source's
  // post-image intersects the target's match set.
  std::vector<StateBits> match(skills.size(), StateBits(n));
  std::vector<StateBits> post(skills.size(), StateBits(n));
  for (std::size_t k = 0; k < skills.size(); ++k) {
    for (std::size_t si = 0; si < states.size(); ++si) {
      if (!matches(states[si], skills[k]->pre)) {
        continue;
      }
      match[k].set(si);
      auto next = apply_delta(states[si], skills[k]->delta);
      if (!next.ok()) {
        continue;
      }
      if (auto ni = index.of(next.value())) {
        post[k].set(*ni);
      }
    }
  }

  std::set<Edge> edges;
  for (std::size_t i = 0; i < skills.size(); ++i) {
    for (std::size_t j = 0; j < skills.size(); ++j) {
      if (post[i].intersects(match[j])) {
        edges.insert({skills[i]->id, skills[j]->id});
      }
    }
  }
  return edges;
}

namespace {

TopoView view_of(const SkillStateGraph& graph, const std::set<SkillId>& keep) {
  TopoView view;
  for (const auto& [id, skill] : graph.skills) {
    if (!keep.count(id)) {
      continue;
    }
    view.nodes.push_back({id, skill.label, skill.category});
    view.adjacency[id];
  }
  for (const auto& [from, to] : graph.edges) {
    if (keep.count(from) && keep.count(to)) {
      view.adjacency[from].push_back(to);
    }
  }
  // graph.edges iterates in sorted order, so successor lists arrive sorted.
  return view;
}

}  // namespace

TopoView topo_view(const SkillStateGraph& graph) {
  std::set<SkillId> all;
  for (const auto& [id, skill] : graph.skills) {
    all.insert(id);
  }
  return view_of(graph, all);
}

TopoView prune_view(const SkillStateGraph& graph, const EmbodimentState& state,
                    int depth) {
  std::set<SkillId> reached;
  std::set<EmbodimentState> seen{state};
  std::vector<EmbodimentState> frontier{state};
  for (int level = 0; !frontier.empty() && (depth == kUnboundedDepth || level < depth);
       ++level) {
    std::vector<EmbodimentState> next;
    for (const auto& st : frontier) {
      for (const auto& [id, skill] : graph.skills) {
        if (!executable(st, skill)) {
          continue;
        }
        reached.insert(id);
        EmbodimentState after = apply_delta(st, skill.delta).value();
        if (seen.insert(after).second) {
          next.push_back(after);
        }
      }
    }
    frontier = std::move(next);
  }
  return view_of(graph, reached);
}

}  // namespace skillstate
