#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillstate/graph.hpp"
#include "skillstate/result.hpp"
#include "skillstate/state.hpp"

namespace skillstate {

/// A candidate skill sequence. May be empty.
struct Plan {
  std::vector<SkillId> steps;
  bool operator==(const Plan&) const = default;
};

enum class ConflictKind : std::uint8_t {
  PreconditionMismatch,
  DeltaInapplicable,
  UnknownSkill,
  NonAdjacentTransition,
};

std::string_view to_string(ConflictKind kind);

struct Conflict {
  std::size_t index;  // 0-based step
  SkillId skill;
  ConflictKind kind;
  std::string detail;
  bool operator==(const Conflict&) const = default;
};

/// Outcome of walking a plan through the state algebra. Feasible reports
/// carry the full state chain (steps + 1 entries); infeasible reports stop
/// at the first conflict, whose pre-step state is state_chain.back().
struct VerificationReport {
  bool feasible = false;
  std::vector<EmbodimentState> state_chain;
  std::optional<Conflict> conflict;
};

/// Walks `plan` from `initial`, checking each skill's precondition and
/// applying its delta. With check_adjacency, consecutive steps must also
/// follow a graph edge. Total: every failure is encoded in the report.
VerificationReport verify(const SkillStateGraph& graph,
                          const EmbodimentState& initial, const Plan& plan,
                          bool check_adjacency);

enum class FeedbackError : std::uint8_t { NotInfeasible };

/// One deterministic paragraph describing an infeasible report: failing
/// step (1-based), skill, violated slot, the state at that point, and which
/// skills from `options` could run there instead. For unknown-skill
/// conflicts the options list is reported as the valid vocabulary.
Result<std::string, FeedbackError> conflict_feedback(
    const VerificationReport& report, const TopoView& options);

/// Convenience form that picks the options itself: skills executable at
/// the conflict state (one-step reachability), or every skill when the
/// conflict is an unknown id.
Result<std::string, FeedbackError> conflict_feedback(
    const VerificationReport& report, const SkillStateGraph& graph);

}  // namespace skillstate
