#include "skillstate/verify.hpp"

#include <sstream>

namespace skillstate {

std::string_view to_string(ConflictKind kind) {
  switch (kind) {
    case ConflictKind::PreconditionMismatch:
      return "PreconditionMismatch";
    case ConflictKind::DeltaInapplicable:
      return "DeltaInapplicable";
    case ConflictKind::UnknownSkill:
      return "UnknownSkill";
    case ConflictKind::NonAdjacentTransition:
      return "NonAdjacentTransition";
  }
  return "?";
}

namespace {

std::string describe_gripper(const GripperContent& content) {
  return content ? "holds " + content->name : "is empty";
}

std::string describe_required(const GripperPattern& pat) {
  if (pat.requires_empty()) {
    return "must be empty";
  }
  return "must hold " + pat.required_object()->name;
}

// Names the first slot of `state` that fails `pre`.
std::string mismatch_detail(const EmbodimentState& state,
                            const Precondition& pre) {
  if (!pre.location.matches(state.location)) {
    return "the location is " + state.location.name + " but the skill runs at " +
           pre.location.exact->name;
  }
  if (!pre.left.matches(state.left)) {
    return "the left gripper " + describe_gripper(state.left) + " but " +
           describe_required(pre.left);
  }
  return "the right gripper " + describe_gripper(state.right) + " but " +
         describe_required(pre.right);
}

std::string delta_detail(const DeltaError& err) {
  return "the variation cannot apply: " + std::string(to_string(err.slot)) +
         ", " + std::string(to_string(err.code));
}

}  // namespace

VerificationReport verify(const SkillStateGraph& graph,
                          const EmbodimentState& initial, const Plan& plan,
                          bool check_adjacency) {
  VerificationReport report;
  report.state_chain.push_back(initial);
  EmbodimentState current = initial;
  const SkillId* previous = nullptr;
  for (std::size_t i = 0; i < plan.steps.size(); ++i) {
    const SkillId& id = plan.steps[i];
    auto it = graph.skills.find(id);
    if (it == graph.skills.end()) {
      report.conflict = {i, id, ConflictKind::UnknownSkill,
                         "no skill with id \"" + id.name +
                             "\" exists in the graph"};
      return report;
    }
    if (check_adjacency && previous != nullptr &&
        !graph.edges.count({*previous, id})) {
      report.conflict = {i, id, ConflictKind::NonAdjacentTransition,
                         "the graph has no transition from " +
                             previous->name + " to " + id.name};
      return report;
    }
    const SemanticSkill& skill = it->second;
    if (!matches(current, skill.pre)) {
      report.conflict = {i, id, ConflictKind::PreconditionMismatch,
                         mismatch_detail(current, skill.pre)};
      return report;
    }
    auto next = apply_delta(current, skill.delta);
    if (!next.ok()) {
      report.conflict = {i, id, ConflictKind::DeltaInapplicable,
                         delta_detail(next.error())};
      return report;
    }
    current = std::move(next).take();
    report.state_chain.push_back(current);
    previous = &plan.steps[i];
  }
  report.feasible = true;
  return report;
}

Result<std::string, FeedbackError> conflict_feedback(
    const VerificationReport& report, const TopoView& options) {
  if (report.feasible || !report.conflict) {
    return FeedbackError::NotInfeasible;
  }
  const Conflict& c = *report.conflict;
  std::ostringstream out;
  out << "The plan fails at step " << c.index + 1 << " (" << c.skill.name
      << "): " << c.detail << ".";
  std::ostringstream names;
  bool first = true;
  for (const auto& node : options.nodes) {
    names << (first ? "" : ", ") << node.id.name;
    first = false;
  }
  std::string list = first ? "none" : names.str();
  if (c.kind == ConflictKind::UnknownSkill) {
    out << " Valid skills: " << list << ".";
  } else {
    out << " State before this step: "
        << to_literal(report.state_chain.back())
        << ". Skills executable at that state: " << list << ".";
  }
  return out.str();
}

Result<std::string, FeedbackError> conflict_feedback(
    const VerificationReport& report, const SkillStateGraph& graph) {
  if (report.feasible || !report.conflict) {
    return FeedbackError::NotInfeasible;
  }
  if (report.conflict->kind == ConflictKind::UnknownSkill) {
    return conflict_feedback(report, topo_view(graph));
  }
  return conflict_feedback(
      report, prune_view(graph, report.state_chain.back(), 1));
}

}  // namespace skillstate
