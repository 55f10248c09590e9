#include "skillstate/sim.hpp"

#include <algorithm>
#include <utility>

namespace skillstate {

namespace {

const ObjectId* op_object(const GripperOp& op) {
  return op.is_none() ? nullptr : &op.object;
}

GripperContent& slot_of(EmbodimentState& ego, GripperSlot slot) {
  return slot == GripperSlot::Left ? ego.left : ego.right;
}

const GripperContent& slot_of(const EmbodimentState& ego, GripperSlot slot) {
  return slot == GripperSlot::Left ? ego.left : ego.right;
}

/// The object a drop would act on: the skill's own gripper target first,
/// then whatever the ego is carrying; left before right throughout.
const ObjectId* drop_target(const WorldState& world,
                            const SemanticSkill& skill) {
  if (const auto* o = op_object(skill.delta.left)) {
    return o;
  }
  if (const auto* o = op_object(skill.delta.right)) {
    return o;
  }
  if (world.ego.left) {
    return &*world.ego.left;
  }
  if (world.ego.right) {
    return &*world.ego.right;
  }
  return nullptr;
}

DeviationCause pick_cause(const OutcomeProfile& profile, double draw) {
  double cumulative = 0.0;
  for (std::size_t i = 0; i + 1 < profile.weights.size(); ++i) {
    cumulative += profile.weights[i];
    if (draw < cumulative) {
      return static_cast<DeviationCause>(i);
    }
  }
  return DeviationCause::Stall;
}

void drop_object(WorldState& world, const ObjectId& object, ObjectSite site) {
  if (const auto* held = std::get_if<InGripper>(&world.object_at.at(object))) {
    slot_of(world.ego, held->slot).reset();
  }
  world.object_at.at(object) = std::move(site);
}

}  // namespace

bool WorldState::consistent() const {
  std::size_t left_count = 0;
  std::size_t right_count = 0;
  for (const auto& [object, site] : object_at) {
    if (const auto* held = std::get_if<InGripper>(&site)) {
      auto& content = slot_of(ego, held->slot);
      if (!content || *content != object) {
        return false;
      }
      (held->slot == GripperSlot::Left ? left_count : right_count) += 1;
    }
  }
  if (ego.left && (left_count != 1 || object_at.count(*ego.left) == 0)) {
    return false;
  }
  if (ego.right && (right_count != 1 || object_at.count(*ego.right) == 0)) {
    return false;
  }
  return (ego.left ? 1u : 0u) >= left_count &&
         (ego.right ? 1u : 0u) >= right_count;
}

WorldState make_world(const SkillStateGraph& graph,
                      const EmbodimentState& initial,
                      const std::map<ObjectId, LocationId>& placements) {
  WorldState world;
  world.ego = initial;
  for (const auto& object : graph.objects) {
    if (initial.left && *initial.left == object) {
      world.object_at[object] = InGripper{GripperSlot::Left};
    } else if (initial.right && *initial.right == object) {
      world.object_at[object] = InGripper{GripperSlot::Right};
    } else if (auto it = placements.find(object); it != placements.end()) {
      world.object_at[object] = AtLocation{it->second};
    } else {
      world.object_at[object] = AtLocation{initial.location};
    }
  }
  return world;
}

std::string_view to_string(DeviationCause cause) {
  switch (cause) {
    case DeviationCause::DropInPlace:
      return "DropInPlace";
    case DeviationCause::DropLost:
      return "DropLost";
    case DeviationCause::NavShortfall:
      return "NavShortfall";
    case DeviationCause::Stall:
      return "Stall";
  }
  return "?";
}

std::optional<DeviationCause> parse_deviation_cause(std::string_view text) {
  for (auto cause :
       {DeviationCause::DropInPlace, DeviationCause::DropLost,
        DeviationCause::NavShortfall, DeviationCause::Stall}) {
    if (text == to_string(cause)) {
      return cause;
    }
  }
  return std::nullopt;
}

std::string_view to_string(TerminalMode mode) {
  switch (mode) {
    case TerminalMode::UnrecoverableState:
      return "UnrecoverableState";
    case TerminalMode::StepLimitExceeded:
      return "StepLimitExceeded";
    case TerminalMode::RegressionDetected:
      return "RegressionDetected";
  }
  return "?";
}

const OutcomeProfile& FailureModel::profile_for(
    const SemanticSkill& skill) const {
  if (auto it = per_skill.find(skill.id); it != per_skill.end()) {
    return it->second;
  }
  if (auto it = per_category.find(skill.category); it != per_category.end()) {
    return it->second;
  }
  return base;
}

Result<Outcome, ExecError> execute_skill(WorldState& world,
                                         const SemanticSkill& skill,
                                         const FailureModel& model,
                                         RandomStream& rng) {
  if (!matches(world.ego, skill.pre)) {
    return ExecError::PreconditionViolated;
  }
  auto intended = apply_delta(world.ego, skill.delta);
  if (!intended.ok()) {
    return ExecError::PreconditionViolated;
  }

  bool grasp_blocked = false;
  for (const auto* op : {&skill.delta.left, &skill.delta.right}) {
    if (op->kind != GripperOp::Kind::Add) {
      continue;
    }
    auto site = world.object_at.find(op->object);
    grasp_blocked = grasp_blocked ||
                    (site != world.object_at.end() &&
                     !std::holds_alternative<AtLocation>(site->second));
  }

  const OutcomeProfile& profile = model.profile_for(skill);
  bool drew_ok = rng.uniform01() < profile.p_ok;
  if (drew_ok && !grasp_blocked) {
    if (const auto* o = op_object(skill.delta.left)) {
      world.object_at.at(*o) =
          skill.delta.left.kind == GripperOp::Kind::Add
              ? ObjectSite{InGripper{GripperSlot::Left}}
              : ObjectSite{AtLocation{intended.value().location}};
    }
    if (const auto* o = op_object(skill.delta.right)) {
      world.object_at.at(*o) =
          skill.delta.right.kind == GripperOp::Kind::Add
              ? ObjectSite{InGripper{GripperSlot::Right}}
              : ObjectSite{AtLocation{intended.value().location}};
    }
    world.ego = intended.value();
    return Outcome{};
  }

  DeviationCause cause = pick_cause(profile, rng.uniform01());
  if (grasp_blocked) {
    // The grasp comes back empty no matter what was sampled.
    cause = DeviationCause::Stall;
  }
  const ObjectId* affected = drop_target(world, skill);
  if ((cause == DeviationCause::DropInPlace ||
       cause == DeviationCause::DropLost) &&
      affected == nullptr) {
    cause = DeviationCause::Stall;
  }
  if (cause == DeviationCause::NavShortfall && !skill.delta.scene) {
    cause = DeviationCause::Stall;
  }

  switch (cause) {
    case DeviationCause::DropInPlace:
      drop_object(world, *affected, AtLocation{world.ego.location});
      break;
    case DeviationCause::DropLost:
      drop_object(world, *affected, Lost{});
      break;
    case DeviationCause::NavShortfall:
    case DeviationCause::Stall:
      break;
  }
  return Outcome{Deviation{world.ego, cause}};
}

std::optional<EmbodimentState> monitor(const EmbodimentState& expected,
                                       const WorldState& world,
                                       const SemanticSkill& skill,
                                       bool semantic_check) {
  if (world.ego != expected) {
    return world.ego;
  }
  if (semantic_check) {
    auto audit = [&](const GripperOp& op, GripperSlot slot) {
      if (const auto* o = op_object(op)) {
        ObjectSite intended = op.kind == GripperOp::Kind::Add
                                  ? ObjectSite{InGripper{slot}}
                                  : ObjectSite{AtLocation{expected.location}};
        return world.object_at.at(*o) == intended;
      }
      return true;
    };
    if (!audit(skill.delta.left, GripperSlot::Left) ||
        !audit(skill.delta.right, GripperSlot::Right)) {
      return world.ego;
    }
  }
  return std::nullopt;
}

Result<Plan, SearchError> replan(const SkillStateGraph& graph,
                                 const EmbodimentState& observed,
                                 const WorldState& world_hint,
                                 const std::vector<SkillId>& remaining_goals,
                                 std::uint64_t budget) {
  std::set<SkillId> allowed;
  for (const auto& [id, skill] : graph.skills) {
    bool touches_lost = false;
    for (const auto* op : {&skill.delta.left, &skill.delta.right}) {
      if (const auto* o = op_object(*op)) {
        auto it = world_hint.object_at.find(*o);
        if (it != world_hint.object_at.end() &&
            std::holds_alternative<Lost>(it->second)) {
          touches_lost = true;
        }
      }
    }
    if (!touches_lost) {
      allowed.insert(id);
    }
  }
  return search_plan(graph, observed, remaining_goals, &allowed, budget);
}

namespace {

bool references_object(const SemanticSkill& skill, const ObjectId& object) {
  for (const auto* op : {&skill.delta.left, &skill.delta.right}) {
    if (const auto* o = op_object(*op); o && *o == object) {
      return true;
    }
  }
  return false;
}

/// Shared by run_episode and detect_regression: track objects settled by
/// completed goals and flag any that move without their object being part
/// of the acting skill's delta.
class RegressionScan {
 public:
  explicit RegressionScan(const SkillStateGraph& graph) : graph_(&graph) {}

  bool observe(const TraceEvent& event) {
    const SemanticSkill* skill = nullptr;
    if (auto it = graph_->skills.find(event.skill);
        it != graph_->skills.end()) {
      skill = &it->second;
    }
    for (auto it = settled_.begin(); it != settled_.end();) {
      const auto& [object, location] = *it;
      auto site = event.world_after.object_at.find(object);
      bool moved = site == event.world_after.object_at.end() ||
                   !(site->second == ObjectSite{AtLocation{location}});
      if (moved) {
        if (!skill || !references_object(*skill, object)) {
          return true;
        }
        it = settled_.erase(it);
      } else {
        ++it;
      }
    }
    if (event.goal_completed && skill) {
      for (const auto* op : {&skill->delta.left, &skill->delta.right}) {
        if (op->kind != GripperOp::Kind::Sub) {
          continue;
        }
        // Settle from ground truth: a goal the monitor credited while the
        // object was actually lost must not arm the detector.
        auto site = event.world_after.object_at.find(op->object);
        if (site != event.world_after.object_at.end()) {
          if (const auto* at = std::get_if<AtLocation>(&site->second)) {
            settled_[op->object] = at->location;
          }
        }
      }
    }
    return false;
  }

 private:
  const SkillStateGraph* graph_;
  std::map<ObjectId, LocationId> settled_;
};

PlanningStats stats_from(const std::vector<PlanningAttempt>& transcript,
                         bool accepted,
                         std::optional<PlanningFailureCause> cause) {
  PlanningStats stats;
  stats.attempts = transcript.size();
  stats.accepted = accepted;
  stats.failure_cause = cause;
  for (const auto& attempt : transcript) {
    stats.prompt_bytes.push_back(attempt.prompt_bytes);
  }
  return stats;
}

}  // namespace

EpisodeTrace run_episode(const SkillStateGraph& graph, const TaskSpec& task,
                         Planner& planner, const FailureModel& model,
                         const ExecPolicy& policy, std::uint64_t episode_seed,
                         const std::map<ObjectId, LocationId>& placements) {
  EpisodeTrace trace;
  trace.task = task;

  auto planned = plan_with_verification(planner, graph, task,
                                        policy.max_retries, policy.prune_depth);
  if (!planned.ok()) {
    trace.planning = stats_from(planned.error().transcript, false,
                                planned.error().cause);
    trace.terminal = {false, TerminalMode::UnrecoverableState, 0,
                      std::string("planning failed: ") +
                          std::string(to_string(planned.error().cause))};
    return trace;
  }
  trace.planning =
      stats_from(planned.value().transcript, true, std::nullopt);

  RandomStream rng(episode_seed);
  WorldState world = make_world(graph, task.initial, placements);
  if (!world.consistent()) {
    trace.terminal = {false, TerminalMode::UnrecoverableState, 0,
                      "initial state is not physically realizable"};
    return trace;
  }
  RegressionScan regression(graph);
  Plan plan = planned.value().plan;
  std::size_t cursor = 0;
  std::size_t steps_used = 0;
  std::vector<SkillId> remaining = task.goal_skills;
  std::size_t next_goal = 0;

  auto fail = [&](TerminalMode mode, std::string note) {
    trace.terminal = {false, mode, steps_used, std::move(note)};
  };

  while (next_goal < remaining.size()) {
    if (cursor >= plan.steps.size()) {
      // Accepted plans cover the goals, so this is defensive only.
      if (!policy.closed_loop) {
        fail(TerminalMode::UnrecoverableState, "plan exhausted before goals");
        return trace;
      }
      std::vector<SkillId> rest(remaining.begin() +
                                    static_cast<std::ptrdiff_t>(next_goal),
                                remaining.end());
      auto corrective = replan(graph, world.ego, world, rest);
      if (!corrective.ok() ||
          !verify(graph, world.ego, corrective.value(), false).feasible) {
        fail(TerminalMode::UnrecoverableState, "plan exhausted before goals");
        return trace;
      }
      plan = std::move(corrective).take();
      cursor = 0;
      continue;
    }
    if (policy.step_limit != kUnlimitedSteps &&
        steps_used >= static_cast<std::size_t>(policy.step_limit)) {
      fail(TerminalMode::StepLimitExceeded, "step budget exhausted");
      return trace;
    }

    const SkillId id = plan.steps[cursor];
    auto skill_it = graph.skills.find(id);
    if (skill_it == graph.skills.end()) {
      fail(TerminalMode::UnrecoverableState, "plan names an unknown skill");
      return trace;
    }
    const SemanticSkill& skill = skill_it->second;
    auto expected = apply_delta(world.ego, skill.delta);
    if (!expected.ok()) {
      fail(TerminalMode::UnrecoverableState,
           "precondition violated before execution");
      return trace;
    }
    auto executed = execute_skill(world, skill, model, rng);
    if (!executed.ok()) {
      fail(TerminalMode::UnrecoverableState, "precondition violated");
      return trace;
    }
    ++steps_used;

    TraceEvent event;
    event.step = steps_used;
    event.skill = id;
    event.outcome = executed.value();
    event.world_after = world;

    auto discrepancy =
        monitor(expected.value(), world, skill, policy.semantic_check);
    if (!discrepancy) {
      if (id == remaining[next_goal]) {
        ++next_goal;
        trace.goals_completed.push_back(id);
        event.goal_completed = id;
      }
      ++cursor;
    } else if (!policy.closed_loop) {
      trace.events.push_back(event);
      fail(TerminalMode::UnrecoverableState,
           "deviation without closed-loop recovery");
      return trace;
    } else {
      std::vector<SkillId> rest(remaining.begin() +
                                    static_cast<std::ptrdiff_t>(next_goal),
                                remaining.end());
      Result<Plan, SearchError> corrective = SearchError::NoPlan;
      if (policy.replan_route == ExecPolicy::ReplanRoute::Search) {
        corrective = replan(graph, world.ego, world, rest);
      } else {
        TaskSpec follow_up{rest, task.instruction, world.ego};
        auto re = plan_with_verification(planner, graph, follow_up,
                                         policy.max_retries,
                                         policy.prune_depth);
        if (re.ok()) {
          corrective = std::move(re).take().plan;
        }
      }
      if (!corrective.ok()) {
        trace.events.push_back(event);
        fail(TerminalMode::UnrecoverableState, "no corrective plan");
        return trace;
      }
      if (!verify(graph, world.ego, corrective.value(), false).feasible) {
        trace.events.push_back(event);
        fail(TerminalMode::UnrecoverableState,
             "corrective plan failed verification");
        return trace;
      }
      plan = std::move(corrective).take();
      cursor = 0;
      event.replan = ReplanRecord{world.ego, plan};
    }

    trace.events.push_back(event);
    if (regression.observe(trace.events.back())) {
      fail(TerminalMode::RegressionDetected,
           "a completed goal's object moved on its own");
      return trace;
    }
  }

  trace.terminal = {true, std::nullopt, steps_used, ""};
  return trace;
}

std::optional<std::size_t> detect_regression(
    const SkillStateGraph& graph, const std::vector<TraceEvent>& events) {
  RegressionScan scan(graph);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (scan.observe(events[i])) {
      return i;
    }
  }
  return std::nullopt;
}

std::optional<TerminalMode> classify(const EpisodeTrace& trace) {
  if (trace.terminal.success) {
    return std::nullopt;
  }
  return trace.terminal.failure;
}

}  // namespace skillstate
