#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillstate/graph.hpp"
#include "skillstate/planner.hpp"
#include "skillstate/result.hpp"
#include "skillstate/rng.hpp"
#include "skillstate/state.hpp"
#include "skillstate/verify.hpp"

namespace skillstate {

struct AtLocation {
  LocationId location;
  bool operator==(const AtLocation&) const = default;
};
struct InGripper {
  GripperSlot slot;
  bool operator==(const InGripper&) const = default;
};
struct Lost {
  bool operator==(const Lost&) const = default;
};

using ObjectSite = std::variant<AtLocation, InGripper, Lost>;

/// Ground truth the simulator owns: the ego state plus where every object
/// actually is. Gripper contents and object sites must agree at all times;
/// Lost is absorbing.
struct WorldState {
  EmbodimentState ego;
  std::map<ObjectId, ObjectSite> object_at;

  bool consistent() const;
  bool operator==(const WorldState&) const = default;
};

/// Places every object of the graph's vocabulary: held objects follow the
/// initial grippers, explicitly placed ones go to their location, the rest
/// start at the initial ego location. An initial state claiming the same
/// object in both grippers has no physical reading; the result then fails
/// consistent() and run_episode refuses it.
WorldState make_world(const SkillStateGraph& graph,
                      const EmbodimentState& initial,
                      const std::map<ObjectId, LocationId>& placements = {});

enum class DeviationCause : std::uint8_t {
  DropInPlace,
  DropLost,
  NavShortfall,
  Stall,
};

std::string_view to_string(DeviationCause cause);
std::optional<DeviationCause> parse_deviation_cause(std::string_view text);

/// Success chance and, conditional on failure, the distribution over
/// causes (indexed by DeviationCause order). Weights must sum to 1.
struct OutcomeProfile {
  double p_ok = 1.0;
  std::array<double, 4> weights{1.0, 0.0, 0.0, 0.0};
};

/// Stochastic execution model. Lookup is most-specific-first: per skill,
/// then per category, then the base profile. p_ok = 1 everywhere gives the
/// deterministic simulator.
struct FailureModel {
  OutcomeProfile base;
  std::map<SkillCategory, OutcomeProfile> per_category;
  std::map<SkillId, OutcomeProfile> per_skill;
  std::uint64_t rng_seed = 0;

  const OutcomeProfile& profile_for(const SemanticSkill& skill) const;
};

struct Deviation {
  EmbodimentState observed;
  DeviationCause cause = DeviationCause::Stall;
  bool operator==(const Deviation&) const = default;
};

struct Outcome {
  std::optional<Deviation> deviation;
  bool ok() const { return !deviation.has_value(); }
  bool operator==(const Outcome&) const = default;
};

enum class ExecError : std::uint8_t { PreconditionViolated };

/// Runs one skill against the world. On success the delta lands on the ego
/// and object bookkeeping follows (picked objects enter the gripper, placed
/// ones rest at the resulting location, carried ones ride along on moves).
/// On failure the intended delta does NOT apply; the sampled cause mutates
/// the world instead: DropInPlace frees the gripper and leaves the object
/// at the current location, DropLost loses it for good, NavShortfall and
/// Stall leave the ego untouched. Causes that cannot apply to the skill at
/// hand (no object involved, no move) fall back to Stall, and a grasp only
/// lands when the object is actually resting at some location: lost or
/// already-held objects make the grasp stall no matter what was sampled,
/// which is how an unnoticed loss eventually gets discovered. Consumes one
/// random draw on success and two on failure.
Result<Outcome, ExecError> execute_skill(WorldState& world,
                                         const SemanticSkill& skill,
                                         const FailureModel& model,
                                         RandomStream& rng);

/// Compares the world against the expected post-state. The ego layer is
/// always on; with semantic_check the skill's intended object effects are
/// audited against ground truth as well (this is what notices an object
/// vanishing during an otherwise clean-looking place). Returns the observed
/// ego at the first discrepancy.
std::optional<EmbodimentState> monitor(const EmbodimentState& expected,
                                       const WorldState& world,
                                       const SemanticSkill& skill,
                                       bool semantic_check);

/// Corrective search from the observed state: like search_plan for the
/// remaining goals, but skills that pick or place an object the world has
/// recorded as Lost are masked out. A masked goal makes the task
/// unreachable, so NoPlan follows.
Result<Plan, SearchError> replan(const SkillStateGraph& graph,
                                 const EmbodimentState& observed,
                                 const WorldState& world_hint,
                                 const std::vector<SkillId>& remaining_goals,
                                 std::uint64_t budget = kDefaultSearchBudget);

inline constexpr long kUnlimitedSteps = -1;

struct ExecPolicy {
  bool closed_loop = true;
  int max_retries = 2;
  std::optional<int> prune_depth;  // planner view restriction
  long step_limit = kUnlimitedSteps;
  bool semantic_check = false;

  /// Where corrective plans come from after a deviation: the graph search
  /// directly, or another round of the configured planner.
  enum class ReplanRoute : std::uint8_t { Search, Planner };
  ReplanRoute replan_route = ReplanRoute::Search;
};

struct ReplanRecord {
  EmbodimentState trigger_state;
  Plan corrective;
  bool operator==(const ReplanRecord&) const = default;
};

struct TraceEvent {
  std::size_t step = 0;  // 1-based executed-step counter
  SkillId skill;
  Outcome outcome;
  std::optional<SkillId> goal_completed;
  std::optional<ReplanRecord> replan;
  WorldState world_after;
  bool operator==(const TraceEvent&) const = default;
};

enum class TerminalMode : std::uint8_t {
  UnrecoverableState,
  StepLimitExceeded,
  RegressionDetected,
};

std::string_view to_string(TerminalMode mode);

struct Terminal {
  bool success = false;
  std::optional<TerminalMode> failure;
  std::size_t at_step = 0;
  std::string note;
  bool operator==(const Terminal&) const = default;
};

struct PlanningStats {
  std::size_t attempts = 0;
  bool accepted = false;
  std::vector<std::size_t> prompt_bytes;  // one entry per attempt
  std::optional<PlanningFailureCause> failure_cause;
  bool operator==(const PlanningStats&) const = default;
};

struct EpisodeTrace {
  TaskSpec task;
  PlanningStats planning;
  std::vector<TraceEvent> events;
  std::vector<SkillId> goals_completed;
  Terminal terminal;
  bool operator==(const EpisodeTrace&) const = default;
};

/// One full episode: plan (with retries), then execute step by step with
/// per-step monitoring. Deviations end open-loop episodes immediately; in
/// closed loop a corrective plan for the remaining goals replaces the
/// unexecuted remainder after re-verification. Terminal outcomes: Success
/// once every goal ran in order; UnrecoverableState when planning or
/// replanning finds nothing; StepLimitExceeded when the step budget runs
/// out (stalls consume steps). Identical inputs give identical traces.
EpisodeTrace run_episode(const SkillStateGraph& graph, const TaskSpec& task,
                         Planner& planner, const FailureModel& model,
                         const ExecPolicy& policy, std::uint64_t episode_seed,
                         const std::map<ObjectId, LocationId>& placements = {});

/// First event at which an object settled by a completed goal left its
/// location without that event's skill touching the object. run_episode
/// checks this after every event; it can only fire on hand-built traces.
std::optional<std::size_t> detect_regression(
    const SkillStateGraph& graph, const std::vector<TraceEvent>& events);

/// Failure-mode projection of a trace; empty for successful episodes.
std::optional<TerminalMode> classify(const EpisodeTrace& trace);

}  // namespace skillstate
