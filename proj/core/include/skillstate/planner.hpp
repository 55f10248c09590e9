#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillstate/graph.hpp"
#include "skillstate/result.hpp"
#include "skillstate/state.hpp"
#include "skillstate/verify.hpp"

namespace skillstate {

/// What an episode is asked to achieve: the listed skills must execute
/// successfully in the given order. The instruction is free text carried
/// into prompts and reports; correctness never depends on it.
struct TaskSpec {
  std::vector<SkillId> goal_skills;
  std::string instruction;
  EmbodimentState initial;
  bool operator==(const TaskSpec&) const = default;
};

enum class RefusalKind : std::uint8_t { Declined, Timeout, Transport };

std::string_view to_string(RefusalKind kind);

/// A planner that cannot or will not produce a candidate. Declined refusals
/// consume a retry; Timeout and Transport abort the retry loop.
struct Refusal {
  RefusalKind kind = RefusalKind::Declined;
  std::string reason;
};

using Proposal = std::variant<Plan, Refusal>;

/// Interface every plan source implements. `view` is the only graph data a
/// proposal may draw on; returned plans must use ids from it. `feedback`
/// carries the rejection text for the previous attempt, when there was one.
class Planner {
 public:
  virtual ~Planner() = default;
  virtual Proposal propose(const TaskSpec& task, const TopoView& view,
                           const EmbodimentState& state,
                           const std::optional<std::string>& feedback) = 0;
};

enum class SearchError : std::uint8_t { NoPlan, BudgetExceeded };

inline constexpr std::uint64_t kDefaultSearchBudget = 1'000'000;

/// Breadth-first search over (state, index of next outstanding goal).
/// Returns the shortest plan that runs every goal in order; among
/// shortest plans the lexicographically least id sequence wins, so equal
/// inputs give byte-equal plans everywhere. `allowed` restricts the usable
/// skills (pass nullptr for no restriction). BudgetExceeded after `budget`
/// node expansions.
Result<Plan, SearchError> search_plan(const SkillStateGraph& graph,
                                      const EmbodimentState& initial,
                                      const std::vector<SkillId>& goals,
                                      const std::set<SkillId>* allowed = nullptr,
                                      std::uint64_t budget = kDefaultSearchBudget);

/// Convenience form over a full task.
Result<Plan, SearchError> search_plan(const SkillStateGraph& graph,
                                      const TaskSpec& task,
                                      std::uint64_t budget = kDefaultSearchBudget);

/// Deterministic prompt: instruction, current state literal, goal ids, the
/// view's node and adjacency lists, and output-format instructions (one id
/// per line between `<<PLAN>>` and `<<END>>`). Carries no precondition or
/// delta data. Appends `feedback` when present.
std::string serialize_prompt(const TaskSpec& task, const TopoView& view,
                             const EmbodimentState& state,
                             const std::optional<std::string>& feedback);

inline constexpr std::string_view kPlanBeginSentinel = "<<PLAN>>";
inline constexpr std::string_view kPlanEndSentinel = "<<END>>";

struct ParseFailure {
  enum class Kind : std::uint8_t { MissingSentinels, UnknownSkill, EmptyPlan };
  Kind kind;
  std::string detail;
};

std::string_view to_string(ParseFailure::Kind kind);

/// Extracts the id lines between the sentinels, trimming whitespace and
/// skipping blank lines. Ids not present in `view` fail the parse rather
/// than crash; the retry loop surfaces them as feedback.
Result<Plan, ParseFailure> parse_plan(const std::string& text,
                                      const TopoView& view);

/// One propose/verify round. Refused attempts carry no candidate or report.
struct PlanningAttempt {
  std::optional<Plan> candidate;
  std::optional<VerificationReport> report;
  std::optional<Refusal> refusal;
  std::optional<std::string> rejection;  // feedback generated for the next try
  std::size_t prompt_bytes = 0;
};

struct PlanningSuccess {
  Plan plan;
  std::size_t attempts = 0;
  std::vector<PlanningAttempt> transcript;  // includes the accepted attempt
};

enum class PlanningFailureCause : std::uint8_t { Exhausted, Timeout, Transport };

std::string_view to_string(PlanningFailureCause cause);

struct PlanningFailed {
  PlanningFailureCause cause = PlanningFailureCause::Exhausted;
  std::vector<PlanningAttempt> transcript;
};

using PlanningOutcome = Result<PlanningSuccess, PlanningFailed>;

/// The propose -> check -> feedback loop. Builds the view (pruned around
/// `state` when prune_depth is set, else the full projection), asks the
/// planner, and accepts the first candidate that passes verification and
/// contains the goal skills in order. Rejected attempts are retried with
/// conflict feedback, up to 1 + max_retries attempts in total. Candidates
/// straying outside the view are rejected as unknown skills; a Declined
/// refusal consumes an attempt; Timeout and Transport refusals fail the
/// loop immediately with the matching cause.
PlanningOutcome plan_with_verification(Planner& planner,
                                       const SkillStateGraph& graph,
                                       const TaskSpec& task, int max_retries,
                                       std::optional<int> prune_depth);

/// Exhaustive-search planner: proposals come from search_plan restricted to
/// the view. Refuses (Declined) when no plan exists within budget.
class OraclePlanner : public Planner {
 public:
  explicit OraclePlanner(const SkillStateGraph& graph,
                         std::uint64_t budget = kDefaultSearchBudget)
      : graph_(&graph), budget_(budget) {}

  Proposal propose(const TaskSpec& task, const TopoView& view,
                   const EmbodimentState& state,
                   const std::optional<std::string>& feedback) override;

 private:
  const SkillStateGraph* graph_;
  std::uint64_t budget_;
};

/// Emits a fixed script of proposals in order; once the script is spent it
/// declines. Records the feedback it was shown, which tests inspect.
class ReplayPlanner : public Planner {
 public:
  explicit ReplayPlanner(std::vector<Proposal> script)
      : script_(std::move(script)) {}

  Proposal propose(const TaskSpec& task, const TopoView& view,
                   const EmbodimentState& state,
                   const std::optional<std::string>& feedback) override;

  const std::vector<std::optional<std::string>>& seen_feedback() const {
    return seen_feedback_;
  }

 private:
  std::vector<Proposal> script_;
  std::size_t next_ = 0;
  std::vector<std::optional<std::string>> seen_feedback_;
};

/// Models an unconstrained language-model planner: the first
/// `invalid_attempts` proposals are corrupted search plans (adjacent steps
/// swapped, a navigation dropped, or a pick duplicated -- whichever of
/// those actually breaks the plan), after which it yields the intact plan.
class AdversarialPlanner : public Planner {
 public:
  AdversarialPlanner(const SkillStateGraph& graph, int invalid_attempts,
                     std::uint64_t seed,
                     std::uint64_t budget = kDefaultSearchBudget)
      : graph_(&graph),
        invalid_attempts_(invalid_attempts),
        seed_(seed),
        budget_(budget) {}

  Proposal propose(const TaskSpec& task, const TopoView& view,
                   const EmbodimentState& state,
                   const std::optional<std::string>& feedback) override;

 private:
  const SkillStateGraph* graph_;
  int invalid_attempts_;
  std::uint64_t seed_;
  std::uint64_t budget_;
  int calls_ = 0;
};

}  // namespace skillstate
