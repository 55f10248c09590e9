#include "skillstate/planner.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <sstream>
#include <utility>

namespace skillstate {

namespace {

bool covers_goals(const Plan& plan, const std::vector<SkillId>& goals) {
  std::size_t next = 0;
  for (const auto& step : plan.steps) {
    if (next < goals.size() && step == goals[next]) {
      ++next;
    }
  }
  return next == goals.size();
}

std::string join_ids(const std::vector<SkillId>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) {
      out += ", ";
    }
    out += id.name;
  }
  return out;
}

std::string trimmed(const std::string& line) {
  auto begin = line.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return {};
  }
  auto end = line.find_last_not_of(" \t\r");
  return line.substr(begin, end - begin + 1);
}

}  // namespace

std::string_view to_string(RefusalKind kind) {
  switch (kind) {
    case RefusalKind::Declined:
      return "Declined";
    case RefusalKind::Timeout:
      return "Timeout";
    case RefusalKind::Transport:
      return "Transport";
  }
  return "?";
}

std::string_view to_string(ParseFailure::Kind kind) {
  switch (kind) {
    case ParseFailure::Kind::MissingSentinels:
      return "MissingSentinels";
    case ParseFailure::Kind::UnknownSkill:
      return "UnknownSkill";
    case ParseFailure::Kind::EmptyPlan:
      return "EmptyPlan";
  }
  return "?";
}

std::string_view to_string(PlanningFailureCause cause) {
  switch (cause) {
    case PlanningFailureCause::Exhausted:
      return "Exhausted";
    case PlanningFailureCause::Timeout:
      return "Timeout";
    case PlanningFailureCause::Transport:
      return "Transport";
  }
  return "?";
}

Result<Plan, SearchError> search_plan(const SkillStateGraph& graph,
                                      const EmbodimentState& initial,
                                      const std::vector<SkillId>& goals,
                                      const std::set<SkillId>* allowed,
                                      std::uint64_t budget) {
  if (goals.empty()) {
    return Plan{};
  }
  for (const auto& goal : goals) {
    if (graph.skills.find(goal) == graph.skills.end() ||
        (allowed && allowed->count(goal) == 0)) {
      return SearchError::NoPlan;
    }
  }

  struct Node {
    EmbodimentState state;
    std::size_t next_goal;
    std::ptrdiff_t parent;
    const SkillId* via;
  };
  std::vector<Node> nodes;
  std::map<std::pair<EmbodimentState, std::size_t>, bool> visited;

  auto build_plan = [&](std::ptrdiff_t parent, const SkillId& last) {
    Plan plan;
    for (std::ptrdiff_t at = parent; at >= 0; at = nodes[at].parent) {
      if (nodes[at].via) {
        plan.steps.push_back(*nodes[at].via);
      }
    }
    std::reverse(plan.steps.begin(), plan.steps.end());
    plan.steps.push_back(last);
    return plan;
  };

  nodes.push_back({initial, 0, -1, nullptr});
  visited.emplace(std::make_pair(initial, std::size_t{0}), true);
  std::uint64_t expanded = 0;
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (++expanded > budget) {
      return SearchError::BudgetExceeded;
    }
    // Nodes are expanded in queue order and successors generated in id
    // order, so the first accepting child closes the lexicographically
    // least of the shortest plans.
    const std::size_t goal_idx = nodes[head].next_goal;
    const EmbodimentState state = nodes[head].state;
    for (const auto& [id, skill] : graph.skills) {
      if (allowed && allowed->count(id) == 0) {
        continue;
      }
      if (!matches(state, skill.pre)) {
        continue;
      }
      auto next = apply_delta(state, skill.delta);
      if (!next.ok()) {
        continue;
      }
      std::size_t next_goal = goal_idx + (id == goals[goal_idx] ? 1 : 0);
      if (next_goal == goals.size()) {
        return build_plan(static_cast<std::ptrdiff_t>(head), id);
      }
      auto key = std::make_pair(next.value(), next_goal);
      if (visited.emplace(key, true).second) {
        nodes.push_back({next.value(), next_goal,
                         static_cast<std::ptrdiff_t>(head), &id});
      }
    }
  }
  return SearchError::NoPlan;
}

Result<Plan, SearchError> search_plan(const SkillStateGraph& graph,
                                      const TaskSpec& task,
                                      std::uint64_t budget) {
  return search_plan(graph, task.initial, task.goal_skills, nullptr, budget);
}

std::string serialize_prompt(const TaskSpec& task, const TopoView& view,
                             const EmbodimentState& state,
                             const std::optional<std::string>& feedback) {
  std::ostringstream out;
  out << "You control a mobile manipulator through a fixed library of"
         " discrete skills.\n\n";
  out << "Task: " << task.instruction << "\n";
  out << "Current state: " << to_literal(state) << "\n";
  out << "Required skills, in order: " << join_ids(task.goal_skills) << "\n\n";
  out << "Available skills:\n";
  for (const auto& node : view.nodes) {
    out << "- " << node.id.name << " [" << to_string(node.category) << "] "
        << node.label << "\n";
  }
  out << "\nFeasible follow-ups:\n";
  for (const auto& [id, successors] : view.adjacency) {
    out << id.name << " -> "
        << (successors.empty() ? "(none)" : join_ids(successors)) << "\n";
  }
  if (feedback) {
    out << "\nYour previous answer was rejected: " << *feedback << "\n";
  }
  out << "\nAnswer with one skill id per line between the markers, nothing"
         " else:\n"
      << kPlanBeginSentinel << "\n"
      << kPlanEndSentinel << "\n";
  return out.str();
}

Result<Plan, ParseFailure> parse_plan(const std::string& text,
                                      const TopoView& view) {
  std::istringstream in(text);
  std::string line;
  bool in_plan = false;
  bool closed = false;
  Plan plan;
  while (std::getline(in, line)) {
    std::string item = trimmed(line);
    if (!in_plan) {
      if (item == kPlanBeginSentinel) {
        in_plan = true;
      }
      continue;
    }
    if (item == kPlanEndSentinel) {
      closed = true;
      break;
    }
    if (item.empty()) {
      continue;
    }
    if (!view.contains(SkillId{item})) {
      return ParseFailure{ParseFailure::Kind::UnknownSkill, item};
    }
    plan.steps.push_back(SkillId{std::move(item)});
  }
  if (!in_plan || !closed) {
    return ParseFailure{ParseFailure::Kind::MissingSentinels,
                        "expected one " + std::string(kPlanBeginSentinel) +
                            " line and one " + std::string(kPlanEndSentinel) +
                            " line"};
  }
  if (plan.steps.empty()) {
    return ParseFailure{ParseFailure::Kind::EmptyPlan,
                        "no skill ids between the markers"};
  }
  return plan;
}

PlanningOutcome plan_with_verification(Planner& planner,
                                       const SkillStateGraph& graph,
                                       const TaskSpec& task, int max_retries,
                                       std::optional<int> prune_depth) {
  TopoView view = prune_depth
                      ? prune_view(graph, task.initial, *prune_depth)
                      : topo_view(graph);
  std::vector<PlanningAttempt> transcript;
  std::optional<std::string> feedback;
  const int attempts_allowed = max_retries + 1;
  for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
    PlanningAttempt rec;
    rec.prompt_bytes =
        serialize_prompt(task, view, task.initial, feedback).size();
    Proposal proposal = planner.propose(task, view, task.initial, feedback);
    if (auto* refusal = std::get_if<Refusal>(&proposal)) {
      rec.refusal = *refusal;
      if (refusal->kind == RefusalKind::Timeout ||
          refusal->kind == RefusalKind::Transport) {
        auto cause = refusal->kind == RefusalKind::Timeout
                         ? PlanningFailureCause::Timeout
                         : PlanningFailureCause::Transport;
        transcript.push_back(std::move(rec));
        return PlanningFailed{cause, std::move(transcript)};
      }
      if (!refusal->reason.empty()) {
        feedback = refusal->reason;
        rec.rejection = feedback;
      }
      transcript.push_back(std::move(rec));
      continue;
    }

    Plan plan = std::get<Plan>(std::move(proposal));
    std::optional<std::size_t> stray;
    for (std::size_t i = 0; i < plan.steps.size(); ++i) {
      if (!view.contains(plan.steps[i])) {
        stray = i;
        break;
      }
    }
    if (stray) {
      VerificationReport synthetic;
      synthetic.feasible = false;
      synthetic.state_chain = {task.initial};
      synthetic.conflict =
          Conflict{*stray, plan.steps[*stray], ConflictKind::UnknownSkill,
                   "skill id " + plan.steps[*stray].name +
                       " is not in the planning view"};
      rec.candidate = std::move(plan);
      rec.report = synthetic;
      auto text = conflict_feedback(synthetic, view);
      if (text.ok()) {
        feedback = text.value();
        rec.rejection = feedback;
      }
      transcript.push_back(std::move(rec));
      continue;
    }

    VerificationReport report = verify(graph, task.initial, plan, false);
    rec.candidate = plan;
    rec.report = report;
    if (report.feasible) {
      if (covers_goals(plan, task.goal_skills)) {
        transcript.push_back(std::move(rec));
        std::size_t attempts = transcript.size();
        return PlanningSuccess{std::move(plan), attempts,
                               std::move(transcript)};
      }
      std::size_t next = 0;
      for (const auto& step : plan.steps) {
        if (next < task.goal_skills.size() &&
            step == task.goal_skills[next]) {
          ++next;
        }
      }
      feedback = "The plan is feasible but never runs required skill " +
                 task.goal_skills[next].name + " (goal " +
                 std::to_string(next + 1) + ") at its place in the order.";
      rec.rejection = feedback;
      transcript.push_back(std::move(rec));
      continue;
    }
    auto text = conflict_feedback(report, graph);
    if (text.ok()) {
      feedback = text.value();
      rec.rejection = feedback;
    }
    transcript.push_back(std::move(rec));
  }
  return PlanningFailed{PlanningFailureCause::Exhausted,
                        std::move(transcript)};
}

namespace {

std::set<SkillId> view_ids(const TopoView& view) {
  std::set<SkillId> ids;
  for (const auto& node : view.nodes) {
    ids.insert(node.id);
  }
  return ids;
}

Proposal refusal_for(SearchError error) {
  if (error == SearchError::BudgetExceeded) {
    return Refusal{RefusalKind::Timeout, "search budget exceeded"};
  }
  return Refusal{RefusalKind::Declined,
                 "no feasible plan exists within the provided view"};
}

}  // namespace

Proposal OraclePlanner::propose(const TaskSpec& task, const TopoView& view,
                                const EmbodimentState& state,
                                const std::optional<std::string>&) {
  auto ids = view_ids(view);
  auto found = search_plan(*graph_, state, task.goal_skills, &ids, budget_);
  if (!found.ok()) {
    return refusal_for(found.error());
  }
  return std::move(found).take();
}

Proposal ReplayPlanner::propose(const TaskSpec&, const TopoView&,
                                const EmbodimentState&,
                                const std::optional<std::string>& feedback) {
  seen_feedback_.push_back(feedback);
  if (next_ < script_.size()) {
    return script_[next_++];
  }
  return Refusal{RefusalKind::Declined, "replay script exhausted"};
}

Proposal AdversarialPlanner::propose(const TaskSpec& task,
                                     const TopoView& view,
                                     const EmbodimentState& state,
                                     const std::optional<std::string>&) {
  const int call = calls_++;
  auto ids = view_ids(view);
  auto found = search_plan(*graph_, state, task.goal_skills, &ids, budget_);
  if (!found.ok()) {
    return refusal_for(found.error());
  }
  Plan intact = std::move(found).take();
  if (call >= invalid_attempts_) {
    return intact;
  }

  auto category_of = [&](const SkillId& id) {
    return graph_->skills.at(id).category;
  };
  auto breaks_the_loop = [&](const Plan& candidate) {
    if (candidate.steps.empty()) {
      return false;
    }
    auto report = verify(*graph_, state, candidate, false);
    return !report.feasible || !covers_goals(candidate, task.goal_skills);
  };

  const int first_kind = static_cast<int>((seed_ + call) % 3);
  for (int offset = 0; offset < 3; ++offset) {
    Plan mutated = intact;
    switch ((first_kind + offset) % 3) {
      case 0: {  // swap a pair of adjacent, distinct steps
        if (mutated.steps.size() < 2) {
          continue;
        }
        std::size_t at = (seed_ + call) % (mutated.steps.size() - 1);
        for (std::size_t tries = 0; tries + 1 < mutated.steps.size();
             ++tries, at = (at + 1) % (mutated.steps.size() - 1)) {
          if (mutated.steps[at] != mutated.steps[at + 1]) {
            break;
          }
        }
        std::swap(mutated.steps[at], mutated.steps[at + 1]);
        break;
      }
      case 1: {  // drop the first navigation step
        auto it = std::find_if(mutated.steps.begin(), mutated.steps.end(),
                               [&](const SkillId& id) {
                                 return category_of(id) ==
                                        SkillCategory::Navigate;
                               });
        if (it == mutated.steps.end()) {
          continue;
        }
        mutated.steps.erase(it);
        break;
      }
      case 2: {  // duplicate the first pick step
        auto it = std::find_if(mutated.steps.begin(), mutated.steps.end(),
                               [&](const SkillId& id) {
                                 return category_of(id) == SkillCategory::Pick;
                               });
        if (it == mutated.steps.end()) {
          continue;
        }
        mutated.steps.insert(it, *it);
        break;
      }
    }
    if (mutated.steps != intact.steps && breaks_the_loop(mutated)) {
      return mutated;
    }
  }
  return intact;
}

}  // namespace skillstate
