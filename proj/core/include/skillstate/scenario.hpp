#pragma once

#include <string>
#include <vector>

#include "skillstate/graph.hpp"
#include "skillstate/graph_io.hpp"
#include "skillstate/result.hpp"
#include "skillstate/sim.hpp"

namespace skillstate {

/// One benchmarkable task: a TaskSpec plus the stable id reports key on.
struct ScenarioTask {
  std::string id;
  TaskSpec spec;
};

/// A graph, the tasks to run against it, a failure model, and the policy
/// defaults episodes start from (benchmark cells override parts of it).
struct Scenario {
  SkillStateGraph graph;
  std::vector<ScenarioTask> tasks;
  FailureModel failure_model;
  ExecPolicy policy;

  const ScenarioTask* find_task(const std::string& id) const;
};

/// Parses and validates a scenario document:
///
///   {
///     "graph": "relative/or/absolute.json",
///     "tasks": [
///       {"id": "...", "instruction": "...",
///        "goal_skills": ["..."], "initial": "(loc,left,right)"}
///     ],
///     "failure_model": {
///       "rng_seed": 0,
///       "base": {"p_ok": 1.0, "weights": {"DropInPlace": 1.0, ...}},
///       "per_category": {"Place": {...}},
///       "per_skill": {"some_skill": {...}}
///     },
///     "policy": {"closed_loop": true, "max_retries": 2,
///                "prune_depth": null, "step_limit": null,
///                "semantic_check": false, "replan_route": "search"}
///   }
///
/// failure_model and policy are optional and default to the benign model
/// (p_ok = 1) and the default ExecPolicy. The graph path is resolved
/// against base_dir; graph diagnostics come back with a "graph:" prefix.
/// Every finding is collected, not just the first.
Result<Scenario, std::vector<Diagnostic>> load_scenario(
    const std::string& document, const std::string& base_dir = ".");

Result<Scenario, std::vector<Diagnostic>> load_scenario_file(
    const std::string& path);

}  // namespace skillstate
