#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skillstate/external_planner.hpp"
#include "skillstate/result.hpp"
#include "skillstate/scenario.hpp"

namespace skillstate {

/// Which planner the suite drives, plus its knobs. Adversarial planners get
/// a fresh instance per episode; without a fixed invalid-attempt count each
/// episode derives its own from the episode seed, so retry pressure varies
/// across a run the way a flaky proposer would.
struct PlannerSelection {
  enum class Kind : std::uint8_t { Oracle, Adversarial, Replay, External };

  Kind kind = Kind::Oracle;
  std::optional<int> invalid_attempts;           // adversarial
  std::vector<std::vector<SkillId>> script;      // replay, one plan per call
  ExternalPlannerConfig external;                // external
};

std::string_view to_string(PlannerSelection::Kind kind);
std::optional<PlannerSelection::Kind> parse_planner_kind(
    std::string_view text);

/// Instantiates the selected planner for one episode. Adversarial planners
/// without a fixed invalid-attempt count derive one from the episode seed
/// and the policy's retry budget, matching what run_suite does per episode.
std::unique_ptr<Planner> make_planner(const PlannerSelection& selection,
                                      const SkillStateGraph& graph,
                                      const ExecPolicy& policy,
                                      std::uint64_t episode_seed);

/// A full benchmark specification: scenario, planner, the policy matrix
/// (closed loop on/off crossed with prune depths), and sampling shape.
/// Cells are tasks x closed_loop_axis x prune_axis, in listed order.
struct SuiteConfig {
  std::string scenario_path;
  PlannerSelection planner;
  std::vector<bool> closed_loop_axis{true};
  std::vector<std::optional<int>> prune_axis{std::nullopt};
  std::size_t episodes = 1;  // per cell, per group
  std::size_t groups = 1;
  std::uint64_t seed = 0;
  std::optional<int> max_retries_override;
  std::optional<long> step_limit_override;
  unsigned jobs = 1;  // execution parallelism; never affects report bytes
};

/// Parses a suite document:
///
///   {
///     "scenario": "scenario.json",
///     "planner": {"kind": "oracle"},
///     "matrix": {"closed_loop": [true, false], "prune_depth": [null, 2]},
///     "episodes": 30, "groups": 3, "seed": 11,
///     "max_retries": 2, "step_limit": 60
///   }
///
/// planner and matrix are optional (oracle; single closed-loop cell).
/// max_retries / step_limit, when present, override the scenario policy.
/// The scenario path is resolved against base_dir.
Result<SuiteConfig, std::vector<Diagnostic>> load_suite(
    const std::string& document, const std::string& base_dir = ".");

Result<SuiteConfig, std::vector<Diagnostic>> load_suite_file(
    const std::string& path);

/// Mean and population standard deviation over the trial groups.
struct Aggregate {
  double mean = 0.0;
  double stddev = 0.0;
  bool operator==(const Aggregate&) const = default;
};

struct CellReport {
  std::string id;
  std::string task_id;
  bool closed_loop = true;
  std::optional<int> prune_depth;
  std::size_t episodes = 0;  // total across groups

  Aggregate planning_success;
  Aggregate task_success;
  /// Entry k: fraction of episodes whose first k+1 goals completed.
  std::vector<Aggregate> phases;

  std::map<std::size_t, std::size_t> attempts_histogram;
  double mean_prompt_bytes = 0.0;

  std::size_t planning_failures = 0;
  std::size_t exec_successes = 0;
  std::size_t unrecoverable_state = 0;
  std::size_t step_limit_exceeded = 0;
  std::size_t regression_detected = 0;

  bool operator==(const CellReport&) const = default;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  std::size_t episodes_per_group = 0;
  std::size_t groups = 0;
  std::string config_digest;
  std::vector<CellReport> cells;

  bool operator==(const SuiteReport&) const = default;
};

/// Stable fingerprint of everything that shapes the report (jobs excluded:
/// parallelism must not change a single byte of output).
std::string config_digest(const SuiteConfig& config);

/// Runs every cell. Per-episode seeds derive from (seed, model rng_seed,
/// cell, group, episode), so results do not depend on scheduling; episode
/// failures are recorded in the report, never abort the run. Identical
/// configs produce identical reports regardless of the jobs setting.
Result<SuiteReport, std::vector<Diagnostic>> run_suite(
    const SuiteConfig& config);

enum class PhaseError : std::uint8_t { MixedTasks };

/// Entry k: fraction of traces whose goals_completed covers the first k+1
/// goal skills of the task. Non-increasing in k by prefix consistency.
Result<std::vector<double>, PhaseError> phase_table(
    const std::vector<EpisodeTrace>& traces, const TaskSpec& task);

enum class ReportFormat : std::uint8_t { Machine, Human };
std::optional<ReportFormat> parse_report_format(std::string_view text);

/// Machine: versioned canonical JSON. Human: aligned tables. Both emit
/// identical bytes for identical reports.
std::string emit_report(const SuiteReport& report, ReportFormat format);

/// CSV projection of the phase table: one row per phase, one column per
/// cell (mean over groups); cells with fewer goals leave the field empty.
std::string phase_csv(const SuiteReport& report);

/// Checks a machine report against the schema plus the structural
/// invariants (phase monotonicity, episode conservation, rates in range).
/// Returns the first violation, or nothing when the document is valid.
std::optional<std::string> validate_machine_report(const std::string& text);

/// One structured record per episode (canonical JSON), the trace export
/// behind `simulate --out`.
std::string serialize_trace(const EpisodeTrace& trace);

}  // namespace skillstate
