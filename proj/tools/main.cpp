#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "skillstate/dot.hpp"
#include "skillstate/external_planner.hpp"
#include "skillstate/graph_io.hpp"
#include "skillstate/planner.hpp"
#include "skillstate/scenario.hpp"
#include "skillstate/sim.hpp"
#include "skillstate/suite.hpp"
#include "skillstate/verify.hpp"

namespace {

using namespace skillstate;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitVerdict = 3;
constexpr int kExitInvalid = 4;
constexpr int kExitTransport = 5;

// Data goes to --out or stdout; nothing reaches stdout on failure paths.
int write_product(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write '" << out_path << "'\n";
    return kExitInvalid;
  }
  out << text;
  return kExitOk;
}

int fail_diagnostics(const std::vector<Diagnostic>& diags) {
  std::cerr << format_diagnostics(diags);
  return kExitInvalid;
}

int exit_for(PlanningFailureCause cause) {
  return cause == PlanningFailureCause::Transport ? kExitTransport
                                                  : kExitVerdict;
}

ReportFormat format_of(const std::string& name) {
  return *parse_report_format(name);  // flag values are pre-validated
}

/// One skill id per line; `#` starts a comment, blank lines are skipped.
Result<Plan, std::string> read_plan_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return std::string("cannot read plan file '") + path + "'";
  }
  Plan plan;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) {
      continue;
    }
    auto end = line.find_last_not_of(" \t\r");
    plan.steps.push_back(SkillId{line.substr(begin, end - begin + 1)});
  }
  return plan;
}

struct StateFlag {
  std::string literal;

  /// Malformed literals are usage errors; well-formed ones naming things
  /// the graph does not know are validation errors.
  Result<EmbodimentState, int> resolve(const SkillStateGraph& graph) const {
    auto parsed = parse_state_literal(literal);
    if (!parsed.ok()) {
      std::cerr << "--state: " << parsed.error() << "\n";
      return kExitUsage;
    }
    const EmbodimentState& state = parsed.value();
    if (graph.locations.count(state.location) == 0) {
      std::cerr << "--state: unknown location '" << state.location.name
                << "'\n";
      return kExitInvalid;
    }
    for (const auto& held : {state.left, state.right}) {
      if (held && graph.objects.count(*held) == 0) {
        std::cerr << "--state: unknown object '" << held->name << "'\n";
        return kExitInvalid;
      }
    }
    return state;
  }
};

// --- validate ----------------------------------------------------------

std::string graph_summary(const SkillStateGraph& graph, ReportFormat format) {
  const char* mode =
      graph.edge_mode == EdgeMode::Declared ? "declared" : "derived";
  if (format == ReportFormat::Machine) {
    ordered_json doc;
    doc["kind"] = "graph";
    doc["locations"] = graph.locations.size();
    doc["objects"] = graph.objects.size();
    doc["actions"] = graph.actions.size();
    doc["skills"] = graph.skills.size();
    doc["edges"] = graph.edges.size();
    doc["edge_mode"] = mode;
    doc["state_space"] = graph.state_space_size();
    return doc.dump(2) + "\n";
  }
  std::ostringstream out;
  out << "graph ok: " << graph.locations.size() << " locations, "
      << graph.objects.size() << " objects, " << graph.skills.size()
      << " skills, " << graph.edges.size() << " edges (" << mode << "), "
      << graph.state_space_size() << " states\n";
  return out.str();
}

int run_validate(const std::string& graph_path,
                 const std::string& scenario_path,
                 const std::string& suite_path, const std::string& format_name,
                 const std::string& out_path) {
  const int picked = (graph_path.empty() ? 0 : 1) +
                     (scenario_path.empty() ? 0 : 1) +
                     (suite_path.empty() ? 0 : 1);
  if (picked != 1) {
    std::cerr << "validate needs exactly one of --graph, --scenario, "
                 "--suite\n";
    return kExitUsage;
  }
  ReportFormat format = format_of(format_name);

  if (!graph_path.empty()) {
    auto loaded = load_graph_file(graph_path);
    if (!loaded.ok()) {
      return fail_diagnostics(loaded.error());
    }
    return write_product(graph_summary(loaded.value(), format), out_path);
  }

  if (!scenario_path.empty()) {
    auto loaded = load_scenario_file(scenario_path);
    if (!loaded.ok()) {
      return fail_diagnostics(loaded.error());
    }
    const Scenario& scenario = loaded.value();
    if (format == ReportFormat::Machine) {
      ordered_json doc;
      doc["kind"] = "scenario";
      doc["tasks"] = scenario.tasks.size();
      doc["graph_skills"] = scenario.graph.skills.size();
      return write_product(doc.dump(2) + "\n", out_path);
    }
    std::ostringstream out;
    out << "scenario ok: " << scenario.tasks.size() << " tasks over "
        << scenario.graph.skills.size() << " skills\n";
    return write_product(out.str(), out_path);
  }

  auto loaded = load_suite_file(suite_path);
  if (!loaded.ok()) {
    return fail_diagnostics(loaded.error());
  }
  const SuiteConfig& config = loaded.value();
  auto scenario = load_scenario_file(config.scenario_path);
  if (!scenario.ok()) {
    return fail_diagnostics(scenario.error());
  }
  const std::size_t cells = config.closed_loop_axis.size() *
                            config.prune_axis.size() *
                            scenario.value().tasks.size();
  const std::size_t total = cells * config.episodes * config.groups;
  if (format == ReportFormat::Machine) {
    ordered_json doc;
    doc["kind"] = "suite";
    doc["tasks"] = scenario.value().tasks.size();
    doc["cells"] = cells;
    doc["episodes_per_group"] = config.episodes;
    doc["groups"] = config.groups;
    doc["total_episodes"] = total;
    doc["config_digest"] = config_digest(config);
    return write_product(doc.dump(2) + "\n", out_path);
  }
  std::ostringstream out;
  out << "suite ok: " << cells << " cells, " << config.episodes
      << " episodes x " << config.groups << " groups (" << total
      << " total)\n";
  return write_product(out.str(), out_path);
}

// --- verify ------------------------------------------------------------

std::string render_verify(const VerificationReport& report,
                          const SkillStateGraph& graph, const Plan& plan,
                          ReportFormat format) {
  std::optional<std::string> feedback;
  if (!report.feasible) {
    auto built = conflict_feedback(report, graph);
    if (built.ok()) {
      feedback = built.value();
    }
  }

  if (format == ReportFormat::Machine) {
    ordered_json doc;
    doc["feasible"] = report.feasible;
    doc["steps"] = plan.steps.size();
    ordered_json chain = ordered_json::array();
    for (const auto& state : report.state_chain) {
      chain.push_back(to_literal(state));
    }
    doc["state_chain"] = std::move(chain);
    if (report.conflict) {
      ordered_json conflict;
      conflict["step"] = report.conflict->index + 1;
      conflict["skill"] = report.conflict->skill.name;
      conflict["kind"] = std::string(to_string(report.conflict->kind));
      conflict["detail"] = report.conflict->detail;
      conflict["feedback"] = feedback ? ordered_json(*feedback)
                                      : ordered_json(nullptr);
      doc["conflict"] = std::move(conflict);
    } else {
      doc["conflict"] = nullptr;
    }
    return doc.dump(2) + "\n";
  }

  std::ostringstream out;
  if (report.feasible) {
    out << "plan is feasible: " << plan.steps.size() << " steps\n";
    out << "state chain:\n";
    for (std::size_t i = 0; i < report.state_chain.size(); ++i) {
      if (i == 0) {
        out << "  start: ";
      } else {
        out << "  after " << i << " (" << plan.steps[i - 1].name << "): ";
      }
      out << to_literal(report.state_chain[i]) << "\n";
    }
    return out.str();
  }
  const Conflict& conflict = *report.conflict;
  out << "plan is infeasible: conflict at step " << conflict.index + 1 << " ("
      << conflict.skill.name << "): " << to_string(conflict.kind) << "\n";
  if (!conflict.detail.empty()) {
    out << conflict.detail << "\n";
  }
  if (feedback) {
    out << *feedback << "\n";
  }
  out << "state before the conflict: " << to_literal(report.state_chain.back())
      << "\n";
  return out.str();
}

int run_verify(const std::string& graph_path, const StateFlag& state_flag,
               const std::string& plan_path, bool check_adjacency,
               const std::string& format_name, const std::string& out_path) {
  auto loaded = load_graph_file(graph_path);
  if (!loaded.ok()) {
    return fail_diagnostics(loaded.error());
  }
  const SkillStateGraph& graph = loaded.value();

  auto state = state_flag.resolve(graph);
  if (!state.ok()) {
    return state.error();
  }
  auto plan = read_plan_file(plan_path);
  if (!plan.ok()) {
    std::cerr << plan.error() << "\n";
    return kExitInvalid;
  }

  VerificationReport report =
      verify(graph, state.value(), plan.value(), check_adjacency);
  std::string text =
      render_verify(report, graph, plan.value(), format_of(format_name));
  int wrote = write_product(text, out_path);
  if (wrote != kExitOk) {
    return wrote;
  }
  return report.feasible ? kExitOk : kExitVerdict;
}

// --- plan / simulate ----------------------------------------------------

struct PlannerFlags {
  std::string kind = "oracle";
  std::optional<int> invalid_attempts;
  std::vector<std::string> plan_paths;  // replay scripts
  std::string endpoint;
  std::string model = "default";
  std::string auth_env = "SKILLSTATE_API_KEY";
  double timeout_seconds = 30.0;

  Result<PlannerSelection, int> resolve() const {
    PlannerSelection selection;
    selection.kind = *parse_planner_kind(kind);
    selection.invalid_attempts = invalid_attempts;
    switch (selection.kind) {
      case PlannerSelection::Kind::Replay: {
        if (plan_paths.empty()) {
          std::cerr << "--planner replay needs at least one --plan file\n";
          return kExitUsage;
        }
        for (const auto& path : plan_paths) {
          auto plan = read_plan_file(path);
          if (!plan.ok()) {
            std::cerr << plan.error() << "\n";
            return kExitInvalid;
          }
          selection.script.push_back(plan.value().steps);
        }
        break;
      }
      case PlannerSelection::Kind::External: {
        if (endpoint.empty()) {
          std::cerr << "--planner external needs --endpoint\n";
          return kExitUsage;
        }
        selection.external.endpoint = endpoint;
        selection.external.model = model;
        selection.external.auth_env = auth_env;
        selection.external.timeout_seconds = timeout_seconds;
        break;
      }
      default:
        break;
    }
    return selection;
  }
};

const ScenarioTask* pick_task(const Scenario& scenario,
                              const std::string& task_id) {
  if (!task_id.empty()) {
    const ScenarioTask* task = scenario.find_task(task_id);
    if (task == nullptr) {
      std::cerr << "no task '" << task_id << "' in the scenario\n";
    }
    return task;
  }
  if (scenario.tasks.size() == 1) {
    return &scenario.tasks[0];
  }
  std::cerr << "the scenario has " << scenario.tasks.size()
            << " tasks, pick one with --task\n";
  return nullptr;
}

struct PolicyFlags {
  std::string closed_loop;  // "", "on", "off"
  std::optional<int> prune_depth;
  std::optional<int> max_retries;
  std::optional<long> step_limit;
  std::string replan_route;  // "", "search", "planner"

  ExecPolicy apply(ExecPolicy policy) const {
    if (!closed_loop.empty()) {
      policy.closed_loop = closed_loop == "on";
    }
    if (prune_depth) {
      policy.prune_depth = *prune_depth;
    }
    if (max_retries) {
      policy.max_retries = *max_retries;
    }
    if (step_limit) {
      policy.step_limit = *step_limit;
    }
    if (!replan_route.empty()) {
      policy.replan_route = replan_route == "planner"
                                ? ExecPolicy::ReplanRoute::Planner
                                : ExecPolicy::ReplanRoute::Search;
    }
    return policy;
  }
};

int run_plan(const std::string& scenario_path, const std::string& task_id,
             const PlannerFlags& planner_flags, const PolicyFlags& policy_flags,
             std::uint64_t seed, const std::string& out_path) {
  auto loaded = load_scenario_file(scenario_path);
  if (!loaded.ok()) {
    return fail_diagnostics(loaded.error());
  }
  const Scenario& scenario = loaded.value();
  const ScenarioTask* task = pick_task(scenario, task_id);
  if (task == nullptr) {
    return kExitInvalid;
  }
  auto selection = planner_flags.resolve();
  if (!selection.ok()) {
    return selection.error();
  }
  ExecPolicy policy = policy_flags.apply(scenario.policy);
  auto planner =
      make_planner(selection.value(), scenario.graph, policy, seed);
  auto outcome = plan_with_verification(*planner, scenario.graph, task->spec,
                                        policy.max_retries,
                                        policy.prune_depth);
  if (!outcome.ok()) {
    std::cerr << "planning failed: " << to_string(outcome.error().cause)
              << " after " << outcome.error().transcript.size()
              << " attempts\n";
    return exit_for(outcome.error().cause);
  }
  const PlanningSuccess& success = outcome.value();
  std::ostringstream out;
  out << "# task " << task->id << ", " << success.plan.steps.size()
      << " steps, accepted on attempt " << success.attempts << "\n";
  for (const auto& step : success.plan.steps) {
    out << step.name << "\n";
  }
  return write_product(out.str(), out_path);
}

int run_simulate(const std::string& scenario_path, const std::string& task_id,
                 const PlannerFlags& planner_flags,
                 const PolicyFlags& policy_flags, std::uint64_t seed,
                 const std::string& out_path) {
  auto loaded = load_scenario_file(scenario_path);
  if (!loaded.ok()) {
    return fail_diagnostics(loaded.error());
  }
  const Scenario& scenario = loaded.value();
  const ScenarioTask* task = pick_task(scenario, task_id);
  if (task == nullptr) {
    return kExitInvalid;
  }
  auto selection = planner_flags.resolve();
  if (!selection.ok()) {
    return selection.error();
  }
  ExecPolicy policy = policy_flags.apply(scenario.policy);
  auto planner =
      make_planner(selection.value(), scenario.graph, policy, seed);
  EpisodeTrace trace = run_episode(scenario.graph, task->spec, *planner,
                                   scenario.failure_model, policy, seed);

  if (!trace.planning.accepted &&
      trace.planning.failure_cause == PlanningFailureCause::Transport) {
    std::cerr << "planning failed: transport\n";
    return kExitTransport;
  }
  int wrote = write_product(serialize_trace(trace), out_path);
  if (wrote != kExitOk) {
    return wrote;
  }
  return trace.terminal.success ? kExitOk : kExitVerdict;
}

// --- bench --------------------------------------------------------------

int run_bench(const std::string& suite_path, std::optional<std::uint64_t> seed,
              unsigned jobs, const PolicyFlags& policy_flags,
              const std::string& format_name, const std::string& out_path,
              const std::string& phase_csv_path) {
  auto loaded = load_suite_file(suite_path);
  if (!loaded.ok()) {
    return fail_diagnostics(loaded.error());
  }
  SuiteConfig config = std::move(loaded).take();
  if (seed) {
    config.seed = *seed;
  }
  config.jobs = jobs;
  if (policy_flags.max_retries) {
    config.max_retries_override = policy_flags.max_retries;
  }
  if (policy_flags.step_limit) {
    config.step_limit_override = policy_flags.step_limit;
  }

  auto ran = run_suite(config);
  if (!ran.ok()) {
    return fail_diagnostics(ran.error());
  }
  const SuiteReport& report = ran.value();
  int wrote =
      write_product(emit_report(report, format_of(format_name)), out_path);
  if (wrote != kExitOk) {
    return wrote;
  }
  if (!phase_csv_path.empty()) {
    std::ofstream csv(phase_csv_path, std::ios::binary);
    if (!csv) {
      std::cerr << "cannot write '" << phase_csv_path << "'\n";
      return kExitInvalid;
    }
    csv << phase_csv(report);
  }
  return kExitOk;
}

// --- export-dot ---------------------------------------------------------

int run_export_dot(const std::string& graph_path, bool annotated,
                   const std::string& state_literal,
                   std::optional<int> prune_depth,
                   const std::string& out_path) {
  if (prune_depth && state_literal.empty()) {
    std::cerr << "--prune-depth needs --state to anchor the view\n";
    return kExitUsage;
  }
  auto loaded = load_graph_file(graph_path);
  if (!loaded.ok()) {
    return fail_diagnostics(loaded.error());
  }
  const SkillStateGraph& graph = loaded.value();

  if (state_literal.empty()) {
    return write_product(export_dot(graph, annotated), out_path);
  }

  StateFlag state_flag{state_literal};
  auto state = state_flag.resolve(graph);
  if (!state.ok()) {
    return state.error();
  }
  TopoView view = prune_view(graph, state.value(),
                             prune_depth ? *prune_depth : kUnboundedDepth);
  auto dot = export_dot(view, annotated);
  if (!dot.ok()) {
    std::cerr << "--annotated needs the full graph (drop --state)\n";
    return kExitUsage;
  }
  return write_product(dot.value(), out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"state-grounded skill planning tools"};
  app.require_subcommand(1);

  const std::vector<std::string> format_names = {"machine", "human"};
  const std::vector<std::string> planner_names = {"oracle", "adversarial",
                                                  "replay", "external"};

  // validate
  auto* validate_cmd =
      app.add_subcommand("validate", "Check a graph, scenario, or suite file");
  std::string v_graph, v_scenario, v_suite, v_format = "human", v_out;
  validate_cmd->add_option("--graph", v_graph, "Graph file");
  validate_cmd->add_option("--scenario", v_scenario, "Scenario file");
  validate_cmd->add_option("--suite", v_suite, "Suite file");
  validate_cmd->add_option("--format", v_format, "Output format")
      ->check(CLI::IsMember(format_names));
  validate_cmd->add_option("--out", v_out, "Write the summary here");

  // verify
  auto* verify_cmd =
      app.add_subcommand("verify", "Check a plan against a graph");
  std::string f_graph, f_state, f_plan, f_format = "human", f_out;
  bool f_adjacency = true;
  verify_cmd->add_option("--graph", f_graph, "Graph file")->required();
  verify_cmd->add_option("--state", f_state, "Initial state literal")
      ->required();
  verify_cmd->add_option("--plan", f_plan, "Plan file, one skill per line")
      ->required();
  verify_cmd->add_flag("--check-adjacency,!--no-check-adjacency", f_adjacency,
                       "Also require consecutive steps to follow graph edges");
  verify_cmd->add_option("--format", f_format, "Output format")
      ->check(CLI::IsMember(format_names));
  verify_cmd->add_option("--out", f_out, "Write the report here");

  // plan
  auto* plan_cmd =
      app.add_subcommand("plan", "Produce a verified plan for a task");
  std::string p_scenario, p_task, p_out;
  std::uint64_t p_seed = 0;
  PlannerFlags p_planner;
  PolicyFlags p_policy;
  plan_cmd->add_option("--scenario", p_scenario, "Scenario file")->required();
  plan_cmd->add_option("--task", p_task, "Task id from the scenario");
  plan_cmd->add_option("--planner", p_planner.kind, "Plan source")
      ->check(CLI::IsMember(planner_names));
  plan_cmd->add_option("--invalid-attempts", p_planner.invalid_attempts,
                       "Adversarial: corrupted proposals before the real one");
  plan_cmd->add_option("--plan", p_planner.plan_paths,
                       "Replay: scripted plan file, repeatable");
  plan_cmd->add_option("--endpoint", p_planner.endpoint,
                       "External: planner base URL");
  plan_cmd->add_option("--model", p_planner.model, "External: model name");
  plan_cmd->add_option("--auth-env", p_planner.auth_env,
                       "External: env var holding the API key");
  plan_cmd->add_option("--timeout-seconds", p_planner.timeout_seconds,
                       "External: request timeout");
  plan_cmd->add_option("--prune-depth", p_policy.prune_depth,
                       "Restrict the planner view to this depth");
  plan_cmd->add_option("--max-retries", p_policy.max_retries,
                       "Rejected-proposal retries");
  plan_cmd->add_option("--seed", p_seed, "Random seed");
  plan_cmd->add_option("--out", p_out, "Write the plan here");

  // simulate
  auto* sim_cmd =
      app.add_subcommand("simulate", "Run one closed or open loop episode");
  std::string s_scenario, s_task, s_out;
  std::uint64_t s_seed = 0;
  PlannerFlags s_planner;
  PolicyFlags s_policy;
  sim_cmd->add_option("--scenario", s_scenario, "Scenario file")->required();
  sim_cmd->add_option("--task", s_task, "Task id from the scenario");
  sim_cmd->add_option("--planner", s_planner.kind, "Plan source")
      ->check(CLI::IsMember(planner_names));
  sim_cmd->add_option("--invalid-attempts", s_planner.invalid_attempts,
                      "Adversarial: corrupted proposals before the real one");
  sim_cmd->add_option("--plan", s_planner.plan_paths,
                      "Replay: scripted plan file, repeatable");
  sim_cmd->add_option("--endpoint", s_planner.endpoint,
                      "External: planner base URL");
  sim_cmd->add_option("--model", s_planner.model, "External: model name");
  sim_cmd->add_option("--auth-env", s_planner.auth_env,
                      "External: env var holding the API key");
  sim_cmd->add_option("--timeout-seconds", s_planner.timeout_seconds,
                      "External: request timeout");
  sim_cmd->add_option("--closed-loop", s_policy.closed_loop,
                      "Replan after deviations")
      ->check(CLI::IsMember({"on", "off"}));
  sim_cmd->add_option("--prune-depth", s_policy.prune_depth,
                      "Restrict the planner view to this depth");
  sim_cmd->add_option("--max-retries", s_policy.max_retries,
                      "Rejected-proposal retries");
  sim_cmd->add_option("--step-limit", s_policy.step_limit,
                      "Execution step budget");
  sim_cmd->add_option("--replan-route", s_policy.replan_route,
                      "Corrective plan source after deviations")
      ->check(CLI::IsMember({"search", "planner"}));
  sim_cmd->add_option("--seed", s_seed, "Random seed");
  sim_cmd->add_option("--out", s_out, "Write the episode trace here");

  // bench
  auto* bench_cmd =
      app.add_subcommand("bench", "Run a benchmark suite and report");
  std::string b_suite, b_format = "machine", b_out, b_phase_csv;
  std::optional<std::uint64_t> b_seed;
  unsigned b_jobs = 1;
  PolicyFlags b_policy;
  bench_cmd->add_option("--suite", b_suite, "Suite file")->required();
  bench_cmd->add_option("--seed", b_seed, "Override the suite seed");
  bench_cmd->add_option("--jobs", b_jobs, "Worker threads")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max-retries", b_policy.max_retries,
                        "Override the scenario retry budget");
  bench_cmd->add_option("--step-limit", b_policy.step_limit,
                        "Override the scenario step budget");
  bench_cmd->add_option("--format", b_format, "Output format")
      ->check(CLI::IsMember(format_names));
  bench_cmd->add_option("--out", b_out, "Write the report here");
  bench_cmd->add_option("--phase-csv", b_phase_csv,
                        "Also write the phase table as CSV here");

  // export-dot
  auto* dot_cmd =
      app.add_subcommand("export-dot", "Emit the graph as a DOT digraph");
  std::string d_graph, d_state, d_out;
  bool d_annotated = false;
  std::optional<int> d_prune;
  dot_cmd->add_option("--graph", d_graph, "Graph file")->required();
  dot_cmd->add_flag("--annotated", d_annotated,
                    "Label nodes with preconditions and state variations");
  dot_cmd->add_option("--state", d_state,
                      "Export the view reachable from this state instead");
  dot_cmd->add_option("--prune-depth", d_prune,
                      "Depth bound for the --state view");
  dot_cmd->add_option("--out", d_out, "Write the DOT text here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (app.got_subcommand(validate_cmd)) {
    return run_validate(v_graph, v_scenario, v_suite, v_format, v_out);
  }
  if (app.got_subcommand(verify_cmd)) {
    return run_verify(f_graph, StateFlag{f_state}, f_plan, f_adjacency,
                      f_format, f_out);
  }
  if (app.got_subcommand(plan_cmd)) {
    return run_plan(p_scenario, p_task, p_planner, p_policy, p_seed, p_out);
  }
  if (app.got_subcommand(sim_cmd)) {
    return run_simulate(s_scenario, s_task, s_planner, s_policy, s_seed,
                        s_out);
  }
  if (app.got_subcommand(bench_cmd)) {
    return run_bench(b_suite, b_seed, b_jobs, b_policy, b_format, b_out,
                     b_phase_csv);
  }
  if (app.got_subcommand(dot_cmd)) {
    return run_export_dot(d_graph, d_annotated, d_state, d_prune, d_out);
  }
  return kExitUsage;
}
