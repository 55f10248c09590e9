#include "skillstate/suite.hpp"

#include <algorithm>
#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "skillstate/planner.hpp"
#include "skillstate/rng.hpp"
#include "skillstate/state.hpp"

namespace skillstate {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;
using Code = Diagnostic::Code;

std::string format_double(double value, int precision) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", precision, value);
  return buffer;
}

// --- suite document -------------------------------------------------------

class SuiteParser {
 public:
  explicit SuiteParser(std::string base_dir) : base_dir_(std::move(base_dir)) {}

  Result<SuiteConfig, std::vector<Diagnostic>> parse(
      const std::string& document) {
    json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      fail(Code::BadDocument, "$", "not a structured object document");
      return std::move(diags_);
    }

    SuiteConfig config;
    parse_scenario(doc, config);
    if (auto it = doc.find("planner"); it != doc.end()) {
      parse_planner(*it, config.planner);
    }
    if (auto it = doc.find("matrix"); it != doc.end()) {
      parse_matrix(*it, config);
    }
    parse_count(doc, "episodes", config.episodes);
    parse_count(doc, "groups", config.groups);
    if (auto it = doc.find("seed"); it != doc.end()) {
      if (it->is_number_unsigned()) {
        config.seed = it->get<std::uint64_t>();
      } else {
        fail(Code::BadValue, "seed", "must be a non-negative integer");
      }
    }
    if (auto it = doc.find("max_retries"); it != doc.end()) {
      if (it->is_number_integer() && it->get<int>() >= 0) {
        config.max_retries_override = it->get<int>();
      } else {
        fail(Code::BadValue, "max_retries", "must be a non-negative integer");
      }
    }
    if (auto it = doc.find("step_limit"); it != doc.end()) {
      if (it->is_number_integer() && it->get<long>() >= 1) {
        config.step_limit_override = it->get<long>();
      } else {
        fail(Code::BadValue, "step_limit", "must be a positive integer");
      }
    }
    for (const auto& [key, value] : doc.items()) {
      (void)value;
      if (key != "scenario" && key != "planner" && key != "matrix" &&
          key != "episodes" && key != "groups" && key != "seed" &&
          key != "max_retries" && key != "step_limit") {
        fail(Code::BadDocument, key, "unknown key");
      }
    }

    if (!diags_.empty()) {
      return std::move(diags_);
    }
    return config;
  }

 private:
  void fail(Code code, std::string path, std::string message) {
    diags_.push_back({code, std::move(path), std::move(message)});
  }

  void parse_scenario(const json& doc, SuiteConfig& config) {
    auto it = doc.find("scenario");
    if (it == doc.end() || !it->is_string()) {
      fail(Code::BadDocument, "scenario", "required string path");
      return;
    }
    std::filesystem::path path = it->get<std::string>();
    if (path.is_relative()) {
      path = std::filesystem::path(base_dir_) / path;
    }
    config.scenario_path = path.string();
  }

  void parse_count(const json& doc, const char* key, std::size_t& into) {
    auto it = doc.find(key);
    if (it == doc.end()) {
      return;
    }
    if (it->is_number_unsigned() && it->get<std::size_t>() >= 1) {
      into = it->get<std::size_t>();
    } else {
      fail(Code::BadValue, key, "must be a positive integer");
    }
  }

  void parse_planner(const json& node, PlannerSelection& planner) {
    if (!node.is_object()) {
      fail(Code::BadDocument, "planner", "must be an object");
      return;
    }
    if (auto it = node.find("kind"); it != node.end() && it->is_string()) {
      if (auto kind = parse_planner_kind(it->get<std::string>())) {
        planner.kind = *kind;
      } else {
        fail(Code::BadValue, "planner.kind",
             "must be oracle, adversarial, replay or external");
        return;
      }
    } else {
      fail(Code::BadDocument, "planner.kind", "required string");
      return;
    }
    for (const auto& [key, value] : node.items()) {
      if (key == "kind") {
        continue;
      }
      std::string path = "planner." + key;
      if (key == "invalid_attempts" &&
          planner.kind == PlannerSelection::Kind::Adversarial) {
        if (value.is_number_integer() && value.get<int>() >= 0) {
          planner.invalid_attempts = value.get<int>();
        } else {
          fail(Code::BadValue, path, "must be a non-negative integer");
        }
      } else if (key == "script" &&
                 planner.kind == PlannerSelection::Kind::Replay) {
        parse_script(value, planner);
      } else if (planner.kind == PlannerSelection::Kind::External &&
                 parse_external_key(key, value, path, planner.external)) {
        // handled
      } else {
        fail(Code::BadDocument, path, "unknown key for this planner kind");
      }
    }
    if (planner.kind == PlannerSelection::Kind::Replay &&
        planner.script.empty()) {
      fail(Code::BadDocument, "planner.script",
           "replay planner needs a non-empty script");
    }
    if (planner.kind == PlannerSelection::Kind::External &&
        planner.external.endpoint.empty()) {
      fail(Code::BadDocument, "planner.endpoint",
           "external planner needs an endpoint");
    }
  }

  bool parse_external_key(const std::string& key, const json& value,
                          const std::string& path,
                          ExternalPlannerConfig& external) {
    if (key == "endpoint") {
      if (value.is_string()) {
        external.endpoint = value.get<std::string>();
      } else {
        fail(Code::BadValue, path, "must be a string");
      }
    } else if (key == "model") {
      if (value.is_string()) {
        external.model = value.get<std::string>();
      } else {
        fail(Code::BadValue, path, "must be a string");
      }
    } else if (key == "timeout_seconds") {
      if (value.is_number() && value.get<double>() > 0.0) {
        external.timeout_seconds = value.get<double>();
      } else {
        fail(Code::BadValue, path, "must be a positive number");
      }
    } else if (key == "auth_env") {
      if (value.is_string()) {
        external.auth_env = value.get<std::string>();
      } else {
        fail(Code::BadValue, path, "must be a string");
      }
    } else {
      return false;
    }
    return true;
  }

  void parse_script(const json& node, PlannerSelection& planner) {
    if (!node.is_array()) {
      fail(Code::BadDocument, "planner.script",
           "must be a list of plans (lists of skill ids)");
      return;
    }
    for (std::size_t i = 0; i < node.size(); ++i) {
      const json& plan = node[i];
      std::string path = "planner.script[" + std::to_string(i) + "]";
      if (!plan.is_array()) {
        fail(Code::BadDocument, path, "plan must be a list of skill ids");
        continue;
      }
      std::vector<SkillId> steps;
      for (const json& step : plan) {
        if (!step.is_string()) {
          fail(Code::BadDocument, path, "skill ids must be strings");
          steps.clear();
          break;
        }
        steps.push_back(SkillId{step.get<std::string>()});
      }
      planner.script.push_back(std::move(steps));
    }
  }

  void parse_matrix(const json& node, SuiteConfig& config) {
    if (!node.is_object()) {
      fail(Code::BadDocument, "matrix", "must be an object");
      return;
    }
    if (auto it = node.find("closed_loop"); it != node.end()) {
      if (!it->is_array() || it->empty()) {
        fail(Code::BadDocument, "matrix.closed_loop",
             "must be a non-empty list of booleans");
      } else {
        config.closed_loop_axis.clear();
        for (const json& value : *it) {
          if (value.is_boolean()) {
            config.closed_loop_axis.push_back(value.get<bool>());
          } else {
            fail(Code::BadValue, "matrix.closed_loop", "must be booleans");
          }
        }
      }
    }
    if (auto it = node.find("prune_depth"); it != node.end()) {
      if (!it->is_array() || it->empty()) {
        fail(Code::BadDocument, "matrix.prune_depth",
             "must be a non-empty list of null-or-integer entries");
      } else {
        config.prune_axis.clear();
        for (const json& value : *it) {
          if (value.is_null()) {
            config.prune_axis.push_back(std::nullopt);
          } else if (value.is_number_integer() && value.get<int>() >= 0) {
            config.prune_axis.push_back(value.get<int>());
          } else {
            fail(Code::BadValue, "matrix.prune_depth",
                 "entries must be null or non-negative integers");
          }
        }
      }
    }
    for (const auto& [key, value] : node.items()) {
      (void)value;
      if (key != "closed_loop" && key != "prune_depth") {
        fail(Code::BadDocument, "matrix." + key, "unknown key");
      }
    }
  }

  std::string base_dir_;
  std::vector<Diagnostic> diags_;
};

// --- running ---------------------------------------------------------------

struct CellSpec {
  const ScenarioTask* task = nullptr;
  bool closed_loop = true;
  std::optional<int> prune_depth;
};

std::string cell_id(const CellSpec& cell) {
  std::string id = cell.task->id;
  id += cell.closed_loop ? "|closed=on" : "|closed=off";
  id += "|prune=";
  id += cell.prune_depth ? std::to_string(*cell.prune_depth) : "none";
  return id;
}

}  // namespace

std::unique_ptr<Planner> make_planner(const PlannerSelection& selection,
                                      const SkillStateGraph& graph,
                                      const ExecPolicy& policy,
                                      std::uint64_t episode_seed) {
  switch (selection.kind) {
    case PlannerSelection::Kind::Oracle:
      return std::make_unique<OraclePlanner>(graph);
    case PlannerSelection::Kind::Adversarial: {
      int invalid =
          selection.invalid_attempts
              ? *selection.invalid_attempts
              : static_cast<int>(
                    derive_seed(episode_seed, {0x61647633}) %
                    static_cast<std::uint64_t>(policy.max_retries + 2));
      return std::make_unique<AdversarialPlanner>(graph, invalid,
                                                  episode_seed);
    }
    case PlannerSelection::Kind::Replay: {
      std::vector<Proposal> proposals;
      for (const auto& steps : selection.script) {
        proposals.push_back(Plan{steps});
      }
      return std::make_unique<ReplayPlanner>(std::move(proposals));
    }
    case PlannerSelection::Kind::External:
      return std::make_unique<ExternalPlanner>(selection.external);
  }
  return std::make_unique<OraclePlanner>(graph);
}

namespace {

Aggregate aggregate_of(const std::vector<double>& samples) {
  Aggregate out;
  if (samples.empty()) {
    return out;
  }
  double sum = 0.0;
  for (double v : samples) {
    sum += v;
  }
  out.mean = sum / static_cast<double>(samples.size());
  double spread = 0.0;
  for (double v : samples) {
    spread += (v - out.mean) * (v - out.mean);
  }
  out.stddev = std::sqrt(spread / static_cast<double>(samples.size()));
  return out;
}

CellReport summarize_cell(const CellSpec& cell,
                          const std::vector<EpisodeTrace>& traces,
                          std::size_t episodes, std::size_t groups) {
  CellReport report;
  report.id = cell_id(cell);
  report.task_id = cell.task->id;
  report.closed_loop = cell.closed_loop;
  report.prune_depth = cell.prune_depth;
  report.episodes = traces.size();

  const std::size_t goal_count = cell.task->spec.goal_skills.size();
  std::vector<double> plan_rates;
  std::vector<double> success_rates;
  std::vector<std::vector<double>> phase_rates(goal_count);
  std::size_t prompt_count = 0;
  double prompt_sum = 0.0;

  for (std::size_t g = 0; g < groups; ++g) {
    std::size_t plan_ok = 0;
    std::size_t success = 0;
    std::vector<std::size_t> phase_hits(goal_count, 0);
    for (std::size_t e = 0; e < episodes; ++e) {
      const EpisodeTrace& trace = traces[g * episodes + e];
      report.attempts_histogram[trace.planning.attempts] += 1;
      for (std::size_t bytes : trace.planning.prompt_bytes) {
        prompt_sum += static_cast<double>(bytes);
        prompt_count += 1;
      }
      if (!trace.planning.accepted) {
        report.planning_failures += 1;
      } else if (trace.terminal.success) {
        report.exec_successes += 1;
      } else if (auto mode = classify(trace)) {
        switch (*mode) {
          case TerminalMode::UnrecoverableState:
            report.unrecoverable_state += 1;
            break;
          case TerminalMode::StepLimitExceeded:
            report.step_limit_exceeded += 1;
            break;
          case TerminalMode::RegressionDetected:
            report.regression_detected += 1;
            break;
        }
      }
      plan_ok += trace.planning.accepted ? 1 : 0;
      success += trace.terminal.success ? 1 : 0;
      for (std::size_t k = 0; k < goal_count; ++k) {
        phase_hits[k] += trace.goals_completed.size() >= k + 1 ? 1 : 0;
      }
    }
    double denom = static_cast<double>(episodes);
    plan_rates.push_back(static_cast<double>(plan_ok) / denom);
    success_rates.push_back(static_cast<double>(success) / denom);
    for (std::size_t k = 0; k < goal_count; ++k) {
      phase_rates[k].push_back(static_cast<double>(phase_hits[k]) / denom);
    }
  }

  report.planning_success = aggregate_of(plan_rates);
  report.task_success = aggregate_of(success_rates);
  for (std::size_t k = 0; k < goal_count; ++k) {
    report.phases.push_back(aggregate_of(phase_rates[k]));
  }
  report.mean_prompt_bytes =
      prompt_count == 0 ? 0.0
                        : prompt_sum / static_cast<double>(prompt_count);

  // Structural invariants, enforced rather than hoped for.
  assert(report.planning_failures + report.exec_successes +
             report.unrecoverable_state + report.step_limit_exceeded +
             report.regression_detected ==
         report.episodes);
  for (std::size_t k = 1; k < report.phases.size(); ++k) {
    assert(report.phases[k].mean <= report.phases[k - 1].mean + 1e-12);
  }
  return report;
}

// --- machine format --------------------------------------------------------

ordered_json cell_to_json(const CellReport& cell) {
  ordered_json node;
  node["id"] = cell.id;
  node["task"] = cell.task_id;
  node["closed_loop"] = cell.closed_loop;
  if (cell.prune_depth) {
    node["prune_depth"] = *cell.prune_depth;
  } else {
    node["prune_depth"] = nullptr;
  }
  node["episodes"] = cell.episodes;

  ordered_json planning;
  planning["success_rate"] = {{"mean", cell.planning_success.mean},
                              {"stddev", cell.planning_success.stddev}};
  planning["failures"] = cell.planning_failures;
  ordered_json attempts = ordered_json::object();
  for (const auto& [count, hits] : cell.attempts_histogram) {
    attempts[std::to_string(count)] = hits;
  }
  planning["attempts"] = std::move(attempts);
  planning["mean_prompt_bytes"] = cell.mean_prompt_bytes;
  node["planning"] = std::move(planning);

  ordered_json execution;
  execution["success_rate"] = {{"mean", cell.task_success.mean},
                               {"stddev", cell.task_success.stddev}};
  execution["successes"] = cell.exec_successes;
  execution["unrecoverable_state"] = cell.unrecoverable_state;
  execution["step_limit_exceeded"] = cell.step_limit_exceeded;
  execution["regression_detected"] = cell.regression_detected;
  node["execution"] = std::move(execution);

  ordered_json phases = ordered_json::array();
  for (const auto& phase : cell.phases) {
    phases.push_back({{"mean", phase.mean}, {"stddev", phase.stddev}});
  }
  node["phases"] = std::move(phases);
  return node;
}

std::string emit_machine(const SuiteReport& report) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["config_digest"] = report.config_digest;
  doc["seed"] = report.seed;
  doc["episodes_per_group"] = report.episodes_per_group;
  doc["groups"] = report.groups;
  ordered_json cells = ordered_json::array();
  for (const auto& cell : report.cells) {
    cells.push_back(cell_to_json(cell));
  }
  doc["cells"] = std::move(cells);
  return doc.dump(2) + "\n";
}

// --- human format ----------------------------------------------------------

std::string pad(std::string text, std::size_t width) {
  if (text.size() < width) {
    text.append(width - text.size(), ' ');
  }
  return text;
}

std::string percent_pair(const Aggregate& aggregate) {
  return format_double(100.0 * aggregate.mean, 1) + " ±" +
         format_double(100.0 * aggregate.stddev, 1);
}

std::string emit_human(const SuiteReport& report) {
  std::size_t name_width = 4;
  std::size_t max_phases = 0;
  for (const auto& cell : report.cells) {
    name_width = std::max(name_width, cell.id.size());
    max_phases = std::max(max_phases, cell.phases.size());
  }
  name_width += 2;

  std::ostringstream out;
  out << "suite " << report.config_digest << "  seed " << report.seed << "  "
      << report.groups << " group(s) x " << report.episodes_per_group
      << " episode(s) per cell\n\n";

  out << pad("cell", name_width) << pad("plan%", 14) << pad("task%", 14)
      << pad("plan-fail", 11) << pad("unrec", 7) << pad("steps", 7)
      << pad("regr", 6) << "prompt B\n";
  for (const auto& cell : report.cells) {
    out << pad(cell.id, name_width) << pad(percent_pair(cell.planning_success), 14)
        << pad(percent_pair(cell.task_success), 14)
        << pad(std::to_string(cell.planning_failures), 11)
        << pad(std::to_string(cell.unrecoverable_state), 7)
        << pad(std::to_string(cell.step_limit_exceeded), 7)
        << pad(std::to_string(cell.regression_detected), 6)
        << format_double(cell.mean_prompt_bytes, 1) << "\n";
  }

  if (max_phases > 0) {
    out << "\nphases (cumulative goal completion, mean over groups)\n";
    out << pad("cell", name_width);
    for (std::size_t k = 1; k <= max_phases; ++k) {
      out << pad("#" + std::to_string(k), 8);
    }
    out << "\n";
    for (const auto& cell : report.cells) {
      out << pad(cell.id, name_width);
      for (const auto& phase : cell.phases) {
        out << pad(format_double(phase.mean, 3), 8);
      }
      out << "\n";
    }
  }

  out << "\nattempts histogram (planning attempts -> episodes)\n";
  for (const auto& cell : report.cells) {
    out << pad(cell.id, name_width);
    bool first = true;
    for (const auto& [count, hits] : cell.attempts_histogram) {
      out << (first ? "" : "  ") << count << ":" << hits;
      first = false;
    }
    out << "\n";
  }
  return out.str();
}

// --- validation helpers ----------------------------------------------------

std::optional<std::string> check_rate(const json& node,
                                      const std::string& where) {
  if (!node.is_object() || !node.contains("mean") ||
      !node.contains("stddev") || !node["mean"].is_number() ||
      !node["stddev"].is_number()) {
    return where + ": expected {mean, stddev}";
  }
  double mean = node["mean"].get<double>();
  if (mean < 0.0 || mean > 1.0) {
    return where + ": mean out of [0, 1]";
  }
  if (node["stddev"].get<double>() < 0.0) {
    return where + ": negative stddev";
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(PlannerSelection::Kind kind) {
  switch (kind) {
    case PlannerSelection::Kind::Oracle:
      return "oracle";
    case PlannerSelection::Kind::Adversarial:
      return "adversarial";
    case PlannerSelection::Kind::Replay:
      return "replay";
    case PlannerSelection::Kind::External:
      return "external";
  }
  return "?";
}

std::optional<PlannerSelection::Kind> parse_planner_kind(
    std::string_view text) {
  for (auto kind :
       {PlannerSelection::Kind::Oracle, PlannerSelection::Kind::Adversarial,
        PlannerSelection::Kind::Replay, PlannerSelection::Kind::External}) {
    if (text == to_string(kind)) {
      return kind;
    }
  }
  return std::nullopt;
}

std::optional<ReportFormat> parse_report_format(std::string_view text) {
  if (text == "machine") {
    return ReportFormat::Machine;
  }
  if (text == "human") {
    return ReportFormat::Human;
  }
  return std::nullopt;
}

Result<SuiteConfig, std::vector<Diagnostic>> load_suite(
    const std::string& document, const std::string& base_dir) {
  return SuiteParser(base_dir).parse(document);
}

Result<SuiteConfig, std::vector<Diagnostic>> load_suite_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return std::vector<Diagnostic>{
        {Diagnostic::Code::BadDocument, "$", "cannot read '" + path + "'"}};
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_suite(buffer.str(),
                    std::filesystem::path(path).parent_path().string());
}

std::string config_digest(const SuiteConfig& config) {
  ordered_json doc;
  doc["scenario"] = config.scenario_path;
  doc["planner"] = std::string(to_string(config.planner.kind));
  if (config.planner.invalid_attempts) {
    doc["invalid_attempts"] = *config.planner.invalid_attempts;
  }
  if (!config.planner.script.empty()) {
    ordered_json script = ordered_json::array();
    for (const auto& plan : config.planner.script) {
      ordered_json steps = ordered_json::array();
      for (const auto& id : plan) {
        steps.push_back(id.name);
      }
      script.push_back(std::move(steps));
    }
    doc["script"] = std::move(script);
  }
  if (config.planner.kind == PlannerSelection::Kind::External) {
    doc["endpoint"] = config.planner.external.endpoint;
    doc["model"] = config.planner.external.model;
  }
  ordered_json closed = ordered_json::array();
  for (bool value : config.closed_loop_axis) {
    closed.push_back(value);
  }
  doc["closed_loop"] = std::move(closed);
  ordered_json prune = ordered_json::array();
  for (const auto& depth : config.prune_axis) {
    if (depth) {
      prune.push_back(*depth);
    } else {
      prune.push_back(nullptr);
    }
  }
  doc["prune_depth"] = std::move(prune);
  doc["episodes"] = config.episodes;
  doc["groups"] = config.groups;
  doc["seed"] = config.seed;
  if (config.max_retries_override) {
    doc["max_retries"] = *config.max_retries_override;
  }
  if (config.step_limit_override) {
    doc["step_limit"] = *config.step_limit_override;
  }

  std::string canonical = doc.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char byte : canonical) {
    hash ^= byte;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

Result<SuiteReport, std::vector<Diagnostic>> run_suite(
    const SuiteConfig& config) {
  if (config.episodes < 1 || config.groups < 1) {
    return std::vector<Diagnostic>{{Code::BadValue, "episodes",
                                    "episodes and groups must be at least 1"}};
  }
  auto loaded = load_scenario_file(config.scenario_path);
  if (!loaded.ok()) {
    return loaded.error();
  }
  const Scenario scenario = std::move(loaded).take();

  std::vector<CellSpec> cells;
  for (const auto& task : scenario.tasks) {
    for (bool closed : config.closed_loop_axis) {
      for (const auto& depth : config.prune_axis) {
        cells.push_back({&task, closed, depth});
      }
    }
  }

  const std::size_t per_cell = config.groups * config.episodes;
  const std::size_t total = cells.size() * per_cell;
  std::vector<EpisodeTrace> slots(total);
  const std::uint64_t base =
      derive_seed(config.seed, {scenario.failure_model.rng_seed});

  auto run_one = [&](std::size_t index) {
    const std::size_t c = index / per_cell;
    const std::size_t g = (index % per_cell) / config.episodes;
    const std::size_t e = index % config.episodes;
    const CellSpec& cell = cells[c];

    ExecPolicy policy = scenario.policy;
    policy.closed_loop = cell.closed_loop;
    policy.prune_depth = cell.prune_depth;
    if (config.max_retries_override) {
      policy.max_retries = *config.max_retries_override;
    }
    if (config.step_limit_override) {
      policy.step_limit = *config.step_limit_override;
    }

    const std::uint64_t episode_seed = derive_seed(base, {c, g, e});
    auto planner =
        make_planner(config.planner, scenario.graph, policy, episode_seed);
    slots[index] = run_episode(scenario.graph, cell.task->spec, *planner,
                               scenario.failure_model, policy, episode_seed);
  };

  const unsigned jobs =
      std::max(1u, std::min<unsigned>(config.jobs,
                                      total == 0 ? 1u
                                                 : static_cast<unsigned>(
                                                       total)));
  if (jobs <= 1) {
    for (std::size_t index = 0; index < total; ++index) {
      run_one(index);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t index = next.fetch_add(1); index < total;
             index = next.fetch_add(1)) {
          run_one(index);
        }
      });
    }
    for (auto& worker : workers) {
      worker.join();
    }
  }

  SuiteReport report;
  report.seed = config.seed;
  report.episodes_per_group = config.episodes;
  report.groups = config.groups;
  report.config_digest = config_digest(config);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<EpisodeTrace> traces(
        slots.begin() + static_cast<std::ptrdiff_t>(c * per_cell),
        slots.begin() + static_cast<std::ptrdiff_t>((c + 1) * per_cell));
    report.cells.push_back(
        summarize_cell(cells[c], traces, config.episodes, config.groups));
  }
  return report;
}

Result<std::vector<double>, PhaseError> phase_table(
    const std::vector<EpisodeTrace>& traces, const TaskSpec& task) {
  for (const auto& trace : traces) {
    if (!(trace.task == task)) {
      return PhaseError::MixedTasks;
    }
  }
  std::vector<double> table;
  const std::size_t goal_count = task.goal_skills.size();
  for (std::size_t k = 0; k < goal_count; ++k) {
    std::size_t hits = 0;
    for (const auto& trace : traces) {
      hits += trace.goals_completed.size() >= k + 1 ? 1 : 0;
    }
    table.push_back(traces.empty()
                        ? 0.0
                        : static_cast<double>(hits) /
                              static_cast<double>(traces.size()));
  }
  return table;
}

std::string emit_report(const SuiteReport& report, ReportFormat format) {
  return format == ReportFormat::Machine ? emit_machine(report)
                                         : emit_human(report);
}

std::string phase_csv(const SuiteReport& report) {
  std::size_t max_phases = 0;
  for (const auto& cell : report.cells) {
    max_phases = std::max(max_phases, cell.phases.size());
  }
  std::ostringstream out;
  out << "phase";
  for (const auto& cell : report.cells) {
    out << "," << cell.id;
  }
  out << "\n";
  for (std::size_t k = 0; k < max_phases; ++k) {
    out << (k + 1);
    for (const auto& cell : report.cells) {
      out << ",";
      if (k < cell.phases.size()) {
        out << format_double(cell.phases[k].mean, 4);
      }
    }
    out << "\n";
  }
  return out.str();
}

std::optional<std::string> validate_machine_report(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    return "not a structured object document";
  }
  if (!doc.contains("schema_version") ||
      doc["schema_version"] != json(1)) {
    return "schema_version must be 1";
  }
  for (const char* key : {"config_digest", "seed", "episodes_per_group",
                          "groups", "cells"}) {
    if (!doc.contains(key)) {
      return std::string("missing key: ") + key;
    }
  }
  if (!doc["config_digest"].is_string() || !doc["seed"].is_number_unsigned() ||
      !doc["episodes_per_group"].is_number_unsigned() ||
      !doc["groups"].is_number_unsigned() || !doc["cells"].is_array()) {
    return "top-level field has the wrong type";
  }

  for (std::size_t i = 0; i < doc["cells"].size(); ++i) {
    const json& cell = doc["cells"][i];
    std::string where = "cells[" + std::to_string(i) + "]";
    for (const char* key :
         {"id", "task", "closed_loop", "prune_depth", "episodes", "planning",
          "execution", "phases"}) {
      if (!cell.contains(key)) {
        return where + ": missing key " + key;
      }
    }
    if (!cell["id"].is_string() || !cell["task"].is_string() ||
        !cell["closed_loop"].is_boolean() ||
        !cell["episodes"].is_number_unsigned() ||
        !cell["phases"].is_array()) {
      return where + ": field has the wrong type";
    }
    if (!cell["prune_depth"].is_null() &&
        !cell["prune_depth"].is_number_integer()) {
      return where + ".prune_depth: must be null or an integer";
    }

    const json& planning = cell["planning"];
    if (!planning.is_object() || !planning.contains("success_rate") ||
        !planning.contains("failures") || !planning.contains("attempts") ||
        !planning.contains("mean_prompt_bytes")) {
      return where + ".planning: malformed";
    }
    if (auto bad = check_rate(planning["success_rate"],
                              where + ".planning.success_rate")) {
      return bad;
    }
    const json& execution = cell["execution"];
    if (!execution.is_object() || !execution.contains("success_rate") ||
        !execution.contains("successes") ||
        !execution.contains("unrecoverable_state") ||
        !execution.contains("step_limit_exceeded") ||
        !execution.contains("regression_detected")) {
      return where + ".execution: malformed";
    }
    if (auto bad = check_rate(execution["success_rate"],
                              where + ".execution.success_rate")) {
      return bad;
    }

    double previous = 1.0;
    for (std::size_t k = 0; k < cell["phases"].size(); ++k) {
      if (auto bad = check_rate(cell["phases"][k], where + ".phases[" +
                                                       std::to_string(k) +
                                                       "]")) {
        return bad;
      }
      double mean = cell["phases"][k]["mean"].get<double>();
      if (mean > previous + 1e-9) {
        return where + ".phases: cumulative success increased at phase " +
               std::to_string(k + 1);
      }
      previous = mean;
    }

    std::size_t conserved = planning["failures"].get<std::size_t>() +
                            execution["successes"].get<std::size_t>() +
                            execution["unrecoverable_state"].get<std::size_t>() +
                            execution["step_limit_exceeded"].get<std::size_t>() +
                            execution["regression_detected"].get<std::size_t>();
    if (conserved != cell["episodes"].get<std::size_t>()) {
      return where + ": episode accounting does not add up";
    }
  }
  return std::nullopt;
}

std::string serialize_trace(const EpisodeTrace& trace) {
  ordered_json doc;

  ordered_json task;
  task["instruction"] = trace.task.instruction;
  ordered_json goals = ordered_json::array();
  for (const auto& goal : trace.task.goal_skills) {
    goals.push_back(goal.name);
  }
  task["goal_skills"] = std::move(goals);
  task["initial"] = to_literal(trace.task.initial);
  doc["task"] = std::move(task);

  ordered_json planning;
  planning["attempts"] = trace.planning.attempts;
  planning["accepted"] = trace.planning.accepted;
  planning["prompt_bytes"] = trace.planning.prompt_bytes;
  if (trace.planning.failure_cause) {
    planning["failure_cause"] =
        std::string(to_string(*trace.planning.failure_cause));
  } else {
    planning["failure_cause"] = nullptr;
  }
  doc["planning"] = std::move(planning);

  ordered_json events = ordered_json::array();
  for (const auto& event : trace.events) {
    ordered_json node;
    node["step"] = event.step;
    node["skill"] = event.skill.name;
    if (event.outcome.ok()) {
      node["outcome"] = {{"ok", true}};
    } else {
      node["outcome"] = {
          {"ok", false},
          {"cause", std::string(to_string(event.outcome.deviation->cause))},
          {"observed", to_literal(event.outcome.deviation->observed)}};
    }
    if (event.goal_completed) {
      node["goal_completed"] = event.goal_completed->name;
    } else {
      node["goal_completed"] = nullptr;
    }
    if (event.replan) {
      ordered_json replan;
      replan["trigger"] = to_literal(event.replan->trigger_state);
      ordered_json corrective = ordered_json::array();
      for (const auto& id : event.replan->corrective.steps) {
        corrective.push_back(id.name);
      }
      replan["corrective"] = std::move(corrective);
      node["replan"] = std::move(replan);
    } else {
      node["replan"] = nullptr;
    }
    ordered_json world;
    world["ego"] = to_literal(event.world_after.ego);
    ordered_json objects = ordered_json::object();
    for (const auto& [object, site] : event.world_after.object_at) {
      if (const auto* at = std::get_if<AtLocation>(&site)) {
        objects[object.name] = "at:" + at->location.name;
      } else if (const auto* held = std::get_if<InGripper>(&site)) {
        objects[object.name] = held->slot == GripperSlot::Left
                                   ? "gripper:left"
                                   : "gripper:right";
      } else {
        objects[object.name] = "lost";
      }
    }
    world["objects"] = std::move(objects);
    node["world"] = std::move(world);
    events.push_back(std::move(node));
  }
  doc["events"] = std::move(events);

  ordered_json completed = ordered_json::array();
  for (const auto& goal : trace.goals_completed) {
    completed.push_back(goal.name);
  }
  doc["goals_completed"] = std::move(completed);

  ordered_json terminal;
  terminal["success"] = trace.terminal.success;
  if (trace.terminal.failure) {
    terminal["mode"] = std::string(to_string(*trace.terminal.failure));
  } else {
    terminal["mode"] = nullptr;
  }
  terminal["at_step"] = trace.terminal.at_step;
  terminal["note"] = trace.terminal.note;
  doc["terminal"] = std::move(terminal);

  return doc.dump(2) + "\n";
}

}  // namespace skillstate
