#include "skillstate/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "skillstate/state.hpp"

namespace skillstate {

namespace {

using nlohmann::json;
using Code = Diagnostic::Code;

class ScenarioParser {
 public:
  explicit ScenarioParser(std::string base_dir)
      : base_dir_(std::move(base_dir)) {}

  Result<Scenario, std::vector<Diagnostic>> parse(
      const std::string& document) {
    json doc = json::parse(document, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      fail(Code::BadDocument, "$", "not a structured object document");
      return std::move(diags_);
    }

    Scenario scenario;
    if (!load_graph_member(doc, scenario)) {
      return std::move(diags_);
    }
    parse_tasks(doc, scenario);
    if (auto it = doc.find("failure_model"); it != doc.end()) {
      parse_failure_model(*it, scenario);
    }
    if (auto it = doc.find("policy"); it != doc.end()) {
      parse_policy(*it, scenario.policy);
    }
    for (const auto& [key, value] : doc.items()) {
      (void)value;
      if (key != "graph" && key != "tasks" && key != "failure_model" &&
          key != "policy") {
        fail(Code::BadDocument, key, "unknown key");
      }
    }

    if (!diags_.empty()) {
      return std::move(diags_);
    }
    return scenario;
  }

 private:
  void fail(Code code, std::string path, std::string message) {
    diags_.push_back({code, std::move(path), std::move(message)});
  }

  bool load_graph_member(const json& doc, Scenario& scenario) {
    auto it = doc.find("graph");
    if (it == doc.end() || !it->is_string()) {
      fail(Code::BadDocument, "graph", "required string path");
      return false;
    }
    std::filesystem::path graph_path = it->get<std::string>();
    if (graph_path.is_relative()) {
      graph_path = std::filesystem::path(base_dir_) / graph_path;
    }
    auto loaded = load_graph_file(graph_path.string());
    if (!loaded.ok()) {
      for (Diagnostic d : loaded.error()) {
        d.path = "graph:" + d.path;
        diags_.push_back(std::move(d));
      }
      return false;
    }
    scenario.graph = std::move(loaded).take();
    return true;
  }

  void parse_tasks(const json& doc, Scenario& scenario) {
    auto it = doc.find("tasks");
    if (it == doc.end() || !it->is_array()) {
      fail(Code::BadDocument, "tasks", "required list");
      return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& node = (*it)[i];
      std::string path = "tasks[" + std::to_string(i) + "]";
      if (!node.is_object()) {
        fail(Code::BadDocument, path, "task must be an object");
        continue;
      }
      ScenarioTask task;
      if (auto id = node.find("id"); id != node.end() && id->is_string() &&
                                     !id->get<std::string>().empty()) {
        task.id = id->get<std::string>();
        if (!seen.insert(task.id).second) {
          fail(Code::DuplicateTaskId, path + ".id",
               "task id '" + task.id + "' appears more than once");
        }
      } else {
        fail(Code::BadDocument, path + ".id", "required non-empty string");
      }
      if (auto text = node.find("instruction");
          text != node.end() && text->is_string()) {
        task.spec.instruction = text->get<std::string>();
      } else {
        fail(Code::BadDocument, path + ".instruction", "required string");
      }
      parse_goals(node, path, scenario, task);
      parse_initial(node, path, scenario, task);
      scenario.tasks.push_back(std::move(task));
    }
  }

  void parse_goals(const json& node, const std::string& path,
                   const Scenario& scenario, ScenarioTask& task) {
    auto goals = node.find("goal_skills");
    if (goals == node.end() || !goals->is_array() || goals->empty()) {
      fail(Code::BadDocument, path + ".goal_skills",
           "required non-empty list of skill ids");
      return;
    }
    for (std::size_t k = 0; k < goals->size(); ++k) {
      const json& goal = (*goals)[k];
      std::string goal_path =
          path + ".goal_skills[" + std::to_string(k) + "]";
      if (!goal.is_string()) {
        fail(Code::BadDocument, goal_path, "skill id must be a string");
        continue;
      }
      SkillId id{goal.get<std::string>()};
      if (scenario.graph.skills.find(id) == scenario.graph.skills.end()) {
        fail(Code::UnknownSkill, goal_path,
             "skill '" + id.name + "' is not in the graph");
        continue;
      }
      task.spec.goal_skills.push_back(std::move(id));
    }
  }

  void parse_initial(const json& node, const std::string& path,
                     const Scenario& scenario, ScenarioTask& task) {
    auto initial = node.find("initial");
    if (initial == node.end() || !initial->is_string()) {
      fail(Code::BadDocument, path + ".initial",
           "required state literal string");
      return;
    }
    auto parsed = parse_state_literal(initial->get<std::string>());
    if (!parsed.ok()) {
      fail(Code::BadValue, path + ".initial", parsed.error());
      return;
    }
    const EmbodimentState& state = parsed.value();
    if (scenario.graph.locations.find(state.location) ==
        scenario.graph.locations.end()) {
      fail(Code::UnknownLocation, path + ".initial",
           "location '" + state.location.name + "' is not in the graph");
    }
    for (const auto& held : {state.left, state.right}) {
      if (held && scenario.graph.objects.find(*held) ==
                      scenario.graph.objects.end()) {
        fail(Code::UnknownObject, path + ".initial",
             "object '" + held->name + "' is not in the graph");
      }
    }
    if (state.left && state.right && *state.left == *state.right) {
      fail(Code::BadValue, path + ".initial",
           "the same object cannot start in both grippers");
    }
    task.spec.initial = state;
  }

  void parse_failure_model(const json& node, Scenario& scenario) {
    if (!node.is_object()) {
      fail(Code::BadDocument, "failure_model", "must be an object");
      return;
    }
    FailureModel& model = scenario.failure_model;
    for (const auto& [key, value] : node.items()) {
      if (key == "rng_seed") {
        if (value.is_number_unsigned()) {
          model.rng_seed = value.get<std::uint64_t>();
        } else {
          fail(Code::BadValue, "failure_model.rng_seed",
               "must be a non-negative integer");
        }
      } else if (key == "base") {
        parse_profile(value, "failure_model.base", model.base);
      } else if (key == "per_category") {
        parse_per_category(value, model);
      } else if (key == "per_skill") {
        parse_per_skill(value, scenario.graph, model);
      } else {
        fail(Code::BadDocument, "failure_model." + key, "unknown key");
      }
    }
  }

  void parse_per_category(const json& node, FailureModel& model) {
    if (!node.is_object()) {
      fail(Code::BadDocument, "failure_model.per_category",
           "must map category names to profiles");
      return;
    }
    for (const auto& [key, value] : node.items()) {
      std::string path = "failure_model.per_category." + key;
      auto category = parse_category(key);
      if (!category) {
        fail(Code::BadValue, path, "unknown skill category");
        continue;
      }
      OutcomeProfile profile;
      parse_profile(value, path, profile);
      model.per_category[*category] = profile;
    }
  }

  void parse_per_skill(const json& node, const SkillStateGraph& graph,
                       FailureModel& model) {
    if (!node.is_object()) {
      fail(Code::BadDocument, "failure_model.per_skill",
           "must map skill ids to profiles");
      return;
    }
    for (const auto& [key, value] : node.items()) {
      std::string path = "failure_model.per_skill." + key;
      SkillId id{key};
      if (graph.skills.find(id) == graph.skills.end()) {
        fail(Code::UnknownSkill, path,
             "skill '" + key + "' is not in the graph");
        continue;
      }
      OutcomeProfile profile;
      parse_profile(value, path, profile);
      model.per_skill[std::move(id)] = profile;
    }
  }

  void parse_profile(const json& node, const std::string& path,
                     OutcomeProfile& profile) {
    if (!node.is_object()) {
      fail(Code::BadDocument, path, "profile must be an object");
      return;
    }
    for (const auto& [key, value] : node.items()) {
      if (key == "p_ok") {
        if (value.is_number() && value.get<double>() >= 0.0 &&
            value.get<double>() <= 1.0) {
          profile.p_ok = value.get<double>();
        } else {
          fail(Code::BadValue, path + ".p_ok", "must be a number in [0, 1]");
        }
      } else if (key == "weights") {
        parse_weights(value, path + ".weights", profile);
      } else {
        fail(Code::BadDocument, path + "." + key, "unknown key");
      }
    }
  }

  void parse_weights(const json& node, const std::string& path,
                     OutcomeProfile& profile) {
    if (!node.is_object()) {
      fail(Code::BadDocument, path, "must map deviation causes to weights");
      return;
    }
    profile.weights = {0.0, 0.0, 0.0, 0.0};
    double sum = 0.0;
    bool usable = true;
    for (const auto& [key, value] : node.items()) {
      auto cause = parse_deviation_cause(key);
      if (!cause) {
        fail(Code::BadValue, path + "." + key, "unknown deviation cause");
        usable = false;
        continue;
      }
      if (!value.is_number() || value.get<double>() < 0.0) {
        fail(Code::BadValue, path + "." + key,
             "weight must be a non-negative number");
        usable = false;
        continue;
      }
      profile.weights[static_cast<std::size_t>(*cause)] = value.get<double>();
      sum += value.get<double>();
    }
    if (usable && std::abs(sum - 1.0) > 1e-6) {
      fail(Code::BadValue, path, "weights must sum to 1");
    }
  }

  void parse_policy(const json& node, ExecPolicy& policy) {
    if (!node.is_object()) {
      fail(Code::BadDocument, "policy", "must be an object");
      return;
    }
    for (const auto& [key, value] : node.items()) {
      std::string path = "policy." + key;
      if (key == "closed_loop") {
        if (value.is_boolean()) {
          policy.closed_loop = value.get<bool>();
        } else {
          fail(Code::BadValue, path, "must be a boolean");
        }
      } else if (key == "max_retries") {
        if (value.is_number_integer() && value.get<int>() >= 0) {
          policy.max_retries = value.get<int>();
        } else {
          fail(Code::BadValue, path, "must be a non-negative integer");
        }
      } else if (key == "prune_depth") {
        if (value.is_null()) {
          policy.prune_depth.reset();
        } else if (value.is_number_integer() && value.get<int>() >= 0) {
          policy.prune_depth = value.get<int>();
        } else {
          fail(Code::BadValue, path, "must be null or a non-negative integer");
        }
      } else if (key == "step_limit") {
        if (value.is_null()) {
          policy.step_limit = kUnlimitedSteps;
        } else if (value.is_number_integer() && value.get<long>() >= 1) {
          policy.step_limit = value.get<long>();
        } else {
          fail(Code::BadValue, path, "must be null or a positive integer");
        }
      } else if (key == "semantic_check") {
        if (value.is_boolean()) {
          policy.semantic_check = value.get<bool>();
        } else {
          fail(Code::BadValue, path, "must be a boolean");
        }
      } else if (key == "replan_route") {
        if (value.is_string() && value.get<std::string>() == "search") {
          policy.replan_route = ExecPolicy::ReplanRoute::Search;
        } else if (value.is_string() &&
                   value.get<std::string>() == "planner") {
          policy.replan_route = ExecPolicy::ReplanRoute::Planner;
        } else {
          fail(Code::BadValue, path, "must be \"search\" or \"planner\"");
        }
      } else {
        fail(Code::BadDocument, path, "unknown key");
      }
    }
  }

  std::string base_dir_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

const ScenarioTask* Scenario::find_task(const std::string& id) const {
  for (const auto& task : tasks) {
    if (task.id == id) {
      return &task;
    }
  }
  return nullptr;
}

Result<Scenario, std::vector<Diagnostic>> load_scenario(
    const std::string& document, const std::string& base_dir) {
  return ScenarioParser(base_dir).parse(document);
}

Result<Scenario, std::vector<Diagnostic>> load_scenario_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return std::vector<Diagnostic>{
        {Diagnostic::Code::BadDocument, "$", "cannot read '" + path + "'"}};
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_scenario(buffer.str(),
                       std::filesystem::path(path).parent_path().string());
}

}  // namespace skillstate
