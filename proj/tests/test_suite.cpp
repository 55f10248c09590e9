#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "skillstate/planner.hpp"
#include "skillstate/rng.hpp"
#include "skillstate/suite.hpp"
#include "support/fixtures.hpp"
#include "support/ref_plan.hpp"
#include "support/ref_verify.hpp"

using namespace skillstate;
using testsupport::fixture_path;

namespace {

using Code = Diagnostic::Code;

bool has_finding(const std::vector<Diagnostic>& diags, Code code,
                 const std::string& path_part) {
  for (const auto& d : diags) {
    if (d.code == code && d.path.find(path_part) != std::string::npos) {
      return true;
    }
  }
  return false;
}

std::vector<std::string> names_of(const std::vector<SkillId>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    out.push_back(id.name);
  }
  return out;
}

std::vector<SkillId> ids_of(const std::vector<std::string>& names) {
  std::vector<SkillId> out;
  for (const auto& name : names) {
    out.push_back(SkillId{name});
  }
  return out;
}

Scenario load_scenario_or_fail(const std::string& name) {
  auto loaded = load_scenario_file(fixture_path(name));
  if (!loaded.ok()) {
    FAIL(name << " did not load:\n" << format_diagnostics(loaded.error()));
  }
  return std::move(loaded).take();
}

SuiteConfig load_suite_or_fail(const std::string& name) {
  auto loaded = load_suite_file(fixture_path(name));
  if (!loaded.ok()) {
    FAIL(name << " did not load:\n" << format_diagnostics(loaded.error()));
  }
  return std::move(loaded).take();
}

SuiteReport run_or_fail(const SuiteConfig& config) {
  auto ran = run_suite(config);
  if (!ran.ok()) {
    FAIL("suite did not run:\n" << format_diagnostics(ran.error()));
  }
  return std::move(ran).take();
}

std::string write_temp(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path.string();
}

std::size_t conserved_total(const CellReport& cell) {
  return cell.planning_failures + cell.exec_successes +
         cell.unrecoverable_state + cell.step_limit_exceeded +
         cell.regression_detected;
}

}  // namespace

TEST_SUITE("scenario documents") {
  TEST_CASE("the smoke scenario loads with both tasks wired to the graph") {
    Scenario scenario = load_scenario_or_fail("scenario_smoke.json");
    CHECK(scenario.graph.skills.size() == 7);
    REQUIRE(scenario.tasks.size() == 2);

    const ScenarioTask& bowl = scenario.tasks[0];
    CHECK(bowl.id == "bowl_to_table");
    CHECK(names_of(bowl.spec.goal_skills) ==
          std::vector<std::string>{"place_bowl_table"});
    CHECK(bowl.spec.initial.location == LocationId{"pantry"});
    CHECK(!bowl.spec.initial.left.has_value());
    CHECK(!bowl.spec.initial.right.has_value());
    CHECK(bowl.spec.instruction == "Put the bowl on the dining table.");

    CHECK(names_of(scenario.tasks[1].spec.goal_skills) ==
          std::vector<std::string>{"place_bowl_table", "place_cup_table"});

    CHECK(scenario.failure_model.rng_seed == 5);
    CHECK(scenario.failure_model.base.p_ok == doctest::Approx(0.85));
    CHECK(scenario.failure_model.base.weights ==
          std::array<double, 4>{0.5, 0.0, 0.25, 0.25});

    CHECK(scenario.policy.closed_loop);
    CHECK(scenario.policy.max_retries == 2);
    CHECK(!scenario.policy.prune_depth.has_value());
    CHECK(scenario.policy.step_limit == kUnlimitedSteps);
    CHECK(!scenario.policy.semantic_check);
    CHECK(scenario.policy.replan_route == ExecPolicy::ReplanRoute::Search);

    CHECK(scenario.find_task("set_the_table") == &scenario.tasks[1]);
    CHECK(scenario.find_task("missing") == nullptr);
  }

  TEST_CASE("the long horizon task demands a ten step tour") {
    Scenario scenario = load_scenario_or_fail("scenario_long_horizon.json");
    REQUIRE(scenario.tasks.size() == 1);
    const TaskSpec& task = scenario.tasks[0].spec;

    auto reference = testsupport::ref_shortest_plan(
        scenario.graph, task.initial, names_of(task.goal_skills));
    REQUIRE(reference.has_value());
    CHECK(reference->size() == 10);

    auto planned = search_plan(scenario.graph, task);
    REQUIRE(planned.ok());
    CHECK(names_of(planned.value().steps) == *reference);

    // Every place is pinned to Stall so deviations stay visible to the
    // pose monitor, and nothing is ever lost outright.
    const SemanticSkill& place =
        scenario.graph.skills.at(SkillId{"place_bowl_table"});
    const SemanticSkill& pick =
        scenario.graph.skills.at(SkillId{"pick_cup_hallway"});
    OutcomeProfile place_profile = scenario.failure_model.profile_for(place);
    OutcomeProfile pick_profile = scenario.failure_model.profile_for(pick);
    CHECK(place_profile.p_ok == doctest::Approx(0.7));
    CHECK(place_profile.weights == std::array<double, 4>{0.0, 0.0, 0.0, 1.0});
    CHECK(pick_profile.p_ok == doctest::Approx(0.7));
    CHECK(pick_profile.weights[1] == 0.0);
    CHECK(scenario.policy.step_limit == kUnlimitedSteps);
  }

  TEST_CASE("the failure drills load the intended models") {
    Scenario droplost = load_scenario_or_fail("scenario_droplost.json");
    CHECK(droplost.failure_model.base.p_ok == doctest::Approx(0.6));
    CHECK(droplost.failure_model.base.weights ==
          std::array<double, 4>{0.0, 1.0, 0.0, 0.0});
    CHECK(droplost.policy.semantic_check);
    CHECK(droplost.policy.step_limit == kUnlimitedSteps);

    Scenario stall = load_scenario_or_fail("scenario_stall.json");
    CHECK(stall.failure_model.base.weights ==
          std::array<double, 4>{0.0, 0.0, 0.0, 1.0});
    CHECK(stall.policy.step_limit == 5);
    auto shortest = testsupport::ref_shortest_plan(
        stall.graph, stall.tasks[0].spec.initial,
        names_of(stall.tasks[0].spec.goal_skills));
    REQUIRE(shortest.has_value());
    CHECK(shortest->size() == 3);  // limit leaves room for two stalls
  }

  TEST_CASE("scenario validation collects every finding at once") {
    std::string doc = R"json({
      "graph": "mini_household.json",
      "tasks": [
        {"id": "a", "instruction": "x",
         "goal_skills": ["place_bowl_table"], "initial": "(pantry,null,null)"},
        {"id": "a", "instruction": "y",
         "goal_skills": ["warp_bowl"], "initial": "(attic,null,null)"},
        {"id": "b", "instruction": "z",
         "goal_skills": ["place_bowl_table"], "initial": "(pantry,bowl,bowl)"}
      ]
    })json";
    auto loaded = load_scenario(doc, std::string(SKILLSTATE_FIXTURES_DIR));
    REQUIRE(!loaded.ok());
    const auto& diags = loaded.error();
    CHECK(has_finding(diags, Code::DuplicateTaskId, "tasks[1].id"));
    CHECK(has_finding(diags, Code::UnknownSkill, "tasks[1].goal_skills"));
    CHECK(has_finding(diags, Code::UnknownLocation, "tasks[1].initial"));
    CHECK(has_finding(diags, Code::BadValue, "tasks[2].initial"));
    CHECK(diags.size() >= 4);
  }

  TEST_CASE("failure weights must be a distribution over known causes") {
    std::string partial = R"json({
      "graph": "mini_household.json", "tasks": [],
      "failure_model": {"base": {"p_ok": 0.5, "weights": {"Stall": 0.4}}}
    })json";
    auto loaded = load_scenario(partial, std::string(SKILLSTATE_FIXTURES_DIR));
    REQUIRE(!loaded.ok());
    CHECK(has_finding(loaded.error(), Code::BadValue,
                      "failure_model.base.weights"));

    std::string unknown = R"json({
      "graph": "mini_household.json", "tasks": [],
      "failure_model": {"base": {"weights": {"Teleport": 1.0}}}
    })json";
    loaded = load_scenario(unknown, std::string(SKILLSTATE_FIXTURES_DIR));
    REQUIRE(!loaded.ok());
    CHECK(has_finding(loaded.error(), Code::BadValue, "weights.Teleport"));
  }

  TEST_CASE("policy and top level keys are checked") {
    std::string doc = R"json({
      "graph": "mini_household.json", "tasks": [], "budget": 3,
      "policy": {"step_limit": "soon", "replan_route": "mystery"}
    })json";
    auto loaded = load_scenario(doc, std::string(SKILLSTATE_FIXTURES_DIR));
    REQUIRE(!loaded.ok());
    CHECK(has_finding(loaded.error(), Code::BadDocument, "budget"));
    CHECK(has_finding(loaded.error(), Code::BadValue, "policy.step_limit"));
    CHECK(has_finding(loaded.error(), Code::BadValue, "policy.replan_route"));
  }

  TEST_CASE("graph problems surface under a graph prefix") {
    std::string doc = R"json({"graph": "no_such_graph.json", "tasks": []})json";
    auto loaded = load_scenario(doc, std::string(SKILLSTATE_FIXTURES_DIR));
    REQUIRE(!loaded.ok());
    REQUIRE(!loaded.error().empty());
    CHECK(loaded.error()[0].path.rfind("graph", 0) == 0);
  }

  TEST_CASE("an empty task list is a valid scenario") {
    std::string doc = std::string(R"({"graph": ")") +
                      fixture_path("mini_household.json") +
                      R"(", "tasks": []})";
    auto loaded = load_scenario(doc);
    REQUIRE(loaded.ok());
    CHECK(loaded.value().tasks.empty());
    CHECK(loaded.value().failure_model.base.p_ok == 1.0);
  }
}

TEST_SUITE("suite documents") {
  TEST_CASE("the smoke suite declares a two by two matrix") {
    SuiteConfig config = load_suite_or_fail("suite_smoke.json");
    CHECK(config.planner.kind == PlannerSelection::Kind::Oracle);
    CHECK(config.closed_loop_axis == std::vector<bool>{true, false});
    CHECK(config.prune_axis ==
          std::vector<std::optional<int>>{std::nullopt, 3});
    CHECK(config.episodes == 30);
    CHECK(config.groups == 3);
    CHECK(config.seed == 11);
    CHECK(config.jobs == 1);

    // The scenario path resolves against the suite file's directory.
    auto scenario = load_scenario_file(config.scenario_path);
    CHECK(scenario.ok());
  }

  TEST_CASE("suite validation rejects malformed documents") {
    const std::string base_dir(SKILLSTATE_FIXTURES_DIR);
    auto expect_finding = [&](const std::string& doc, Code code,
                              const std::string& path_part) {
      auto loaded = load_suite(doc, base_dir);
      REQUIRE(!loaded.ok());
      CHECK_MESSAGE(has_finding(loaded.error(), code, path_part),
                    doc << "\n" << format_diagnostics(loaded.error()));
    };

    expect_finding(R"json({"planner": {"kind": "oracle"}})json",
                   Code::BadDocument, "scenario");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json", "episodes": 0})json",
        Code::BadValue, "episodes");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json",
                "planner": {"kind": "psychic"}})json",
        Code::BadValue, "planner.kind");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json",
                "planner": {"kind": "replay"}})json",
        Code::BadDocument, "planner.script");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json",
                "planner": {"kind": "oracle", "script": [["x"]]}})json",
        Code::BadDocument, "planner.script");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json",
                "planner": {"kind": "external"}})json",
        Code::BadDocument, "planner.endpoint");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json",
                "matrix": {"prune_depth": ["wide"]}})json",
        Code::BadValue, "matrix.prune_depth");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json",
                "matrix": {"retries": [1]}})json",
        Code::BadDocument, "matrix.retries");
    expect_finding(
        R"json({"scenario": "scenario_smoke.json", "threads": 4})json",
        Code::BadDocument, "threads");
  }

  TEST_CASE("planner kinds round trip through their names") {
    for (auto kind :
         {PlannerSelection::Kind::Oracle, PlannerSelection::Kind::Adversarial,
          PlannerSelection::Kind::Replay, PlannerSelection::Kind::External}) {
      auto parsed = parse_planner_kind(to_string(kind));
      REQUIRE(parsed.has_value());
      CHECK(*parsed == kind);
    }
    CHECK(!parse_planner_kind("psychic").has_value());
  }
}

TEST_SUITE("phase tables") {
  TEST_CASE("entries are completion fractions by goal prefix") {
    TaskSpec task;
    task.goal_skills = ids_of({"a", "b", "c"});
    auto with_goals = [&](std::size_t count) {
      EpisodeTrace trace;
      trace.task = task;
      for (std::size_t i = 0; i < count; ++i) {
        trace.goals_completed.push_back(task.goal_skills[i]);
      }
      return trace;
    };
    std::vector<EpisodeTrace> traces = {with_goals(3), with_goals(2),
                                        with_goals(0), with_goals(1)};
    auto table = phase_table(traces, task);
    REQUIRE(table.ok());
    CHECK(table.value() == std::vector<double>{0.75, 0.5, 0.25});
  }

  TEST_CASE("traces from different tasks are refused") {
    TaskSpec task;
    task.goal_skills = ids_of({"a"});
    TaskSpec other = task;
    other.instruction = "different";
    EpisodeTrace trace;
    trace.task = other;
    auto table = phase_table({trace}, task);
    REQUIRE(!table.ok());
    CHECK(table.error() == PhaseError::MixedTasks);
  }
}

TEST_SUITE("suite runs") {
  TEST_CASE("the smoke suite is deterministic and scheduling independent") {
    SuiteConfig config = load_suite_or_fail("suite_smoke.json");

    SuiteReport serial = run_or_fail(config);
    config.jobs = 4;
    SuiteReport threaded = run_or_fail(config);
    config.jobs = 13;
    SuiteReport oversubscribed = run_or_fail(config);

    CHECK(serial == threaded);
    CHECK(serial == oversubscribed);
    CHECK(emit_report(serial, ReportFormat::Machine) ==
          emit_report(threaded, ReportFormat::Machine));
    CHECK(emit_report(serial, ReportFormat::Human) ==
          emit_report(threaded, ReportFormat::Human));
    CHECK(phase_csv(serial) == phase_csv(threaded));
  }

  TEST_CASE("the smoke report holds its structural invariants") {
    SuiteConfig config = load_suite_or_fail("suite_smoke.json");
    SuiteReport report = run_or_fail(config);

    CHECK(report.seed == 11);
    CHECK(report.episodes_per_group == 30);
    CHECK(report.groups == 3);
    CHECK(report.config_digest == config_digest(config));

    REQUIRE(report.cells.size() == 8);
    CHECK(report.cells[0].id == "bowl_to_table|closed=on|prune=none");
    CHECK(report.cells[1].id == "bowl_to_table|closed=on|prune=3");
    CHECK(report.cells[2].id == "bowl_to_table|closed=off|prune=none");
    CHECK(report.cells[3].id == "bowl_to_table|closed=off|prune=3");
    CHECK(report.cells[4].id == "set_the_table|closed=on|prune=none");
    CHECK(report.cells[7].id == "set_the_table|closed=off|prune=3");

    for (const auto& cell : report.cells) {
      CAPTURE(cell.id);
      CHECK(cell.episodes == 90);
      CHECK(conserved_total(cell) == cell.episodes);

      // The oracle plans every cell, first try.
      CHECK(cell.planning_success == Aggregate{1.0, 0.0});
      CHECK(cell.planning_failures == 0);
      CHECK(cell.attempts_histogram ==
            std::map<std::size_t, std::size_t>{{1, 90}});
      CHECK(cell.mean_prompt_bytes > 0.0);

      std::size_t histogram_total = 0;
      for (const auto& [attempts, count] : cell.attempts_histogram) {
        histogram_total += count;
      }
      CHECK(histogram_total == cell.episodes);

      REQUIRE(cell.phases.size() ==
              (cell.task_id == "set_the_table" ? 2 : 1));
      for (std::size_t k = 1; k < cell.phases.size(); ++k) {
        CHECK(cell.phases[k].mean <= cell.phases[k - 1].mean);
      }
      CHECK(cell.phases.back().mean == cell.task_success.mean);

      if (cell.closed_loop) {
        // No loss mode and no step cap: recovery always lands.
        CHECK(cell.task_success == Aggregate{1.0, 0.0});
        CHECK(cell.exec_successes == 90);
      } else {
        CHECK(cell.task_success.mean < 1.0);
        CHECK(cell.task_success.mean > 0.0);
      }
    }

    // The depth-3 view still covers the whole mini graph, so pruning can
    // only shrink or match the serialized prompt.
    for (std::size_t full = 0; full < report.cells.size(); full += 2) {
      CHECK(report.cells[full + 1].mean_prompt_bytes <=
            report.cells[full].mean_prompt_bytes);
    }
  }

  TEST_CASE("a tighter view shrinks prompts without losing the plan") {
    std::string scenario_path = write_temp(
        "skillstate_cup_return.json",
        std::string(R"({"graph": ")") + fixture_path("household_16.json") +
            R"json(", "tasks": [{"id": "cup_return",
                 "instruction": "Return the cup.",
                 "goal_skills": ["place_cup_pantry"],
                 "initial": "(pantry,null,null)"}]})json");

    SuiteConfig config;
    config.scenario_path = scenario_path;
    config.prune_axis = {std::nullopt, 2};
    config.episodes = 3;
    config.seed = 1;

    SuiteReport report = run_or_fail(config);
    REQUIRE(report.cells.size() == 2);
    const CellReport& full = report.cells[0];
    const CellReport& pruned = report.cells[1];
    CHECK(full.planning_success.mean == 1.0);
    CHECK(pruned.planning_success.mean == 1.0);
    CHECK(full.task_success.mean == 1.0);
    CHECK(pruned.task_success.mean == 1.0);
    CHECK(pruned.mean_prompt_bytes < full.mean_prompt_bytes);
  }

  TEST_CASE("an empty scenario produces a valid empty report") {
    std::string scenario_path = write_temp(
        "skillstate_empty_scenario.json",
        std::string(R"({"graph": ")") + fixture_path("mini_household.json") +
            R"(", "tasks": []})");
    SuiteConfig config;
    config.scenario_path = scenario_path;
    config.episodes = 5;
    config.groups = 2;

    SuiteReport report = run_or_fail(config);
    CHECK(report.cells.empty());
    std::string machine = emit_report(report, ReportFormat::Machine);
    CHECK(!validate_machine_report(machine).has_value());
    CHECK(report.config_digest.size() == 16);
  }

  TEST_CASE("planning statistics match an independent replay of the seeds") {
    SuiteConfig config;
    config.scenario_path = fixture_path("scenario_adversarial.json");
    config.planner.kind = PlannerSelection::Kind::Adversarial;
    config.episodes = 20;
    config.groups = 2;
    config.seed = 23;

    SuiteReport report = run_or_fail(config);
    REQUIRE(report.cells.size() == 2);

    Scenario scenario = load_scenario_or_fail("scenario_adversarial.json");
    const std::uint64_t base =
        derive_seed(config.seed, {scenario.failure_model.rng_seed});

    for (std::size_t c = 0; c < 2; ++c) {
      const TaskSpec& task = scenario.tasks[c].spec;
      std::map<std::size_t, std::size_t> attempts;
      std::size_t failures = 0;
      std::vector<double> group_rates;
      for (std::size_t g = 0; g < config.groups; ++g) {
        std::size_t accepted = 0;
        for (std::size_t e = 0; e < config.episodes; ++e) {
          const std::uint64_t seed = derive_seed(base, {c, g, e});
          int invalid = static_cast<int>(
              derive_seed(seed, {0x61647633}) %
              static_cast<std::uint64_t>(scenario.policy.max_retries + 2));
          AdversarialPlanner planner(scenario.graph, invalid, seed);
          EpisodeTrace trace =
              run_episode(scenario.graph, task, planner,
                          scenario.failure_model, scenario.policy, seed);
          attempts[trace.planning.attempts] += 1;
          if (trace.planning.accepted) {
            accepted += 1;
            // Benign model: the executed steps are exactly the accepted
            // plan, and they must replay cleanly from the initial state.
            std::vector<std::string> executed;
            for (const auto& event : trace.events) {
              CHECK(event.outcome.ok());
              executed.push_back(event.skill.name);
            }
            auto verdict = testsupport::ref_verify(scenario.graph,
                                                   task.initial, executed);
            CHECK(verdict.feasible);
            CHECK(trace.terminal.success);
            CHECK(trace.goals_completed == task.goal_skills);
          } else {
            failures += 1;
            CHECK(trace.planning.failure_cause ==
                  PlanningFailureCause::Exhausted);
            CHECK(trace.events.empty());
          }
        }
        group_rates.push_back(static_cast<double>(accepted) /
                              static_cast<double>(config.episodes));
      }

      const CellReport& cell = report.cells[c];
      CHECK(cell.task_id == scenario.tasks[c].id);
      CHECK(cell.attempts_histogram == attempts);
      CHECK(cell.planning_failures == failures);
      CHECK(cell.exec_successes == config.groups * config.episodes - failures);

      double mean = 0.0;
      for (double rate : group_rates) {
        mean += rate;
      }
      mean /= static_cast<double>(group_rates.size());
      CHECK(cell.planning_success.mean == doctest::Approx(mean).epsilon(1e-12));

      // Derived invalid-attempt counts spread over 0..max_retries+1, so
      // both outcomes must actually occur in 40 episodes.
      CHECK(failures > 0);
      CHECK(cell.exec_successes > 0);
    }
  }

  TEST_CASE("replay scripts drive every episode the same way") {
    SuiteConfig config;
    config.scenario_path = fixture_path("scenario_adversarial.json");
    config.planner.kind = PlannerSelection::Kind::Replay;
    config.planner.script = {ids_of(
        {"pick_bowl_pantry", "nav_pantry_to_table", "place_bowl_table"})};
    config.episodes = 5;

    SuiteReport report = run_or_fail(config);
    REQUIRE(report.cells.size() == 2);

    const CellReport& bowl = report.cells[0];
    CHECK(bowl.planning_failures == 0);
    CHECK(bowl.exec_successes == 5);
    CHECK(bowl.task_success == Aggregate{1.0, 0.0});
    CHECK(bowl.attempts_histogram ==
          std::map<std::size_t, std::size_t>{{1, 5}});

    // The script never covers the second goal, so planning fails once the
    // initial rejection exhausts the scripted proposals.
    const CellReport& set = report.cells[1];
    CHECK(set.planning_failures == 5);
    CHECK(set.exec_successes == 0);
    CHECK(set.task_success == Aggregate{0.0, 0.0});
    CHECK(set.attempts_histogram ==
          std::map<std::size_t, std::size_t>{{3, 5}});
    for (const auto& phase : set.phases) {
      CHECK(phase.mean == 0.0);
    }
  }

  TEST_CASE("loss and stall drills classify every failure the same way") {
    SuiteConfig droplost;
    droplost.scenario_path = fixture_path("scenario_droplost.json");
    droplost.episodes = 40;
    droplost.seed = 101;
    SuiteReport lost_report = run_or_fail(droplost);
    REQUIRE(lost_report.cells.size() == 1);
    const CellReport& lost = lost_report.cells[0];
    CHECK(lost.planning_failures == 0);
    CHECK(lost.step_limit_exceeded == 0);
    CHECK(lost.regression_detected == 0);
    CHECK(lost.unrecoverable_state > 0);
    CHECK(lost.exec_successes + lost.unrecoverable_state == lost.episodes);

    SuiteConfig stall;
    stall.scenario_path = fixture_path("scenario_stall.json");
    stall.episodes = 40;
    stall.seed = 103;
    SuiteReport stall_report = run_or_fail(stall);
    REQUIRE(stall_report.cells.size() == 1);
    const CellReport& stalled = stall_report.cells[0];
    CHECK(stalled.planning_failures == 0);
    CHECK(stalled.unrecoverable_state == 0);
    CHECK(stalled.regression_detected == 0);
    CHECK(stalled.step_limit_exceeded > 0);
    CHECK(stalled.exec_successes + stalled.step_limit_exceeded ==
          stalled.episodes);
  }
}

TEST_SUITE("report emission") {
  TEST_CASE("machine reports validate and corrupted ones do not") {
    SuiteConfig config = load_suite_or_fail("suite_smoke.json");
    config.episodes = 6;
    config.groups = 2;
    SuiteReport report = run_or_fail(config);
    std::string machine = emit_report(report, ReportFormat::Machine);
    CHECK(!validate_machine_report(machine).has_value());

    auto corrupt = [&](auto mutate) {
      nlohmann::ordered_json doc = nlohmann::ordered_json::parse(machine);
      mutate(doc);
      return validate_machine_report(doc.dump(2) + "\n");
    };

    auto wrong_version =
        corrupt([](nlohmann::ordered_json& doc) { doc["schema_version"] = 2; });
    REQUIRE(wrong_version.has_value());
    CHECK(wrong_version->find("schema_version") != std::string::npos);

    auto missing_seed =
        corrupt([](nlohmann::ordered_json& doc) { doc.erase("seed"); });
    CHECK(missing_seed.has_value());

    auto out_of_range = corrupt([](nlohmann::ordered_json& doc) {
      doc["cells"][0]["execution"]["success_rate"]["mean"] = 1.5;
    });
    CHECK(out_of_range.has_value());

    auto rising_phases = corrupt([](nlohmann::ordered_json& doc) {
      auto& phases = doc["cells"][4]["phases"];
      phases[0]["mean"] = 0.1;
      phases[1]["mean"] = 0.9;
    });
    REQUIRE(rising_phases.has_value());
    CHECK(rising_phases->find("phase") != std::string::npos);

    auto leaky_conservation = corrupt([](nlohmann::ordered_json& doc) {
      auto& execution = doc["cells"][0]["execution"];
      execution["successes"] =
          static_cast<std::size_t>(execution["successes"]) + 1;
    });
    REQUIRE(leaky_conservation.has_value());

    auto not_json = validate_machine_report("phase,cell\n1,0.5\n");
    CHECK(not_json.has_value());
  }

  TEST_CASE("the phase csv lines cells up as columns") {
    SuiteConfig config = load_suite_or_fail("suite_smoke.json");
    config.episodes = 4;
    config.groups = 1;
    SuiteReport report = run_or_fail(config);

    std::string csv = phase_csv(report);
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < csv.size()) {
      std::size_t end = csv.find('\n', start);
      lines.push_back(csv.substr(start, end - start));
      start = end == std::string::npos ? csv.size() : end + 1;
    }
    REQUIRE(lines.size() == 3);  // header plus the deepest task's two phases
    CHECK(lines[0].rfind("phase,", 0) == 0);
    for (const auto& cell : report.cells) {
      CHECK(lines[0].find(cell.id) != std::string::npos);
    }
    CHECK(lines[1].rfind("1,", 0) == 0);
    // Single-goal cells leave their second-phase column empty.
    CHECK(lines[2].rfind("2,,,,,", 0) == 0);
  }

  TEST_CASE("trace serialization captures the whole episode") {
    Scenario scenario = load_scenario_or_fail("scenario_smoke.json");
    const TaskSpec& task = scenario.tasks[1].spec;
    OraclePlanner planner(scenario.graph);
    FailureModel model = scenario.failure_model;
    model.base.p_ok = 0.5;
    EpisodeTrace trace = run_episode(scenario.graph, task, planner, model,
                                     scenario.policy, 4242);
    REQUIRE(trace.terminal.success);
    REQUIRE(!trace.events.empty());

    std::string text = serialize_trace(trace);
    CHECK(text == serialize_trace(trace));
    REQUIRE(!text.empty());
    CHECK(text.back() == '\n');

    auto doc = nlohmann::json::parse(text);
    CHECK(doc["task"]["instruction"] == task.instruction);
    CHECK(doc["task"]["initial"] == to_literal(task.initial));
    auto initial_round_trip =
        parse_state_literal(doc["task"]["initial"].get<std::string>());
    REQUIRE(initial_round_trip.ok());
    CHECK(initial_round_trip.value() == task.initial);
    CHECK(doc["planning"]["accepted"] == true);
    CHECK(doc["planning"]["failure_cause"].is_null());
    REQUIRE(doc["events"].is_array());
    REQUIRE(doc["events"].size() == trace.events.size());
    bool saw_failure = false;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      const auto& event = doc["events"][i];
      CHECK(event["step"] == i + 1);
      CHECK(scenario.graph.skills.count(
                SkillId{event["skill"].get<std::string>()}) == 1);
      if (event["outcome"]["ok"] == false) {
        saw_failure = true;
        CHECK(parse_deviation_cause(
                  event["outcome"]["cause"].get<std::string>())
                  .has_value());
      }
      CHECK(event.contains("world"));
    }
    CHECK(saw_failure);  // p_ok = 0.5 at seed 4242 exercises recovery
    CHECK(doc["goals_completed"].size() == task.goal_skills.size());
    CHECK(doc["terminal"]["success"] == true);
  }

  TEST_CASE("config digests ignore parallelism but track everything else") {
    SuiteConfig config = load_suite_or_fail("suite_smoke.json");
    const std::string digest = config_digest(config);
    CHECK(digest.size() == 16);
    CHECK(digest.find_first_not_of("0123456789abcdef") == std::string::npos);

    SuiteConfig parallel = config;
    parallel.jobs = 9;
    CHECK(config_digest(parallel) == digest);

    SuiteConfig reseeded = config;
    reseeded.seed += 1;
    CHECK(config_digest(reseeded) != digest);

    SuiteConfig longer = config;
    longer.episodes += 1;
    CHECK(config_digest(longer) != digest);

    SuiteConfig narrower = config;
    narrower.prune_axis = {std::nullopt};
    CHECK(config_digest(narrower) != digest);

    SuiteConfig other_planner = config;
    other_planner.planner.kind = PlannerSelection::Kind::Adversarial;
    CHECK(config_digest(other_planner) != digest);

    SuiteConfig capped = config;
    capped.step_limit_override = 50;
    CHECK(config_digest(capped) != digest);
  }
}
