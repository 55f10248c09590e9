#include <benchmark/benchmark.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "skillstate/graph.hpp"
#include "skillstate/graph_io.hpp"
#include "skillstate/planner.hpp"
#include "skillstate/scenario.hpp"
#include "skillstate/sim.hpp"
#include "skillstate/suite.hpp"
#include "skillstate/verify.hpp"

using namespace skillstate;

namespace {

std::string fixture(const char* name) {
  return std::string(SKILLSTATE_FIXTURES_DIR) + "/" + name;
}

const SkillStateGraph& household() {
  static SkillStateGraph g = load_graph_file(fixture("household_16.json")).take();
  return g;
}

const Scenario& long_scenario() {
  static Scenario s =
      load_scenario_file(fixture("scenario_long_horizon.json")).take();
  return s;
}

const TaskSpec& rotate_task() { return long_scenario().tasks[0].spec; }

const Plan& rotate_plan() {
  static Plan p = search_plan(household(), rotate_task()).take();
  return p;
}

void BM_DeriveEdges(benchmark::State& bench) {
  const SkillStateGraph& g = household();
  for (auto _ : bench) {
    auto edges = derive_edges(g);
    benchmark::DoNotOptimize(edges);
  }
}
BENCHMARK(BM_DeriveEdges);

void BM_VerifyTenStepPlan(benchmark::State& bench) {
  const SkillStateGraph& g = household();
  const Plan& plan = rotate_plan();
  for (auto _ : bench) {
    auto report = verify(g, rotate_task().initial, plan, true);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_VerifyTenStepPlan);

void BM_PruneView(benchmark::State& bench) {
  const SkillStateGraph& g = household();
  const int depth = static_cast<int>(bench.range(0));
  for (auto _ : bench) {
    auto view = prune_view(g, rotate_task().initial, depth);
    benchmark::DoNotOptimize(view);
  }
}
BENCHMARK(BM_PruneView)->Arg(2)->Arg(kUnboundedDepth);

void BM_SerializePrompt(benchmark::State& bench) {
  const SkillStateGraph& g = household();
  TopoView view = topo_view(g);
  for (auto _ : bench) {
    auto prompt =
        serialize_prompt(rotate_task(), view, rotate_task().initial,
                         std::nullopt);
    benchmark::DoNotOptimize(prompt);
  }
}
BENCHMARK(BM_SerializePrompt);

void BM_SearchTenStepPlan(benchmark::State& bench) {
  const SkillStateGraph& g = household();
  for (auto _ : bench) {
    auto plan = search_plan(g, rotate_task());
    benchmark::DoNotOptimize(plan);
  }
}
BENCHMARK(BM_SearchTenStepPlan);

void BM_PlanningLoop(benchmark::State& bench) {
  const SkillStateGraph& g = household();
  OraclePlanner planner(g);
  for (auto _ : bench) {
    auto outcome =
        plan_with_verification(planner, g, rotate_task(), 2, std::nullopt);
    benchmark::DoNotOptimize(outcome);
  }
}
BENCHMARK(BM_PlanningLoop);

void BM_Episode(benchmark::State& bench) {
  const Scenario& scenario = long_scenario();
  ExecPolicy policy = scenario.policy;
  policy.closed_loop = bench.range(0) != 0;
  OraclePlanner planner(scenario.graph);
  std::uint64_t seed = 0;
  for (auto _ : bench) {
    EpisodeTrace trace =
        run_episode(scenario.graph, rotate_task(), planner,
                    scenario.failure_model, policy, seed++);
    benchmark::DoNotOptimize(trace);
  }
}
BENCHMARK(BM_Episode)->Arg(0)->Arg(1);

void BM_SuiteSmoke(benchmark::State& bench) {
  SuiteConfig config = load_suite_file(fixture("suite_smoke.json")).take();
  for (auto _ : bench) {
    auto report = run_suite(config);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(BM_SuiteSmoke);

}  // namespace
