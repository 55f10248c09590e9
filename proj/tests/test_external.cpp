#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "skillstate/external_planner.hpp"
#include "support/fixtures.hpp"

using namespace skillstate;
namespace ts = testsupport;

namespace {

std::string completion_body(const std::string& content) {
  nlohmann::json body{
      {"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return body.dump();
}

// Serves a scripted handler on an ephemeral localhost port for one test.
class MockEndpoint {
 public:
  explicit MockEndpoint(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const TaskSpec kTask{{SkillId{"place_bowl_table"}},
                     "put the bowl on the table",
                     EmbodimentState{LocationId{"pantry"}, std::nullopt,
                                     std::nullopt}};

}  // namespace

TEST_CASE("a well formed completion becomes a plan") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  auto view = topo_view(g);

  std::string seen_body;
  std::string seen_auth;
  MockEndpoint mock([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    if (req.has_header("Authorization")) {
      seen_auth = req.get_header_value("Authorization");
    }
    res.set_content(
        completion_body("<<PLAN>>\npick_bowl_pantry\nnav_pantry_to_table\n"
                        "place_bowl_table\n<<END>>\n"),
        "application/json");
  });

  setenv("SKILLSTATE_TEST_TOKEN", "sesame", 1);
  ExternalPlannerConfig config;
  config.endpoint = mock.url();
  config.model = "mock-model";
  config.auth_env = "SKILLSTATE_TEST_TOKEN";
  ExternalPlanner planner(config);

  auto proposal = planner.propose(kTask, view, kTask.initial, std::nullopt);
  REQUIRE(std::holds_alternative<Plan>(proposal));
  CHECK(std::get<Plan>(proposal).steps.size() == 3);

  auto doc = nlohmann::json::parse(seen_body);
  CHECK(doc.at("model") == "mock-model");
  CHECK(doc.at("temperature") == 0);
  REQUIRE(doc.at("messages").size() == 2);
  CHECK(doc.at("messages").at(1).at("content").get<std::string>().find(
            "put the bowl on the table") != std::string::npos);
  CHECK(seen_auth == "Bearer sesame");
  unsetenv("SKILLSTATE_TEST_TOKEN");
}

TEST_CASE("the prompt sent over the wire matches the local serialization") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  auto view = topo_view(g);
  std::string wire_prompt;
  MockEndpoint mock([&](const httplib::Request& req, httplib::Response& res) {
    auto doc = nlohmann::json::parse(req.body);
    wire_prompt = doc.at("messages").at(1).at("content").get<std::string>();
    res.set_content(completion_body("<<PLAN>>\nnav_pantry_to_table\n<<END>>"),
                    "application/json");
  });

  ExternalPlannerConfig config;
  config.endpoint = mock.url();
  ExternalPlanner planner(config);
  auto feedback = std::optional<std::string>("the last plan broke at step 2");
  planner.propose(kTask, view, kTask.initial, feedback);
  CHECK(wire_prompt ==
        serialize_prompt(kTask, view, kTask.initial, feedback));
}

TEST_CASE("a hallucinated id declines with the parse detail as reason") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  auto view = topo_view(g);
  MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion_body("<<PLAN>>\nfold_laundry\n<<END>>"),
                    "application/json");
  });

  ExternalPlannerConfig config;
  config.endpoint = mock.url();
  ExternalPlanner planner(config);
  auto proposal = planner.propose(kTask, view, kTask.initial, std::nullopt);
  REQUIRE(std::holds_alternative<Refusal>(proposal));
  const auto& refusal = std::get<Refusal>(proposal);
  CHECK(refusal.kind == RefusalKind::Declined);
  CHECK(refusal.reason.find("fold_laundry") != std::string::npos);
  CHECK(refusal.reason.find("UnknownSkill") != std::string::npos);
}

TEST_CASE("server errors surface as transport refusals") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  auto view = topo_view(g);
  std::atomic<int> hits{0};
  MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  });

  ExternalPlannerConfig config;
  config.endpoint = mock.url();
  ExternalPlanner planner(config);
  auto proposal = planner.propose(kTask, view, kTask.initial, std::nullopt);
  REQUIRE(std::holds_alternative<Refusal>(proposal));
  CHECK(std::get<Refusal>(proposal).kind == RefusalKind::Transport);
  CHECK(std::get<Refusal>(proposal).reason.find("500") != std::string::npos);
}

TEST_CASE("an unreachable endpoint is retried once then refused") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  auto view = topo_view(g);
  ExternalPlannerConfig config;
  config.endpoint = "http://127.0.0.1:9";  // discard port, nothing listens
  config.timeout_seconds = 5.0;
  ExternalPlanner planner(config);
  auto proposal = planner.propose(kTask, view, kTask.initial, std::nullopt);
  REQUIRE(std::holds_alternative<Refusal>(proposal));
  CHECK(std::get<Refusal>(proposal).kind == RefusalKind::Transport);
}

TEST_CASE("a hanging endpoint refuses with a timeout") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  auto view = topo_view(g);
  MockEndpoint mock([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(900));
    res.set_content(completion_body("late"), "application/json");
  });

  ExternalPlannerConfig config;
  config.endpoint = mock.url();
  config.timeout_seconds = 0.2;
  ExternalPlanner planner(config);
  auto proposal = planner.propose(kTask, view, kTask.initial, std::nullopt);
  REQUIRE(std::holds_alternative<Refusal>(proposal));
  CHECK(std::get<Refusal>(proposal).kind == RefusalKind::Timeout);
}

TEST_CASE("the retry loop lifts completions into verified plans") {
  SkillStateGraph g = ts::load_fixture("mini_household.json");
  std::atomic<int> calls{0};
  std::string second_prompt;
  MockEndpoint mock([&](const httplib::Request& req, httplib::Response& res) {
    int call = ++calls;
    if (call == 1) {
      res.set_content(
          completion_body("<<PLAN>>\npick_bowl_pantry\nplace_bowl_table\n"
                          "<<END>>"),
          "application/json");
      return;
    }
    auto doc = nlohmann::json::parse(req.body);
    second_prompt = doc.at("messages").at(1).at("content").get<std::string>();
    res.set_content(
        completion_body("<<PLAN>>\npick_bowl_pantry\nnav_pantry_to_table\n"
                        "place_bowl_table\n<<END>>"),
        "application/json");
  });

  ExternalPlannerConfig config;
  config.endpoint = mock.url();
  ExternalPlanner planner(config);
  auto outcome = plan_with_verification(planner, g, kTask, 2, std::nullopt);
  REQUIRE(outcome.ok());
  CHECK(outcome.value().attempts == 2);
  CHECK(calls == 2);
  // The second request carried the rejection of the first plan.
  CHECK(second_prompt.find("rejected") != std::string::npos);
  CHECK(second_prompt.find("step 2") != std::string::npos);
}
