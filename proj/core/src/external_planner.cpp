#include "skillstate/external_planner.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace skillstate {

namespace {

// Process-wide bound on concurrent outbound requests.
class InflightGate {
 public:
  void enter(int limit) {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return active_ < limit; });
    ++active_;
  }
  void leave() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      --active_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int active_ = 0;
};

InflightGate& gate() {
  static InflightGate instance;
  return instance;
}

}  // namespace

Proposal ExternalPlanner::propose(const TaskSpec& task, const TopoView& view,
                                  const EmbodimentState& state,
                                  const std::optional<std::string>& feedback) {
  const std::string prompt = serialize_prompt(task, view, state, feedback);

  nlohmann::json body{
      {"model", config_.model},
      {"messages",
       {{{"role", "system"},
         {"content",
          "You plan skill sequences for a mobile manipulator. Follow the"
          " output format exactly."}},
        {{"role", "user"}, {"content", prompt}}}},
      {"temperature", 0},
  };

  httplib::Headers headers;
  if (const char* token = std::getenv(config_.auth_env.c_str());
      token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  httplib::Client client(config_.endpoint);
  const auto timeout_us = static_cast<time_t>(config_.timeout_seconds * 1e6);
  client.set_connection_timeout(0, timeout_us);
  client.set_read_timeout(timeout_us / 1000000, timeout_us % 1000000);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(config_.timeout_seconds);
  httplib::Result res;
  gate().enter(config_.max_inflight);
  for (int attempt = 0; attempt < 2; ++attempt) {
    res = client.Post("/v1/chat/completions", headers, body.dump(),
                      "application/json");
    if (res) {
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      gate().leave();
      return Refusal{RefusalKind::Timeout,
                     "no response within " +
                         std::to_string(config_.timeout_seconds) + "s"};
    }
  }
  gate().leave();

  if (!res) {
    return Refusal{RefusalKind::Transport,
                   "transport error: " + httplib::to_string(res.error())};
  }
  if (res->status != 200) {
    return Refusal{RefusalKind::Transport,
                   "HTTP " + std::to_string(res->status)};
  }

  std::string content;
  try {
    auto doc = nlohmann::json::parse(res->body);
    content = doc.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    return Refusal{RefusalKind::Transport,
                   std::string("malformed completion body: ") + e.what()};
  }

  auto parsed = parse_plan(content, view);
  if (!parsed.ok()) {
    const auto& failure = parsed.error();
    return Refusal{RefusalKind::Declined,
                   "The completion could not be used as a plan (" +
                       std::string(to_string(failure.kind)) + ": " +
                       failure.detail +
                       "). Emit one known skill id per line between the"
                       " markers."};
  }
  return std::move(parsed).take();
}

}  // namespace skillstate
