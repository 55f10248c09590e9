#pragma once

#include <string>

#include "skillstate/planner.hpp"

namespace skillstate {

/// Connection settings for a chat-completion style HTTP endpoint. The
/// request is a single round trip: the serialized prompt goes out as the
/// user message at temperature 0, and the first choice's message content
/// is parsed back into a plan.
struct ExternalPlannerConfig {
  std::string endpoint;  // scheme://host:port, no trailing path
  std::string model = "default";
  double timeout_seconds = 30.0;
  std::string auth_env = "SKILLSTATE_API_KEY";  // bearer token source
  int max_inflight = 4;  // process-wide cap on concurrent requests
};

class ExternalPlanner : public Planner {
 public:
  explicit ExternalPlanner(ExternalPlannerConfig config)
      : config_(std::move(config)) {}

  /// One retry on transport failure; refusals map as: budget overrun ->
  /// Timeout, connection/protocol trouble -> Transport, well-formed
  /// completion that fails plan parsing -> Declined with the parse detail
  /// as reason (so the retry loop can feed it back).
  Proposal propose(const TaskSpec& task, const TopoView& view,
                   const EmbodimentState& state,
                   const std::optional<std::string>& feedback) override;

  const ExternalPlannerConfig& config() const { return config_; }

 private:
  ExternalPlannerConfig config_;
};

}  // namespace skillstate
