#pragma once

#include <cstdint>
#include <string>

#include "skillstate/graph.hpp"
#include "skillstate/result.hpp"

namespace skillstate {

enum class DotError : std::uint8_t { AnnotatedRequiresFullGraph };

/// DOT digraph for a full graph. annotated=true adds each skill's
/// precondition and state-variation literals to its node label.
/// Deterministic: nodes by id, then edges in sorted order.
std::string export_dot(const SkillStateGraph& graph, bool annotated);

/// DOT digraph for a view. Views carry no state data, so annotation is
/// refused rather than silently dropped.
Result<std::string, DotError> export_dot(const TopoView& view, bool annotated);

}  // namespace skillstate
