#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "skillstate/graph.hpp"
#include "skillstate/result.hpp"

namespace skillstate {

/// One validation finding, with a path into the source document.
struct Diagnostic {
  enum class Code : std::uint8_t {
    BadDocument,
    DuplicateSkillId,
    DuplicateEdge,
    UnknownLocation,
    UnknownObject,
    UnknownAction,
    DanglingEdge,
    PreconditionContradictsDelta,
    InfeasibleDeclaredEdge,
    StateSpaceTooLarge,
    UnknownSkill,
    DuplicateTaskId,
    BadValue,
  };

  Code code;
  std::string path;
  std::string message;
  bool operator==(const Diagnostic&) const = default;
};

std::string_view to_string(Diagnostic::Code code);

/// One line per diagnostic: "path: message [code]".
std::string format_diagnostics(const std::vector<Diagnostic>& diagnostics);

struct LoadOptions {
  std::size_t max_states = kDefaultMaxStates;
};

/// Parses and fully validates a graph document. Collects every finding
/// rather than stopping at the first; an error result is never empty.
Result<SkillStateGraph, std::vector<Diagnostic>> load_graph(
    const std::string& document, const LoadOptions& options = {});

Result<SkillStateGraph, std::vector<Diagnostic>> load_graph_file(
    const std::string& path, const LoadOptions& options = {});

/// Canonical document for a graph: stable key order, sorted collections.
/// Derived-mode graphs serialize without an edge list (reloading re-derives
/// the identical set), so load(serialize(g)) == g in both modes.
std::string serialize_graph(const SkillStateGraph& graph);

/// Canonical document for a view: nodes and adjacency only.
std::string serialize_topo_view(const TopoView& view);

}  // namespace skillstate
