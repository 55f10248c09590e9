#include "skillstate/dot.hpp"

#include <sstream>

namespace skillstate {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') {
      out += '\\';
    }
    out += c;
  }
  out += '"';
  return out;
}

class DotWriter {
 public:
  void node(const std::string& id, const std::string& label) {
    body_ << "  " << quote(id) << " [label=" << quote(label) << "];\n";
  }

  void edge(const std::string& from, const std::string& to) {
    body_ << "  " << quote(from) << " -> " << quote(to) << ";\n";
  }

  std::string finish() const {
    std::string body = body_.str();
    if (body.empty()) {
      return "digraph skillstate {}\n";
    }
    return "digraph skillstate {\n" + body + "}\n";
  }

 private:
  std::ostringstream body_;
};

}  // namespace

std::string export_dot(const SkillStateGraph& graph, bool annotated) {
  DotWriter out;
  for (const auto& [id, skill] : graph.skills) {
    std::string label = skill.label;
    if (annotated) {
      label += "\npre " + to_literal(skill.pre);
      label += "\ndelta " + to_literal(skill.delta);
    }
    out.node(id.name, label);
  }
  for (const auto& [from, to] : graph.edges) {
    out.edge(from.name, to.name);
  }
  return out.finish();
}

Result<std::string, DotError> export_dot(const TopoView& view,
                                         bool annotated) {
  if (annotated) {
    return DotError::AnnotatedRequiresFullGraph;
  }
  DotWriter out;
  for (const auto& node : view.nodes) {
    out.node(node.id.name, node.label);
  }
  for (const auto& [from, successors] : view.adjacency) {
    for (const auto& to : successors) {
      out.edge(from.name, to.name);
    }
  }
  return out.finish();
}

}  // namespace skillstate
