#include "skillstate/graph_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace skillstate {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Diagnostic::Code code) {
  using Code = Diagnostic::Code;
  switch (code) {
    case Code::BadDocument:
      return "BadDocument";
    case Code::DuplicateSkillId:
      return "DuplicateSkillId";
    case Code::DuplicateEdge:
      return "DuplicateEdge";
    case Code::UnknownLocation:
      return "UnknownLocation";
    case Code::UnknownObject:
      return "UnknownObject";
    case Code::UnknownAction:
      return "UnknownAction";
    case Code::DanglingEdge:
      return "DanglingEdge";
    case Code::PreconditionContradictsDelta:
      return "PreconditionContradictsDelta";
    case Code::InfeasibleDeclaredEdge:
      return "InfeasibleDeclaredEdge";
    case Code::StateSpaceTooLarge:
      return "StateSpaceTooLarge";
    case Code::UnknownSkill:
      return "UnknownSkill";
    case Code::DuplicateTaskId:
      return "DuplicateTaskId";
    case Code::BadValue:
      return "BadValue";
  }
  return "?";
}

std::string format_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::ostringstream out;
  for (const auto& d : diagnostics) {
    out << d.path << ": " << d.message << " [" << to_string(d.code) << "]\n";
  }
  return out.str();
}

namespace {

bool is_token(const std::string& s) {
  return !s.empty() && s.find_first_of(" \t\r\n") == std::string::npos;
}

class GraphLoader {
 public:
  explicit GraphLoader(const LoadOptions& options) : options_(options) {}

  Result<SkillStateGraph, std::vector<Diagnostic>> load(
      const std::string& text) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      fail(Diagnostic::Code::BadDocument, "$", e.what());
      return std::move(diags_);
    }
    parse_document(doc);
    if (!diags_.empty()) {
      return std::move(diags_);
    }
    resolve_edges();
    if (!diags_.empty()) {
      return std::move(diags_);
    }
    return std::move(graph_);
  }

 private:
  void fail(Diagnostic::Code code, std::string path, std::string message) {
    diags_.push_back({code, std::move(path), std::move(message)});
  }

  bool expect_string(const json& j, const std::string& path,
                     std::string* out) {
    if (!j.is_string()) {
      fail(Diagnostic::Code::BadDocument, path, "expected a string");
      return false;
    }
    *out = j.get<std::string>();
    return true;
  }

  bool expect_token(const json& j, const std::string& path, std::string* out) {
    if (!expect_string(j, path, out)) {
      return false;
    }
    if (!is_token(*out)) {
      fail(Diagnostic::Code::BadDocument, path,
           "identifier must be non-empty without whitespace");
      return false;
    }
    return true;
  }

  bool check_keys(const json& obj, const std::string& path,
                  std::initializer_list<std::string_view> allowed) {
    bool ok = true;
    for (const auto& [key, value] : obj.items()) {
      bool known = false;
      for (auto a : allowed) {
        known |= key == a;
      }
      if (!known) {
        fail(Diagnostic::Code::BadDocument, path + "." + key, "unknown key");
        ok = false;
      }
    }
    return ok;
  }

  void parse_document(const json& doc) {
    if (!doc.is_object()) {
      fail(Diagnostic::Code::BadDocument, "$", "expected a top-level object");
      return;
    }
    check_keys(doc, "$",
               {"locations", "objects", "actions", "skills", "templates",
                "edges", "edge_mode"});
    bool missing = false;
    for (auto key : {"locations", "objects", "skills", "edge_mode"}) {
      if (!doc.contains(key)) {
        fail(Diagnostic::Code::BadDocument, std::string("$.") + key,
             "missing required key");
        missing = true;
      }
    }
    if (missing) {
      return;
    }

    parse_names(doc["locations"], "$.locations", "location",
                [this](std::string name) {
                  return graph_.locations.insert(LocationId{std::move(name)})
                      .second;
                });
    parse_names(doc["objects"], "$.objects", "object",
                [this](std::string name) {
                  return graph_.objects.insert(ObjectId{std::move(name)})
                      .second;
                });
    if (doc.contains("actions")) {
      parse_actions(doc["actions"]);
    }

    std::string mode;
    if (expect_string(doc["edge_mode"], "$.edge_mode", &mode)) {
      if (mode == "declared") {
        graph_.edge_mode = EdgeMode::Declared;
      } else if (mode == "derived") {
        graph_.edge_mode = EdgeMode::Derived;
      } else {
        fail(Diagnostic::Code::BadDocument, "$.edge_mode",
             "expected \"declared\" or \"derived\"");
      }
    }

    // Collect grounded skill entries: literal ones plus template expansions.
    std::vector<std::pair<json, std::string>> entries;
    if (!doc["skills"].is_array()) {
      fail(Diagnostic::Code::BadDocument, "$.skills", "expected an array");
    } else {
      std::size_t i = 0;
      for (const auto& entry : doc["skills"]) {
        entries.emplace_back(entry, "$.skills[" + std::to_string(i++) + "]");
      }
    }
    if (doc.contains("templates")) {
      expand_templates(doc["templates"], &entries);
    }
    for (const auto& [entry, path] : entries) {
      parse_skill(entry, path);
    }

    if (doc.contains("edges")) {
      parse_declared_edges(doc["edges"]);
    }
    if (graph_.edge_mode == EdgeMode::Derived && !declared_.empty()) {
      fail(Diagnostic::Code::BadDocument, "$.edges",
           "derived edge_mode takes no edge list");
    }
  }

  template <typename Insert>
  void parse_names(const json& arr, const std::string& path,
                   std::string_view what, Insert insert) {
    if (!arr.is_array()) {
      fail(Diagnostic::Code::BadDocument, path, "expected an array");
      return;
    }
    std::size_t i = 0;
    for (const auto& item : arr) {
      std::string p = path + "[" + std::to_string(i++) + "]";
      std::string name;
      if (!expect_token(item, p, &name)) {
        continue;
      }
      if (!insert(name)) {
        fail(Diagnostic::Code::BadDocument, p,
             "duplicate " + std::string(what) + " \"" + name + "\"");
      }
    }
  }

  void parse_actions(const json& arr) {
    if (!arr.is_array()) {
      fail(Diagnostic::Code::BadDocument, "$.actions", "expected an array");
      return;
    }
    std::size_t i = 0;
    for (const auto& item : arr) {
      std::string p = "$.actions[" + std::to_string(i++) + "]";
      if (!item.is_object()) {
        fail(Diagnostic::Code::BadDocument, p, "expected an object");
        continue;
      }
      check_keys(item, p, {"id", "label"});
      if (!item.contains("id") || !item.contains("label")) {
        fail(Diagnostic::Code::BadDocument, p, "needs id and label");
        continue;
      }
      ActionSkill action;
      if (!expect_token(item["id"], p + ".id", &action.id.name) ||
          !expect_string(item["label"], p + ".label", &action.label)) {
        continue;
      }
      if (!graph_.actions.emplace(action.id, action).second) {
        fail(Diagnostic::Code::BadDocument, p + ".id",
             "duplicate action id \"" + action.id.name + "\"");
      }
    }
  }

  void expand_templates(const json& arr,
                        std::vector<std::pair<json, std::string>>* out) {
    if (!arr.is_array()) {
      fail(Diagnostic::Code::BadDocument, "$.templates", "expected an array");
      return;
    }
    std::size_t k = 0;
    for (const auto& tmpl : arr) {
      std::string p = "$.templates[" + std::to_string(k++) + "]";
      if (!tmpl.is_object()) {
        fail(Diagnostic::Code::BadDocument, p, "expected an object");
        continue;
      }
      json body = tmpl;
      std::vector<std::string> objs =
          expansion_list(&body, "objects", p, graph_.objects);
      std::vector<std::string> locs =
          expansion_list(&body, "locations", p, graph_.locations);
      std::string flat = body.dump();
      bool uses_obj = flat.find("{obj}") != std::string::npos;
      bool uses_loc = flat.find("{loc}") != std::string::npos;
      if (!uses_obj) {
        objs = {""};
      }
      if (!uses_loc) {
        locs = {""};
      }
      for (const auto& obj : objs) {
        for (const auto& loc : locs) {
          json grounded = body;
          substitute(&grounded, obj, loc);
          std::string where = p;
          if (uses_obj || uses_loc) {
            where += "<" + obj + (uses_obj && uses_loc ? "," : "") + loc + ">";
          }
          out->emplace_back(std::move(grounded), std::move(where));
        }
      }
    }
  }

  // Pulls an optional expansion-restriction list out of a template body,
  // defaulting to the full declared set.
  template <typename Set>
  std::vector<std::string> expansion_list(json* body, const char* key,
                                          const std::string& path,
                                          const Set& declared) {
    std::vector<std::string> names;
    if (body->contains(key)) {
      const json& arr = (*body)[key];
      std::size_t i = 0;
      if (!arr.is_array()) {
        fail(Diagnostic::Code::BadDocument, path + "." + key,
             "expected an array");
      } else {
        for (const auto& item : arr) {
          std::string p = path + "." + key + "[" + std::to_string(i++) + "]";
          std::string name;
          if (!expect_token(item, p, &name)) {
            continue;
          }
          bool known = false;
          for (const auto& d : declared) {
            known |= d.name == name;
          }
          if (!known) {
            fail(std::string(key) == "objects"
                     ? Diagnostic::Code::UnknownObject
                     : Diagnostic::Code::UnknownLocation,
                 p, "\"" + name + "\" is not declared");
            continue;
          }
          names.push_back(name);
        }
      }
      body->erase(key);
      return names;
    }
    for (const auto& d : declared) {
      names.push_back(d.name);
    }
    return names;
  }

  static void substitute(json* j, const std::string& obj,
                         const std::string& loc) {
    if (j->is_string()) {
      std::string s = j->get<std::string>();
      replace_all(&s, "{obj}", obj);
      replace_all(&s, "{loc}", loc);
      *j = s;
      return;
    }
    if (j->is_array() || j->is_object()) {
      for (auto& item : *j) {
        substitute(&item, obj, loc);
      }
    }
  }

  static void replace_all(std::string* s, std::string_view from,
                          std::string_view to) {
    for (std::size_t pos = s->find(from); pos != std::string::npos;
         pos = s->find(from, pos + to.size())) {
      s->replace(pos, from.size(), to);
    }
  }

  bool known_location(const std::string& name) const {
    return graph_.locations.count(LocationId{name}) != 0;
  }

  bool known_object(const std::string& name) const {
    return graph_.objects.count(ObjectId{name}) != 0;
  }

  bool parse_location_ref(const json& j, const std::string& path,
                          LocationId* out) {
    std::string name;
    if (!expect_token(j, path, &name)) {
      return false;
    }
    if (!known_location(name)) {
      fail(Diagnostic::Code::UnknownLocation, path,
           "\"" + name + "\" is not a declared location");
      return false;
    }
    out->name = std::move(name);
    return true;
  }

  bool parse_object_ref(const json& j, const std::string& path,
                        ObjectId* out) {
    std::string name;
    if (!expect_token(j, path, &name)) {
      return false;
    }
    if (!known_object(name)) {
      fail(Diagnostic::Code::UnknownObject, path,
           "\"" + name + "\" is not a declared object");
      return false;
    }
    out->name = std::move(name);
    return true;
  }

  bool parse_pre(const json& j, const std::string& path, Precondition* out) {
    if (!j.is_object()) {
      fail(Diagnostic::Code::BadDocument, path, "expected an object");
      return false;
    }
    check_keys(j, path, {"location", "left", "right"});
    for (auto key : {"location", "left", "right"}) {
      if (!j.contains(key)) {
        fail(Diagnostic::Code::BadDocument, path + "." + key,
             "missing required key");
        return false;
      }
    }
    bool ok = true;
    const json& loc = j["location"];
    if (loc.is_string() && loc.get<std::string>() == "_") {
      out->location = LocationPattern::wildcard();
    } else {
      LocationId id;
      if (parse_location_ref(loc, path + ".location", &id)) {
        out->location = LocationPattern::at(std::move(id));
      } else {
        ok = false;
      }
    }
    auto gripper = [&](const char* key, GripperPattern* slot) {
      const json& g = j[key];
      if (g.is_null()) {
        *slot = GripperPattern::empty();
        return;
      }
      if (g.is_string() && g.get<std::string>() == "_") {
        *slot = GripperPattern::wildcard();
        return;
      }
      ObjectId id;
      if (parse_object_ref(g, path + "." + key, &id)) {
        *slot = GripperPattern::holding(std::move(id));
      } else {
        ok = false;
      }
    };
    gripper("left", &out->left);
    gripper("right", &out->right);
    return ok;
  }

  bool parse_delta(const json& j, const std::string& path, StateDelta* out) {
    if (!j.is_object()) {
      fail(Diagnostic::Code::BadDocument, path, "expected an object");
      return false;
    }
    check_keys(j, path, {"scene", "left", "right"});
    for (auto key : {"scene", "left", "right"}) {
      if (!j.contains(key)) {
        fail(Diagnostic::Code::BadDocument, path + "." + key,
             "missing required key");
        return false;
      }
    }
    bool ok = true;
    const json& scene = j["scene"];
    if (scene.is_null()) {
      out->scene = std::nullopt;
    } else if (scene.is_object() && scene.contains("move") &&
               scene.size() == 1 && scene["move"].is_array() &&
               scene["move"].size() == 2) {
      MoveOp move;
      ok &= parse_location_ref(scene["move"][0], path + ".scene.move[0]",
                               &move.from);
      ok &= parse_location_ref(scene["move"][1], path + ".scene.move[1]",
                               &move.to);
      if (ok && move.from == move.to) {
        fail(Diagnostic::Code::BadDocument, path + ".scene.move",
             "move endpoints must differ");
        ok = false;
      }
      if (ok) {
        out->scene = std::move(move);
      }
    } else {
      fail(Diagnostic::Code::BadDocument, path + ".scene",
           "expected null or {\"move\": [from, to]}");
      ok = false;
    }
    auto gripper = [&](const char* key, GripperOp* slot) {
      const json& g = j[key];
      if (g.is_null()) {
        *slot = GripperOp::none();
        return;
      }
      if (g.is_object() && g.size() == 1 &&
          (g.contains("add") || g.contains("sub"))) {
        bool add = g.contains("add");
        ObjectId id;
        std::string p = path + "." + key + (add ? ".add" : ".sub");
        if (!parse_object_ref(add ? g["add"] : g["sub"], p, &id)) {
          ok = false;
          return;
        }
        *slot = add ? GripperOp::add(std::move(id))
                    : GripperOp::sub(std::move(id));
        return;
      }
      fail(Diagnostic::Code::BadDocument, path + "." + key,
           "expected null, {\"add\": object} or {\"sub\": object}");
      ok = false;
    };
    gripper("left", &out->left);
    gripper("right", &out->right);
    return ok;
  }

  void parse_skill(const json& entry, const std::string& path) {
    if (!entry.is_object()) {
      fail(Diagnostic::Code::BadDocument, path, "expected an object");
      return;
    }
    check_keys(entry, path,
               {"id", "label", "category", "pre", "delta", "action_refs"});
    for (auto key : {"id", "label", "category", "pre", "delta"}) {
      if (!entry.contains(key)) {
        fail(Diagnostic::Code::BadDocument, path + "." + key,
             "missing required key");
        return;
      }
    }
    SemanticSkill skill;
    bool ok = expect_token(entry["id"], path + ".id", &skill.id.name);
    // Duplicate detection runs off its own ledger so it still fires when a
    // colliding entry has other problems and never reaches the graph map.
    if (ok && !skill_ids_seen_.insert(skill.id.name).second) {
      fail(Diagnostic::Code::DuplicateSkillId, path + ".id",
           "duplicate skill id \"" + skill.id.name + "\"");
      ok = false;
    }
    ok &= expect_string(entry["label"], path + ".label", &skill.label);
    std::string category;
    if (expect_string(entry["category"], path + ".category", &category)) {
      if (auto c = parse_category(category)) {
        skill.category = *c;
      } else {
        fail(Diagnostic::Code::BadDocument, path + ".category",
             "unknown category \"" + category + "\"");
        ok = false;
      }
    } else {
      ok = false;
    }
    ok &= parse_pre(entry["pre"], path + ".pre", &skill.pre);
    ok &= parse_delta(entry["delta"], path + ".delta", &skill.delta);
    if (entry.contains("action_refs")) {
      const json& refs = entry["action_refs"];
      if (!refs.is_array()) {
        fail(Diagnostic::Code::BadDocument, path + ".action_refs",
             "expected an array");
        ok = false;
      } else {
        std::size_t i = 0;
        for (const auto& ref : refs) {
          std::string p = path + ".action_refs[" + std::to_string(i++) + "]";
          std::string name;
          if (!expect_token(ref, p, &name)) {
            ok = false;
            continue;
          }
          if (!graph_.actions.count(ActionSkillId{name})) {
            fail(Diagnostic::Code::UnknownAction, p,
                 "\"" + name + "\" is not a declared action");
            ok = false;
            continue;
          }
          skill.action_refs.push_back(ActionSkillId{std::move(name)});
        }
      }
    }
    if (!ok) {
      return;
    }
    check_contradiction(skill, path);
    graph_.skills.emplace(skill.id, skill);
  }

  // The stated precondition must be at least as strong as what the delta
  // needs, slot by slot; otherwise the skill admits states where its own
  // delta fails.
  void check_contradiction(const SemanticSkill& skill,
                           const std::string& path) {
    Precondition implied = implied_precondition(skill.delta);
    if (!implied.location.is_wildcard() &&
        skill.pre.location != implied.location) {
      fail(Diagnostic::Code::PreconditionContradictsDelta, path + ".pre.location",
           "delta moves from " + implied.location.exact->name +
               " but the precondition does not pin the location there");
    }
    auto check = [&](const GripperPattern& pre, const GripperPattern& need,
                     const char* slot) {
      if (!need.is_wildcard() && pre != need) {
        std::string want = need.requires_empty()
                               ? "an empty gripper"
                               : "holding \"" + need.required_object()->name +
                                     "\"";
        fail(Diagnostic::Code::PreconditionContradictsDelta,
             path + ".pre." + slot,
             "delta requires " + want +
                 " but the precondition does not state it");
      }
    };
    check(skill.pre.left, implied.left, "left");
    check(skill.pre.right, implied.right, "right");
  }

  void parse_declared_edges(const json& arr) {
    if (!arr.is_array()) {
      fail(Diagnostic::Code::BadDocument, "$.edges", "expected an array");
      return;
    }
    std::size_t i = 0;
    for (const auto& item : arr) {
      std::string p = "$.edges[" + std::to_string(i++) + "]";
      if (!item.is_array() || item.size() != 2) {
        fail(Diagnostic::Code::BadDocument, p, "expected [from, to]");
        continue;
      }
      std::string from;
      std::string to;
      if (!expect_token(item[0], p + "[0]", &from) ||
          !expect_token(item[1], p + "[1]", &to)) {
        continue;
      }
      Edge edge{SkillId{std::move(from)}, SkillId{std::move(to)}};
      bool dangling = false;
      for (int side = 0; side < 2; ++side) {
        const SkillId& id = side == 0 ? edge.first : edge.second;
        if (!graph_.skills.count(id)) {
          fail(Diagnostic::Code::DanglingEdge,
               p + "[" + std::to_string(side) + "]",
               "\"" + id.name + "\" is not a skill in this graph");
          dangling = true;
        }
      }
      if (dangling) {
        continue;
      }
      if (!declared_seen_.insert(edge).second) {
        fail(Diagnostic::Code::DuplicateEdge, p,
             "edge " + edge.first.name + " -> " + edge.second.name +
                 " listed twice");
        continue;
      }
      declared_.emplace_back(std::move(edge), std::move(p));
    }
  }

  void resolve_edges() {
    auto derived = derive_edges(graph_, options_.max_states);
    if (!derived.ok()) {
      std::ostringstream msg;
      msg << "state space has " << derived.error().states
          << " states, above the bound of " << derived.error().bound;
      fail(Diagnostic::Code::StateSpaceTooLarge, "$", msg.str());
      return;
    }
    if (graph_.edge_mode == EdgeMode::Derived) {
      graph_.edges = std::move(derived).take();
      return;
    }
    const auto& feasible = derived.value();
    for (const auto& [edge, path] : declared_) {
      if (!feasible.count(edge)) {
        fail(Diagnostic::Code::InfeasibleDeclaredEdge, path,
             "no state reachable through " + edge.first.name +
                 " satisfies " + edge.second.name);
        continue;
      }
      graph_.edges.insert(edge);
    }
  }

  LoadOptions options_;
  SkillStateGraph graph_;
  std::vector<Diagnostic> diags_;
  std::set<std::string> skill_ids_seen_;
  std::vector<std::pair<Edge, std::string>> declared_;
  std::set<Edge> declared_seen_;
};

json encode_pre(const Precondition& pre) {
  json j;
  j["location"] =
      pre.location.is_wildcard() ? json("_") : json(pre.location.exact->name);
  auto slot = [](const GripperPattern& g) -> json {
    if (g.is_wildcard()) {
      return "_";
    }
    if (g.requires_empty()) {
      return nullptr;
    }
    return g.required_object()->name;
  };
  j["left"] = slot(pre.left);
  j["right"] = slot(pre.right);
  return j;
}

json encode_delta(const StateDelta& delta) {
  json j;
  if (delta.scene) {
    j["scene"] = {{"move", {delta.scene->from.name, delta.scene->to.name}}};
  } else {
    j["scene"] = nullptr;
  }
  auto slot = [](const GripperOp& op) -> json {
    switch (op.kind) {
      case GripperOp::Kind::None:
        return nullptr;
      case GripperOp::Kind::Add:
        return {{"add", op.object.name}};
      case GripperOp::Kind::Sub:
        return {{"sub", op.object.name}};
    }
    return nullptr;
  };
  j["left"] = slot(delta.left);
  j["right"] = slot(delta.right);
  return j;
}

}  // namespace

Result<SkillStateGraph, std::vector<Diagnostic>> load_graph(
    const std::string& document, const LoadOptions& options) {
  return GraphLoader(options).load(document);
}

Result<SkillStateGraph, std::vector<Diagnostic>> load_graph_file(
    const std::string& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return std::vector<Diagnostic>{{Diagnostic::Code::BadDocument, "$",
                                    "cannot read file \"" + path + "\""}};
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_graph(buf.str(), options);
}

std::string serialize_graph(const SkillStateGraph& graph) {
  ordered_json doc;
  doc["locations"] = json::array();
  for (const auto& loc : graph.locations) {
    doc["locations"].push_back(loc.name);
  }
  doc["objects"] = json::array();
  for (const auto& obj : graph.objects) {
    doc["objects"].push_back(obj.name);
  }
  doc["actions"] = json::array();
  for (const auto& [id, action] : graph.actions) {
    doc["actions"].push_back({{"id", id.name}, {"label", action.label}});
  }
  doc["skills"] = json::array();
  for (const auto& [id, skill] : graph.skills) {
    ordered_json s;
    s["id"] = id.name;
    s["label"] = skill.label;
    s["category"] = to_string(skill.category);
    s["pre"] = encode_pre(skill.pre);
    s["delta"] = encode_delta(skill.delta);
    s["action_refs"] = json::array();
    for (const auto& ref : skill.action_refs) {
      s["action_refs"].push_back(ref.name);
    }
    doc["skills"].push_back(std::move(s));
  }
  doc["edge_mode"] =
      graph.edge_mode == EdgeMode::Declared ? "declared" : "derived";
  if (graph.edge_mode == EdgeMode::Declared) {
    doc["edges"] = json::array();
    for (const auto& [from, to] : graph.edges) {
      doc["edges"].push_back({from.name, to.name});
    }
  }
  return doc.dump(2) + "\n";
}

std::string serialize_topo_view(const TopoView& view) {
  ordered_json doc;
  doc["nodes"] = json::array();
  for (const auto& node : view.nodes) {
    ordered_json n;
    n["id"] = node.id.name;
    n["label"] = node.label;
    n["category"] = to_string(node.category);
    doc["nodes"].push_back(std::move(n));
  }
  doc["adjacency"] = ordered_json::object();
  for (const auto& [id, successors] : view.adjacency) {
    json list = json::array();
    for (const auto& s : successors) {
      list.push_back(s.name);
    }
    doc["adjacency"][id.name] = std::move(list);
  }
  return doc.dump(2) + "\n";
}

}  // namespace skillstate
