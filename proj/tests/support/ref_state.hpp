#pragma once

#include <array>
#include <optional>
#include <string>

// Reference semantics for state matching and delta application, written
// against the documented rules rather than the library types. States are
// three strings; "" encodes an empty gripper. Patterns use "*" for
// wildcard and "" for exactly-empty. Deltas are encoded as strings:
// scene "A>B" or "", gripper "+obj", "-obj" or "".
namespace testsupport {

using RefState = std::array<std::string, 3>;  // location, left, right
using RefPattern = std::array<std::string, 3>;

inline bool ref_matches(const RefState& st, const RefPattern& pat) {
  for (int i = 0; i < 3; ++i) {
    if (pat[i] != "*" && pat[i] != st[i]) {
      return false;
    }
  }
  return true;
}

inline std::optional<std::string> ref_apply_gripper(const std::string& held,
                                                    const std::string& op) {
  if (op.empty()) {
    return held;
  }
  if (op[0] == '+') {
    if (!held.empty()) {
      return std::nullopt;
    }
    return op.substr(1);
  }
  // '-'
  if (held != op.substr(1)) {
    return std::nullopt;
  }
  return std::string();
}

inline std::optional<RefState> ref_apply(const RefState& st,
                                         const std::string& scene,
                                         const std::string& left,
                                         const std::string& right) {
  RefState out = st;
  if (!scene.empty()) {
    auto gt = scene.find('>');
    if (st[0] != scene.substr(0, gt)) {
      return std::nullopt;
    }
    out[0] = scene.substr(gt + 1);
  }
  auto l = ref_apply_gripper(st[1], left);
  if (!l) {
    return std::nullopt;
  }
  auto r = ref_apply_gripper(st[2], right);
  if (!r) {
    return std::nullopt;
  }
  out[1] = *l;
  out[2] = *r;
  return out;
}

}  // namespace testsupport
