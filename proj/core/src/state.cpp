#include "skillstate/state.hpp"

#include <sstream>
#include <vector>

namespace skillstate {

bool matches(const EmbodimentState& state, const Precondition& pre) {
  return pre.location.matches(state.location) && pre.left.matches(state.left) &&
         pre.right.matches(state.right);
}

namespace {

Result<GripperContent, DeltaError> apply_gripper(const GripperContent& content,
                                                 const GripperOp& op,
                                                 StateSlot slot) {
  using Code = DeltaError::Code;
  switch (op.kind) {
    case GripperOp::Kind::None:
      return content;
    case GripperOp::Kind::Add:
      if (content.has_value()) {
        return DeltaError{Code::AddOnOccupied, slot};
      }
      return GripperContent{op.object};
    case GripperOp::Kind::Sub:
      if (!content.has_value()) {
        return DeltaError{Code::SubOnEmpty, slot};
      }
      if (*content != op.object) {
        return DeltaError{Code::SubOnWrongObject, slot};
      }
      return GripperContent{};
  }
  return content;  // unreachable
}

}  // namespace

Result<EmbodimentState, DeltaError> apply_delta(const EmbodimentState& state,
                                                const StateDelta& delta) {
  EmbodimentState next = state;
  if (delta.scene.has_value()) {
    if (state.location != delta.scene->from) {
      return DeltaError{DeltaError::Code::MoveFromMismatch, StateSlot::Location};
    }
    next.location = delta.scene->to;
  }
  auto left = apply_gripper(state.left, delta.left, StateSlot::Left);
  if (!left.ok()) {
    return left.error();
  }
  auto right = apply_gripper(state.right, delta.right, StateSlot::Right);
  if (!right.ok()) {
    return right.error();
  }
  next.left = std::move(left).take();
  next.right = std::move(right).take();
  return next;
}

namespace {

GripperPattern implied_gripper(const GripperOp& op) {
  switch (op.kind) {
    case GripperOp::Kind::None:
      return GripperPattern::wildcard();
    case GripperOp::Kind::Add:
      return GripperPattern::empty();
    case GripperOp::Kind::Sub:
      return GripperPattern::holding(op.object);
  }
  return GripperPattern::wildcard();  // unreachable
}

}  // namespace

Precondition implied_precondition(const StateDelta& delta) {
  Precondition pre = Precondition::any();
  if (delta.scene.has_value()) {
    pre.location = LocationPattern::at(delta.scene->from);
  }
  pre.left = implied_gripper(delta.left);
  pre.right = implied_gripper(delta.right);
  return pre;
}

std::string_view to_string(StateSlot slot) {
  switch (slot) {
    case StateSlot::Location:
      return "location";
    case StateSlot::Left:
      return "left gripper";
    case StateSlot::Right:
      return "right gripper";
  }
  return "?";
}

std::string_view to_string(DeltaError::Code code) {
  using Code = DeltaError::Code;
  switch (code) {
    case Code::MoveFromMismatch:
      return "move source differs from current location";
    case Code::AddOnOccupied:
      return "gripper already holds an object";
    case Code::SubOnWrongObject:
      return "gripper holds a different object";
    case Code::SubOnEmpty:
      return "gripper is empty";
  }
  return "?";
}

namespace {

constexpr std::string_view kEmptyMark = "∅";

std::string gripper_literal(const GripperContent& content) {
  return content.has_value() ? content->name : std::string(kEmptyMark);
}

std::string gripper_pattern_literal(const GripperPattern& pat) {
  if (pat.is_wildcard()) {
    return "_";
  }
  if (pat.requires_empty()) {
    return std::string(kEmptyMark);
  }
  return pat.required_object()->name;
}

std::string gripper_op_literal(const GripperOp& op) {
  switch (op.kind) {
    case GripperOp::Kind::None:
      return std::string(kEmptyMark);
    case GripperOp::Kind::Add:
      return "ADD(" + op.object.name + ")";
    case GripperOp::Kind::Sub:
      return "SUB(" + op.object.name + ")";
  }
  return std::string(kEmptyMark);  // unreachable
}

}  // namespace

std::string to_literal(const EmbodimentState& state) {
  std::ostringstream out;
  out << "(" << state.location.name << ", " << gripper_literal(state.left)
      << ", " << gripper_literal(state.right) << ")";
  return out.str();
}

std::string to_literal(const Precondition& pre) {
  std::ostringstream out;
  out << "(" << (pre.location.is_wildcard() ? "_" : pre.location.exact->name)
      << ", " << gripper_pattern_literal(pre.left) << ", "
      << gripper_pattern_literal(pre.right) << ")";
  return out.str();
}

std::string to_literal(const StateDelta& delta) {
  std::ostringstream out;
  out << "(";
  if (delta.scene.has_value()) {
    out << "MOVE(" << delta.scene->from.name << ", " << delta.scene->to.name
        << ")";
  } else {
    out << kEmptyMark;
  }
  out << ", " << gripper_op_literal(delta.left) << ", "
      << gripper_op_literal(delta.right) << ")";
  return out.str();
}

namespace {

std::string trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) {
    return "";
  }
  size_t e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Result<EmbodimentState, std::string> parse_state_literal(
    std::string_view text) {
  std::string t = trim(text);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')') {
    return std::string("state literal must be parenthesized");
  }
  std::string inner = t.substr(1, t.size() - 2);
  std::vector<std::string> parts;
  size_t start = 0;
  while (parts.size() < 2) {
    size_t comma = inner.find(',', start);
    if (comma == std::string::npos) {
      break;
    }
    parts.push_back(trim(std::string_view(inner).substr(start, comma - start)));
    start = comma + 1;
  }
  parts.push_back(trim(std::string_view(inner).substr(start)));
  if (parts.size() != 3) {
    return std::string("state literal needs three comma-separated fields");
  }
  for (const auto& p : parts) {
    if (p.empty()) {
      return std::string("state literal field is empty");
    }
    if (p == "_") {
      return std::string("wildcard is not a concrete state field");
    }
    if (p.find(',') != std::string::npos) {
      return std::string("state literal has too many fields");
    }
  }
  auto gripper = [](const std::string& p) -> GripperContent {
    if (p == "null" || p == kEmptyMark) {
      return GripperContent{};
    }
    return GripperContent{ObjectId{p}};
  };
  if (parts[0] == "null" || parts[0] == kEmptyMark) {
    return std::string("location field cannot be empty-marked");
  }
  return EmbodimentState{LocationId{parts[0]}, gripper(parts[1]),
                         gripper(parts[2])};
}

}  // namespace skillstate
