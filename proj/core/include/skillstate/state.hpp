#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "skillstate/result.hpp"

namespace skillstate {

/// Opaque identifier for a place the robot base can occupy.
struct LocationId {
  std::string name;
  auto operator<=>(const LocationId&) const = default;
};

/// Opaque identifier for a manipulable object.
struct ObjectId {
  std::string name;
  auto operator<=>(const ObjectId&) const = default;
};

/// Contents of one gripper: nullopt when empty, otherwise the held object.
using GripperContent = std::optional<ObjectId>;

enum class GripperSlot : std::uint8_t { Left, Right };

/// The robot-centric state tuple: base location plus both gripper contents.
/// All slots are always concrete; patterns live in Precondition.
struct EmbodimentState {
  LocationId location;
  GripperContent left;
  GripperContent right;
  auto operator<=>(const EmbodimentState&) const = default;
};

/// Pattern over the location slot: wildcard or one exact location.
struct LocationPattern {
  std::optional<LocationId> exact;  // nullopt = wildcard

  static LocationPattern wildcard() { return {}; }
  static LocationPattern at(LocationId l) { return {std::move(l)}; }

  bool is_wildcard() const { return !exact.has_value(); }
  bool matches(const LocationId& l) const { return !exact || *exact == l; }
  auto operator<=>(const LocationPattern&) const = default;
};

/// Pattern over a gripper slot: wildcard, exactly empty, or exactly holding
/// a named object. Wildcard matches empty as well as any held object.
class GripperPattern {
 public:
  static GripperPattern wildcard() { return GripperPattern{std::nullopt}; }
  static GripperPattern empty() {
    return GripperPattern{std::optional<GripperContent>{GripperContent{}}};
  }
  static GripperPattern holding(ObjectId o) {
    return GripperPattern{std::optional<GripperContent>{GripperContent{std::move(o)}}};
  }

  bool is_wildcard() const { return !want_.has_value(); }
  bool requires_empty() const { return want_.has_value() && !want_->has_value(); }
  /// Non-null iff the pattern is exactly-holding.
  const ObjectId* required_object() const {
    return want_.has_value() && want_->has_value() ? &**want_ : nullptr;
  }

  bool matches(const GripperContent& content) const {
    return !want_.has_value() || *want_ == content;
  }

  auto operator<=>(const GripperPattern&) const = default;

 private:
  explicit GripperPattern(std::optional<GripperContent> want)
      : want_(std::move(want)) {}

  // outer nullopt = wildcard; inner nullopt = exactly empty
  std::optional<GripperContent> want_;
};

/// Pattern over a full EmbodimentState.
struct Precondition {
  LocationPattern location;
  GripperPattern left = GripperPattern::wildcard();
  GripperPattern right = GripperPattern::wildcard();

  /// The pattern that matches every state.
  static Precondition any() {
    return {LocationPattern::wildcard(), GripperPattern::wildcard(),
            GripperPattern::wildcard()};
  }

  auto operator<=>(const Precondition&) const = default;
};

/// True iff every slot of `pre` matches the corresponding slot of `state`.
/// Total: never fails.
bool matches(const EmbodimentState& state, const Precondition& pre);

/// Base displacement between two distinct locations.
struct MoveOp {
  LocationId from;
  LocationId to;
  auto operator<=>(const MoveOp&) const = default;
};

/// Scene transformation: nullopt = no displacement.
using SceneOp = std::optional<MoveOp>;

/// Gripper transformation: add an object to an empty gripper, remove a
/// named held object, or leave the slot unchanged.
struct GripperOp {
  enum class Kind : std::uint8_t { None, Add, Sub };

  Kind kind = Kind::None;
  ObjectId object;  // meaningful for Add/Sub only

  static GripperOp none() { return {}; }
  static GripperOp add(ObjectId o) { return {Kind::Add, std::move(o)}; }
  static GripperOp sub(ObjectId o) { return {Kind::Sub, std::move(o)}; }

  bool is_none() const { return kind == Kind::None; }
  auto operator<=>(const GripperOp&) const = default;
};

/// State variation induced by executing one skill.
struct StateDelta {
  SceneOp scene;
  GripperOp left;
  GripperOp right;

  bool is_identity() const {
    return !scene.has_value() && left.is_none() && right.is_none();
  }
  auto operator<=>(const StateDelta&) const = default;
};

enum class StateSlot : std::uint8_t { Location, Left, Right };

/// Why a delta could not be applied to a state.
struct DeltaError {
  enum class Code : std::uint8_t {
    MoveFromMismatch,
    AddOnOccupied,
    SubOnWrongObject,
    SubOnEmpty,
  };

  Code code;
  StateSlot slot;
  auto operator<=>(const DeltaError&) const = default;
};

/// Applies `delta` to `state`. Pure: identical inputs give identical
/// outputs. Fails with a typed error when an applicability rule is
/// violated (move from the wrong location, add onto an occupied gripper,
/// sub of an absent object).
Result<EmbodimentState, DeltaError> apply_delta(const EmbodimentState& state,
                                                const StateDelta& delta);

/// The weakest pattern P such that matches(S, P) iff apply_delta(S, delta)
/// succeeds, for every state S.
Precondition implied_precondition(const StateDelta& delta);

std::string_view to_string(StateSlot slot);
std::string_view to_string(DeltaError::Code code);

/// Human-readable literals. States print as "(pantry, bowl, ∅)",
/// preconditions as "(pantry, ∅, _)". Structured files use `null`
/// where these use the empty-set mark.
std::string to_literal(const EmbodimentState& state);
std::string to_literal(const Precondition& pre);
std::string to_literal(const StateDelta& delta);

/// Parses a concrete state literal "(loc,left,right)". Gripper tokens:
/// `null` or the empty-set mark for empty, otherwise an object name.
/// Wildcards are rejected (states are always concrete).
Result<EmbodimentState, std::string> parse_state_literal(std::string_view text);

}  // namespace skillstate
