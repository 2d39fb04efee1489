#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hsp/vocabulary.hpp"

namespace hsp::world {

// ---------------------------------------------------------------------------
// Task description
// ---------------------------------------------------------------------------

/// The seven task families. Declaration order is the type index used for seeds.
enum class TaskType : std::uint8_t { Examine, Pick, Clean, Stack, PickTwo, Heat, Cool };
inline constexpr std::size_t kNumTaskTypes = 7;

enum class ObjectState : std::uint8_t { None, Cleaned, Heated, Cooled };

std::string_view name(TaskType t);
std::string_view name(ObjectState s);
std::optional<TaskType> parse_task_type(std::string_view text);
std::optional<ObjectState> parse_object_state(std::string_view text);
std::span<const TaskType> all_task_types();
ObjectState required_state(TaskType t);

/// Latent task arguments; doubles as the goal specification.
struct PddlArgs {
  TaskType task_type = TaskType::Pick;
  ObjectClass object_target = ObjectClass::Apple;
  /// Empty only for Examine, whose goal has no destination.
  std::optional<ObjectClass> parent_target;
  std::optional<ObjectClass> mrecep_target;
  std::optional<ObjectClass> toggle_target;
  ObjectState object_state = ObjectState::None;
  bool object_sliced = false;
  bool two_object = false;

  bool operator==(const PddlArgs&) const = default;
};

/// Empty when the arguments satisfy every structural invariant, otherwise a
/// description of the first violation.
std::optional<std::string> validate(const PddlArgs& pddl);

struct TaskSpec {
  PddlArgs pddl;
  std::string instruction;
  std::uint64_t scene_seed = 0;

  bool operator==(const TaskSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Actions and statuses
// ---------------------------------------------------------------------------

/// Verbs are declared in lexicographic order of their names.
enum class Verb : std::uint8_t {
  CloseObject,
  GotoLocation,
  OpenObject,
  PickupObject,
  PutObject,
  SliceObject,
  ToggleObjectOff,
  ToggleObjectOn,
};
inline constexpr std::size_t kNumVerbs = 8;

std::string_view name(Verb v);
std::optional<Verb> parse_verb(std::string_view text);

/// A high-level action. GotoLocation targets a landmark (fixture) class; a
/// scene holds at most one fixture per class, so the class names a location.
struct SubGoal {
  Verb verb = Verb::GotoLocation;
  ObjectClass arg = ObjectClass::CounterTop;

  auto operator<=>(const SubGoal&) const = default;
};

/// "PickupObject Pan".
std::string render(const SubGoal& g);
std::optional<SubGoal> parse_subgoal(std::string_view text);
/// Verb/argument kind compatibility.
bool kind_compatible(Verb v, ObjectClass arg);

enum class FailReason : std::uint8_t { None, NotVisible, Incompatible, OccupiedHands, EmptyHands, ClosedContainer };

std::string_view name(FailReason r);
std::optional<FailReason> parse_fail_reason(std::string_view text);

struct Status {
  FailReason reason = FailReason::None;

  bool ok() const { return reason == FailReason::None; }
  bool operator==(const Status&) const = default;
  static Status success() { return {}; }
  static Status failed(FailReason r) { return {r}; }
};

/// "ok" or "failed(occupied_hands)".
std::string render(const Status& s);
std::optional<Status> parse_status(std::string_view text);

// ---------------------------------------------------------------------------
// Latent state
// ---------------------------------------------------------------------------

enum class Temperature : std::uint8_t { None, Hot, Cold };
std::string_view name(Temperature t);

/// Where an object is: on the floor plan at a location (fixtures only), inside
/// another object, or in the agent's hand.
struct Placement {
  enum class Where : std::uint8_t { Location, Receptacle, Inventory };
  Where where = Where::Location;
  int index = 0;  // location index or object index; unused for Inventory

  bool operator==(const Placement&) const = default;
};

struct ObjectInstance {
  std::string id;  // "Apple_0"
  ObjectClass cls = ObjectClass::Apple;
  Placement place;
  Temperature temp = Temperature::None;
  bool clean = false;
  bool sliced = false;
  bool is_open = true;  // non-openable receptacles always report open
  bool is_on = false;
  int moved_at = -1;  // clock of the last pickup/put, -1 if never moved

  bool operator==(const ObjectInstance&) const = default;
};

struct LatentState {
  std::vector<std::string> locations;     // location ids, "loc0".."locN"
  std::vector<ObjectInstance> objects;    // sorted by id
  int agent_location = 0;
  std::optional<int> inventory;           // object index
  int clock = 0;
  std::vector<bool> visited;              // per location

  bool operator==(const LatentState&) const = default;

  int location_of(int object) const;     // top-level location of an object
  bool reachable(int object) const;      // every enclosing container is open
  bool held(int object) const { return inventory && *inventory == object; }
  /// Immediate container class, if the object sits inside a receptacle.
  std::optional<ObjectClass> container_class(int object) const;
  /// Index of the (unique) fixture of a class, or -1.
  int fixture(ObjectClass c) const;
  std::vector<int> instances(ObjectClass c) const;
  /// Fixture classes present in the scene, sorted.
  std::vector<ObjectClass> landmarks() const;
};

struct Observation {
  std::vector<ObjectClass> visible_classes;  // sorted, duplicate-free
  Status last_status;
  int step = 0;

  bool operator==(const Observation&) const = default;
};

/// Visible classes given a set of visited locations (indexed like
/// state.locations): fixtures and reachable objects at visited locations, plus
/// the held object and its contents.
Observation observe(const LatentState& state, const std::vector<bool>& visited);
inline Observation observe(const LatentState& state) { return observe(state, state.visited); }
/// Union of two observations; the result carries `next`'s status and step.
Observation merge(const Observation& seen, const Observation& next);

struct StepResult {
  LatentState state;
  Status status;
};

/// Deterministic transition. Never throws; illegal sub-goals come back as a
/// failed status with the state unchanged except for the clock.
StepResult apply_subgoal(const LatentState& state, const SubGoal& g);
/// In-place variant of apply_subgoal.
Status step(LatentState& state, const SubGoal& g);

/// Syntactically legal sub-goals given the visible classes: GotoLocation for
/// every landmark in the scene, plus every kind-compatible interaction with a
/// visible class. Sorted by (verb, arg).
std::vector<SubGoal> legal_subgoals(const LatentState& state, const Observation& obs);

// ---------------------------------------------------------------------------
// Goals and evaluation
// ---------------------------------------------------------------------------

enum class Property : std::uint8_t { Hot, Cold, Clean, Sliced };

/// Atomic goal predicate.
struct GoalPredicate {
  enum class Kind : std::uint8_t { HasProperty, PlacedIn, Held, DeviceOn };
  Kind kind = Kind::PlacedIn;
  ObjectClass object = ObjectClass::Apple;
  std::optional<Property> property;         // HasProperty
  std::vector<Property> required;           // PlacedIn: properties of the placed instance
  std::optional<ObjectClass> place;         // PlacedIn
  std::optional<ObjectClass> containing;    // PlacedIn: placed instance must hold one of these
  std::optional<ObjectClass> device_off;    // PlacedIn: this device must be off
  int count = 1;                            // PlacedIn: distinct instances required

  bool operator==(const GoalPredicate&) const = default;
  std::string describe() const;
};

std::vector<GoalPredicate> goal_predicates(const PddlArgs& pddl);
inline std::vector<GoalPredicate> goal_predicates(const TaskSpec& spec) { return goal_predicates(spec.pddl); }
bool holds(const GoalPredicate& p, const LatentState& state);

struct Outcome {
  bool success = false;
  double gc = 0.0;
  int satisfied_count = 0;
  int total = 1;
  std::vector<std::string> satisfied;

  bool operator==(const Outcome&) const = default;
};

Outcome evaluate(const PddlArgs& pddl, const LatentState& state);
inline Outcome evaluate(const TaskSpec& spec, const LatentState& state) { return evaluate(spec.pddl, state); }

// ---------------------------------------------------------------------------
// Scenes and the scripted expert
// ---------------------------------------------------------------------------

struct Scene {
  TaskSpec task;
  LatentState state;
};

/// Builds a solvable scene for (seed, type). Pure function of its inputs.
Scene generate_task(std::uint64_t seed, TaskType type);

struct ExpertOptions {
  /// Put down wrong held objects and switch off stray devices before resuming
  /// the task. Without it the expert follows the task template only.
  bool recover = true;
  int max_steps = 64;
};

/// Next expert sub-goal from the given state, or nothing once the goal holds.
std::optional<SubGoal> expert_next(const PddlArgs& pddl, const LatentState& state, const ExpertOptions& opts = {});
/// Full expert plan from the given state.
std::vector<SubGoal> expert_plan(const PddlArgs& pddl, const LatentState& state, const ExpertOptions& opts = {});
inline std::vector<SubGoal> expert_rollout(const TaskSpec& spec, const LatentState& state) {
  return expert_plan(spec.pddl, state);
}

/// Replays sub-goals from a state and returns the terminal state.
LatentState replay(const LatentState& start, const std::vector<SubGoal>& plan);

}  // namespace hsp::world
