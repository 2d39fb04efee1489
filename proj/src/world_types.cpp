#include <algorithm>
#include <array>

#include "hsp/world.hpp"

namespace hsp::world {
namespace {

constexpr std::array<std::string_view, kNumTaskTypes> kTaskNames{"Examine", "Pick", "Clean", "Stack",
                                                                 "PickTwo", "Heat", "Cool"};
constexpr std::array<TaskType, kNumTaskTypes> kTaskTypes{TaskType::Examine, TaskType::Pick,    TaskType::Clean,
                                                         TaskType::Stack,   TaskType::PickTwo, TaskType::Heat,
                                                         TaskType::Cool};
constexpr std::array<std::string_view, 4> kStateNames{"none", "cleaned", "heated", "cooled"};
constexpr std::array<std::string_view, kNumVerbs> kVerbNames{
    "CloseObject", "GotoLocation", "OpenObject", "PickupObject",
    "PutObject",   "SliceObject",  "ToggleObjectOff", "ToggleObjectOn"};
constexpr std::array<std::string_view, 6> kReasonNames{"none",       "not_visible", "incompatible",
                                                       "occupied_hands", "empty_hands", "closed_container"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names, std::string_view text) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view name(TaskType t) { return kTaskNames[static_cast<std::size_t>(t)]; }
std::string_view name(ObjectState s) { return kStateNames[static_cast<std::size_t>(s)]; }
std::string_view name(Verb v) { return kVerbNames[static_cast<std::size_t>(v)]; }
std::string_view name(FailReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

std::string_view name(Temperature t) {
  switch (t) {
    case Temperature::Hot: return "hot";
    case Temperature::Cold: return "cold";
    default: return "none";
  }
}

std::optional<TaskType> parse_task_type(std::string_view text) { return lookup<TaskType>(kTaskNames, text); }
std::optional<ObjectState> parse_object_state(std::string_view text) {
  return lookup<ObjectState>(kStateNames, text);
}
std::optional<Verb> parse_verb(std::string_view text) { return lookup<Verb>(kVerbNames, text); }
std::optional<FailReason> parse_fail_reason(std::string_view text) {
  return lookup<FailReason>(kReasonNames, text);
}

std::span<const TaskType> all_task_types() { return kTaskTypes; }

ObjectState required_state(TaskType t) {
  switch (t) {
    case TaskType::Clean: return ObjectState::Cleaned;
    case TaskType::Heat: return ObjectState::Heated;
    case TaskType::Cool: return ObjectState::Cooled;
    default: return ObjectState::None;
  }
}

std::optional<std::string> validate(const PddlArgs& p) {
  if (!is_pickupable(p.object_target)) return "object_target must be pickupable";
  if (p.two_object != (p.task_type == TaskType::PickTwo)) return "two_object must be set iff task_type is PickTwo";
  if (p.object_state != required_state(p.task_type)) return "object_state does not match task_type";
  if (p.mrecep_target.has_value() != (p.task_type == TaskType::Stack)) {
    return "mrecep_target must be set iff task_type is Stack";
  }
  if (p.mrecep_target && !(is_pickupable(*p.mrecep_target) && is_receptacle(*p.mrecep_target))) {
    return "mrecep_target must be a movable receptacle";
  }
  if (p.task_type == TaskType::Examine) {
    if (p.parent_target) return "Examine has no parent_target";
    if (!p.toggle_target || !is_toggleable(*p.toggle_target)) return "Examine needs a toggleable toggle_target";
  } else {
    if (!p.parent_target) return "parent_target is required";
    if (!is_receptacle(*p.parent_target) || is_pickupable(*p.parent_target)) {
      return "parent_target must be a receptacle fixture";
    }
    if (p.toggle_target) return "toggle_target is only used by Examine";
  }
  if (p.object_sliced && !is_sliceable(p.object_target)) return "object_sliced needs a sliceable object_target";
  return std::nullopt;
}

std::string render(const SubGoal& g) {
  std::string out{name(g.verb)};
  out += ' ';
  out += name(g.arg);
  return out;
}

std::optional<SubGoal> parse_subgoal(std::string_view text) {
  auto space = text.find(' ');
  if (space == std::string_view::npos) return std::nullopt;
  auto verb = parse_verb(text.substr(0, space));
  auto arg = parse_class(text.substr(space + 1));
  if (!verb || !arg) return std::nullopt;
  return SubGoal{*verb, *arg};
}

bool kind_compatible(Verb v, ObjectClass arg) {
  switch (v) {
    case Verb::GotoLocation: return is_fixture(arg);
    case Verb::PickupObject: return is_pickupable(arg);
    case Verb::PutObject: return is_receptacle(arg);
    case Verb::OpenObject:
    case Verb::CloseObject: return is_openable(arg);
    case Verb::ToggleObjectOn:
    case Verb::ToggleObjectOff: return is_toggleable(arg);
    case Verb::SliceObject: return is_sliceable(arg);
  }
  return false;
}

std::string render(const Status& s) {
  if (s.ok()) return "ok";
  return "failed(" + std::string{name(s.reason)} + ")";
}

std::optional<Status> parse_status(std::string_view text) {
  if (text == "ok") return Status::success();
  constexpr std::string_view prefix = "failed(";
  if (text.size() > prefix.size() + 1 && text.substr(0, prefix.size()) == prefix && text.back() == ')') {
    auto reason = parse_fail_reason(text.substr(prefix.size(), text.size() - prefix.size() - 1));
    if (reason && *reason != FailReason::None) return Status::failed(*reason);
  }
  return std::nullopt;
}

}  // namespace hsp::world
