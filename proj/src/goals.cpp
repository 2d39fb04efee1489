#include <algorithm>

#include "hsp/world.hpp"

namespace hsp::world {
namespace {

std::string_view property_word(Property p) {
  switch (p) {
    case Property::Hot: return "hot";
    case Property::Cold: return "cold";
    case Property::Clean: return "clean";
    case Property::Sliced: return "sliced";
  }
  return "";
}

bool has(const ObjectInstance& o, Property p) {
  switch (p) {
    case Property::Hot: return o.temp == Temperature::Hot;
    case Property::Cold: return o.temp == Temperature::Cold;
    case Property::Clean: return o.clean;
    case Property::Sliced: return o.sliced;
  }
  return false;
}

std::optional<Property> state_property(ObjectState s) {
  switch (s) {
    case ObjectState::Cleaned: return Property::Clean;
    case ObjectState::Heated: return Property::Hot;
    case ObjectState::Cooled: return Property::Cold;
    default: return std::nullopt;
  }
}

bool contains(const LatentState& s, int box, ObjectClass c) {
  for (const auto& o : s.objects) {
    if (o.cls == c && o.place == Placement{Placement::Where::Receptacle, box}) return true;
  }
  return false;
}

}  // namespace

std::string GoalPredicate::describe() const {
  std::string out;
  switch (kind) {
    case Kind::HasProperty:
      out = std::string{name(object)} + " is " + std::string{property_word(*property)};
      break;
    case Kind::Held:
      out = std::string{name(object)} + " is held";
      break;
    case Kind::DeviceOn:
      out = std::string{name(object)} + " is on";
      break;
    case Kind::PlacedIn: {
      if (count > 1) out += std::to_string(count) + " ";
      for (auto p : required) {
        out += property_word(p);
        out += ' ';
      }
      out += name(object);
      if (containing) out += " holding " + std::string{name(*containing)};
      out += " in " + std::string{name(*place)};
      if (device_off) out += " with " + std::string{name(*device_off)} + " off";
      break;
    }
  }
  return out;
}

std::vector<GoalPredicate> goal_predicates(const PddlArgs& pddl) {
  using K = GoalPredicate::Kind;
  std::vector<GoalPredicate> out;

  if (pddl.task_type == TaskType::Examine) {
    out.push_back({.kind = K::Held, .object = pddl.object_target});
    out.push_back({.kind = K::DeviceOn, .object = pddl.toggle_target.value_or(ObjectClass::DeskLamp)});
    return out;
  }
  const ObjectClass parent = pddl.parent_target.value_or(ObjectClass::CounterTop);

  if (pddl.task_type == TaskType::PickTwo) {
    out.push_back({.kind = K::PlacedIn, .object = pddl.object_target, .place = parent, .count = 1});
    out.push_back({.kind = K::PlacedIn, .object = pddl.object_target, .place = parent, .count = 2});
    return out;
  }
  if (pddl.task_type == TaskType::Stack) {
    const ObjectClass carrier = pddl.mrecep_target.value_or(ObjectClass::Plate);
    out.push_back({.kind = K::PlacedIn, .object = pddl.object_target, .place = carrier});
    out.push_back({.kind = K::PlacedIn, .object = carrier, .place = parent, .containing = pddl.object_target});
    return out;
  }

  // Pick / Clean / Heat / Cool: one property predicate per required property,
  // then the joint placement of an instance carrying all of them.
  GoalPredicate placed{.kind = K::PlacedIn, .object = pddl.object_target, .place = parent};
  if (auto prop = state_property(pddl.object_state)) {
    out.push_back({.kind = K::HasProperty, .object = pddl.object_target, .property = *prop});
    placed.required.push_back(*prop);
  }
  if (pddl.object_sliced) {
    out.push_back({.kind = K::HasProperty, .object = pddl.object_target, .property = Property::Sliced});
    placed.required.push_back(Property::Sliced);
  }
  // A washed object only counts once the water is off again.
  if (pddl.task_type == TaskType::Clean) placed.device_off = ObjectClass::Faucet;
  out.push_back(placed);
  return out;
}

bool holds(const GoalPredicate& p, const LatentState& s) {
  using K = GoalPredicate::Kind;
  switch (p.kind) {
    case K::HasProperty:
      return std::any_of(s.objects.begin(), s.objects.end(),
                         [&](const ObjectInstance& o) { return o.cls == p.object && has(o, *p.property); });
    case K::Held:
      return s.inventory && s.objects[*s.inventory].cls == p.object;
    case K::DeviceOn:
      return std::any_of(s.objects.begin(), s.objects.end(),
                         [&](const ObjectInstance& o) { return o.cls == p.object && o.is_on; });
    case K::PlacedIn: {
      if (p.device_off) {
        for (const auto& o : s.objects) {
          if (o.cls == *p.device_off && o.is_on) return false;
        }
      }
      auto count_in_place = [&](bool with_props) {
        int matches = 0;
        for (std::size_t i = 0; i < s.objects.size(); ++i) {
          const auto& o = s.objects[i];
          if (o.cls != p.object || s.container_class(static_cast<int>(i)) != p.place) continue;
          if (with_props && !std::all_of(p.required.begin(), p.required.end(), [&](Property q) { return has(o, q); }))
            continue;
          if (p.containing && !contains(s, static_cast<int>(i), *p.containing)) continue;
          ++matches;
        }
        return matches;
      };
      if (count_in_place(true) >= p.count) return true;
      // Placement alone earns partial credit while no instance carries the
      // required properties yet; once one does, only that kind counts.
      if (p.required.empty()) return false;
      const bool any_ready = std::any_of(s.objects.begin(), s.objects.end(), [&](const ObjectInstance& o) {
        return o.cls == p.object &&
               std::all_of(p.required.begin(), p.required.end(), [&](Property q) { return has(o, q); });
      });
      return !any_ready && count_in_place(false) >= p.count;
    }
  }
  return false;
}

Outcome evaluate(const PddlArgs& pddl, const LatentState& state) {
  const auto preds = goal_predicates(pddl);
  Outcome out;
  out.total = static_cast<int>(preds.size());
  for (const auto& p : preds) {
    if (holds(p, state)) out.satisfied.push_back(p.describe());
  }
  out.satisfied_count = static_cast<int>(out.satisfied.size());
  out.gc = static_cast<double>(out.satisfied_count) / static_cast<double>(out.total);
  out.success = out.satisfied_count == out.total;
  return out;
}

}  // namespace hsp::world
