#include <algorithm>
#include <set>

#include "hsp/world.hpp"

namespace hsp::world {

int LatentState::location_of(int object) const {
  int cur = object;
  // Containment chains are short (fixture -> carrier -> item); bound the walk anyway.
  for (std::size_t guard = 0; guard <= objects.size(); ++guard) {
    const auto& place = objects[cur].place;
    switch (place.where) {
      case Placement::Where::Location: return place.index;
      case Placement::Where::Inventory: return agent_location;
      case Placement::Where::Receptacle: cur = place.index; break;
    }
  }
  return -1;
}

bool LatentState::reachable(int object) const {
  int cur = object;
  for (std::size_t guard = 0; guard <= objects.size(); ++guard) {
    const auto& place = objects[cur].place;
    if (place.where != Placement::Where::Receptacle) return true;
    cur = place.index;
    if (!objects[cur].is_open) return false;
  }
  return false;
}

std::optional<ObjectClass> LatentState::container_class(int object) const {
  const auto& place = objects[object].place;
  if (place.where != Placement::Where::Receptacle) return std::nullopt;
  return objects[place.index].cls;
}

int LatentState::fixture(ObjectClass c) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].cls == c && objects[i].place.where == Placement::Where::Location) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> LatentState::instances(ObjectClass c) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].cls == c) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<ObjectClass> LatentState::landmarks() const {
  std::vector<ObjectClass> out;
  for (const auto& o : objects) {
    if (is_fixture(o.cls)) out.push_back(o.cls);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Observation observe(const LatentState& state, const std::vector<bool>& visited) {
  std::set<ObjectClass> seen;
  for (std::size_t i = 0; i < state.objects.size(); ++i) {
    const int idx = static_cast<int>(i);
    bool in_hand = false;
    for (int cur = idx;;) {
      const auto& place = state.objects[cur].place;
      if (place.where == Placement::Where::Inventory) {
        in_hand = true;
        break;
      }
      if (place.where != Placement::Where::Receptacle) break;
      cur = place.index;
    }
    if (in_hand) {
      seen.insert(state.objects[i].cls);
      continue;
    }
    const int loc = state.location_of(idx);
    if (loc >= 0 && static_cast<std::size_t>(loc) < visited.size() && visited[loc] && state.reachable(idx)) {
      seen.insert(state.objects[i].cls);
    }
  }
  Observation obs;
  obs.visible_classes.assign(seen.begin(), seen.end());
  obs.step = state.clock;
  return obs;
}

Observation merge(const Observation& seen, const Observation& next) {
  Observation out;
  std::set_union(seen.visible_classes.begin(), seen.visible_classes.end(), next.visible_classes.begin(),
                 next.visible_classes.end(), std::back_inserter(out.visible_classes));
  out.last_status = next.last_status;
  out.step = next.step;
  return out;
}

namespace {

constexpr int kNone = -1;

struct Lookup {
  int reachable = kNone;  // best reachable instance at the agent's location
  bool present = false;   // some instance is at the location (possibly enclosed)
};

// Instances at the agent's location, excluding the held object. Among
// reachable ones the least recently moved wins, then the lowest id.
Lookup find_here(const LatentState& s, ObjectClass c) {
  Lookup out;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const int idx = static_cast<int>(i);
    const auto& o = s.objects[i];
    if (o.cls != c || s.held(idx)) continue;
    bool inside_hand = false;
    for (int cur = idx; s.objects[cur].place.where == Placement::Where::Receptacle;) {
      cur = s.objects[cur].place.index;
      if (s.held(cur)) inside_hand = true;
    }
    if (inside_hand || s.location_of(idx) != s.agent_location) continue;
    out.present = true;
    if (!s.reachable(idx)) continue;
    if (out.reachable == kNone || o.moved_at < s.objects[out.reachable].moved_at) out.reachable = idx;
  }
  return out;
}

void apply_derived_rules(LatentState& s) {
  bool faucet_on = false;
  for (const auto& o : s.objects) {
    if (o.cls == ObjectClass::Faucet && o.is_on) faucet_on = true;
  }
  for (auto& o : s.objects) {
    if (o.place.where != Placement::Where::Receptacle) continue;
    const auto& box = s.objects[o.place.index];
    if (box.cls == ObjectClass::Sink && faucet_on) o.clean = true;
    if (box.cls == ObjectClass::Microwave && box.is_on) o.temp = Temperature::Hot;
    if (box.cls == ObjectClass::Fridge && !box.is_open) o.temp = Temperature::Cold;
  }
}

Status transition(LatentState& s, const SubGoal& g) {
  if (!kind_compatible(g.verb, g.arg)) return Status::failed(FailReason::Incompatible);

  switch (g.verb) {
    case Verb::GotoLocation: {
      const int f = s.fixture(g.arg);
      if (f == kNone) return Status::failed(FailReason::NotVisible);
      s.agent_location = s.objects[f].place.index;
      s.visited[s.agent_location] = true;
      return Status::success();
    }
    case Verb::PickupObject: {
      if (s.inventory) return Status::failed(FailReason::OccupiedHands);
      auto hit = find_here(s, g.arg);
      if (hit.reachable == kNone) {
        return Status::failed(hit.present ? FailReason::ClosedContainer : FailReason::NotVisible);
      }
      s.objects[hit.reachable].place = {Placement::Where::Inventory, 0};
      s.objects[hit.reachable].moved_at = s.clock;
      s.inventory = hit.reachable;
      return Status::success();
    }
    case Verb::PutObject: {
      if (!s.inventory) return Status::failed(FailReason::EmptyHands);
      auto hit = find_here(s, g.arg);
      if (hit.reachable == kNone) {
        return Status::failed(hit.present ? FailReason::ClosedContainer : FailReason::NotVisible);
      }
      auto& box = s.objects[hit.reachable];
      if (!box.is_open) return Status::failed(FailReason::ClosedContainer);
      auto& item = s.objects[*s.inventory];
      item.place = {Placement::Where::Receptacle, hit.reachable};
      item.moved_at = s.clock;
      s.inventory.reset();
      return Status::success();
    }
    case Verb::OpenObject:
    case Verb::CloseObject: {
      auto hit = find_here(s, g.arg);
      if (hit.reachable == kNone) return Status::failed(FailReason::NotVisible);
      auto& box = s.objects[hit.reachable];
      // A running microwave keeps its door locked.
      if (g.verb == Verb::OpenObject && box.is_on) return Status::failed(FailReason::Incompatible);
      box.is_open = g.verb == Verb::OpenObject;
      return Status::success();
    }
    case Verb::ToggleObjectOn:
    case Verb::ToggleObjectOff: {
      auto hit = find_here(s, g.arg);
      if (hit.reachable == kNone) return Status::failed(FailReason::NotVisible);
      auto& dev = s.objects[hit.reachable];
      const bool on = g.verb == Verb::ToggleObjectOn;
      if (on && is_openable(dev.cls) && dev.is_open) return Status::failed(FailReason::Incompatible);
      dev.is_on = on;
      return Status::success();
    }
    case Verb::SliceObject: {
      if (!s.inventory) return Status::failed(FailReason::EmptyHands);
      if (s.objects[*s.inventory].cls != ObjectClass::Knife) return Status::failed(FailReason::Incompatible);
      auto hit = find_here(s, g.arg);
      if (hit.reachable == kNone) {
        return Status::failed(hit.present ? FailReason::ClosedContainer : FailReason::NotVisible);
      }
      s.objects[hit.reachable].sliced = true;
      return Status::success();
    }
  }
  return Status::failed(FailReason::Incompatible);
}

}  // namespace

Status step(LatentState& state, const SubGoal& g) {
  Status status = transition(state, g);
  apply_derived_rules(state);
  ++state.clock;
  return status;
}

StepResult apply_subgoal(const LatentState& state, const SubGoal& g) {
  StepResult out{state, {}};
  out.status = step(out.state, g);
  return out;
}

LatentState replay(const LatentState& start, const std::vector<SubGoal>& plan) {
  LatentState s = start;
  for (const auto& g : plan) step(s, g);
  return s;
}

std::vector<SubGoal> legal_subgoals(const LatentState& state, const Observation& obs) {
  std::set<SubGoal> out;
  for (auto c : state.landmarks()) out.insert({Verb::GotoLocation, c});
  for (auto c : obs.visible_classes) {
    for (std::size_t v = 0; v < kNumVerbs; ++v) {
      const auto verb = static_cast<Verb>(v);
      if (verb != Verb::GotoLocation && kind_compatible(verb, c)) out.insert({verb, c});
    }
  }
  return {out.begin(), out.end()};
}

}  // namespace hsp::world
