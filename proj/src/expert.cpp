#include <algorithm>

#include "hsp/world.hpp"

namespace hsp::world {
namespace {

using C = ObjectClass;
using W = Placement::Where;

struct Ctx {
  const PddlArgs& pddl;
  const LatentState& s;
  const ExpertOptions& opts;
};

SubGoal sg(Verb v, C c) { return {v, c}; }

/// Outermost fixture enclosing an object (or the fixture itself).
int top_fixture(const LatentState& s, int idx) {
  int cur = idx;
  while (s.objects[cur].place.where == W::Receptacle) cur = s.objects[cur].place.index;
  return cur;
}

/// Outermost closed container between the object and the floor, or -1.
int closed_enclosure(const LatentState& s, int idx) {
  int found = -1;
  for (int cur = idx; s.objects[cur].place.where == W::Receptacle;) {
    cur = s.objects[cur].place.index;
    if (!s.objects[cur].is_open) found = cur;
  }
  return found;
}

bool in(const LatentState& s, int idx, C container) { return s.container_class(idx) == container; }

std::optional<SubGoal> goto_object(const LatentState& s, int idx) {
  if (s.location_of(idx) == s.agent_location) return std::nullopt;
  const int top = top_fixture(s, idx);
  if (s.objects[top].place.where == W::Inventory) return std::nullopt;
  return sg(Verb::GotoLocation, s.objects[top].cls);
}

std::optional<SubGoal> goto_fixture(const LatentState& s, C cls) {
  const int f = s.fixture(cls);
  if (f < 0 || s.objects[f].place.index == s.agent_location) return std::nullopt;
  return sg(Verb::GotoLocation, cls);
}

/// Where to drop an unwanted object at the current location: an open plain
/// receptacle if possible (never an appliance or the goal destination),
/// otherwise a closed one that must be opened first.
SubGoal put_down_here(const Ctx& c) {
  const auto& s = c.s;
  std::optional<C> plain, closed, any;
  for (const auto& o : s.objects) {
    if (o.place.where != W::Location || o.place.index != s.agent_location || !is_receptacle(o.cls)) continue;
    if (!any || o.cls < *any) any = o.cls;
    const bool appliance = o.cls == C::Microwave || o.cls == C::Fridge || o.cls == C::Sink;
    if (appliance || o.cls == c.pddl.parent_target) continue;
    if (o.is_open && (!plain || o.cls < *plain)) plain = o.cls;
    if (!o.is_open && (!closed || o.cls < *closed)) closed = o.cls;
  }
  if (plain) return sg(Verb::PutObject, *plain);
  if (closed) return sg(Verb::OpenObject, *closed);
  const int f = s.fixture(*any);
  if (!s.objects[f].is_open) return sg(Verb::OpenObject, *any);
  return sg(Verb::PutObject, *any);
}

/// Next action towards holding object `idx`.
std::optional<SubGoal> fetch(const Ctx& c, int idx) {
  const auto& s = c.s;
  if (s.held(idx)) return std::nullopt;
  if (s.inventory) {
    if (c.opts.recover || s.objects[*s.inventory].cls == C::Knife) return put_down_here(c);
    return sg(Verb::PickupObject, s.objects[idx].cls);
  }
  if (auto g = goto_object(s, idx)) return g;
  if (const int box = closed_enclosure(s, idx); box >= 0) return sg(Verb::OpenObject, s.objects[box].cls);
  return sg(Verb::PickupObject, s.objects[idx].cls);
}

/// Next action towards putting the held object into fixture `cls`.
SubGoal place_into(const Ctx& c, C cls) {
  if (auto g = goto_fixture(c.s, cls)) return *g;
  const int f = c.s.fixture(cls);
  if (!c.s.objects[f].is_open) return sg(Verb::OpenObject, cls);
  return sg(Verb::PutObject, cls);
}

bool has_state(const ObjectInstance& o, ObjectState st) {
  switch (st) {
    case ObjectState::Heated: return o.temp == Temperature::Hot;
    case ObjectState::Cooled: return o.temp == Temperature::Cold;
    case ObjectState::Cleaned: return o.clean;
    case ObjectState::None: return true;
  }
  return true;
}

/// The instance of the target class the expert works on: the held one, then
/// the most advanced, then one at the agent's location, then the lowest id.
/// `skip_placed` drops instances already in the destination (PickTwo).
int choose_target(const Ctx& c, bool skip_placed) {
  const auto& s = c.s;
  int best = -1;
  auto rank = [&](int i) {
    const auto& o = s.objects[i];
    int r = 0;
    if (s.held(i)) r += 100;
    if (has_state(o, c.pddl.object_state) && c.pddl.object_state != ObjectState::None) r += 10;
    if (o.sliced && c.pddl.object_sliced) r += 10;
    if (s.location_of(i) == s.agent_location) r += 1;
    return r;
  };
  for (int i : s.instances(c.pddl.object_target)) {
    if (skip_placed && c.pddl.parent_target && in(s, i, *c.pddl.parent_target)) continue;
    if (best < 0 || rank(i) > rank(best)) best = i;
  }
  return best;
}

/// Switches off a running faucet or microwave.
std::optional<SubGoal> stray_device(const Ctx& c) {
  for (C dev : {C::Faucet, C::Microwave}) {
    const int f = c.s.fixture(dev);
    if (f < 0 || !c.s.objects[f].is_on) continue;
    if (auto g = goto_fixture(c.s, dev)) return g;
    return sg(Verb::ToggleObjectOff, dev);
  }
  return std::nullopt;
}

/// Slicing detour: fetch the knife, slice the target where it lies, then put
/// the knife down.
std::optional<SubGoal> slice_step(const Ctx& c, int target) {
  const auto& s = c.s;
  const bool holding_knife = s.inventory && s.objects[*s.inventory].cls == C::Knife;
  if (s.objects[target].sliced) {
    if (holding_knife) return put_down_here(c);
    return std::nullopt;
  }
  if (!holding_knife) {
    if (s.held(target)) return put_down_here(c);
    const auto knives = s.instances(C::Knife);
    if (knives.empty()) return std::nullopt;
    return fetch(c, knives.front());
  }
  if (auto g = goto_object(s, target)) return g;
  if (const int box = closed_enclosure(s, target); box >= 0) return sg(Verb::OpenObject, s.objects[box].cls);
  return sg(Verb::SliceObject, s.objects[target].cls);
}

std::optional<SubGoal> heat(const Ctx& c, int t) {
  const auto& s = c.s;
  const int mw = s.fixture(C::Microwave);
  const auto& oven = s.objects[mw];
  if (s.objects[t].temp == Temperature::Hot) {
    if (in(s, t, C::Microwave)) {
      if (auto g = goto_fixture(s, C::Microwave)) return g;
      if (oven.is_on) return sg(Verb::ToggleObjectOff, C::Microwave);
      if (!oven.is_open) return sg(Verb::OpenObject, C::Microwave);
    }
    if (auto g = fetch(c, t)) return g;
    return place_into(c, *c.pddl.parent_target);
  }
  if (in(s, t, C::Microwave)) {
    if (auto g = goto_fixture(s, C::Microwave)) return g;
    if (oven.is_open) return sg(Verb::CloseObject, C::Microwave);
    return sg(Verb::ToggleObjectOn, C::Microwave);
  }
  if (auto g = fetch(c, t)) return g;
  return place_into(c, C::Microwave);
}

std::optional<SubGoal> cool(const Ctx& c, int t) {
  const auto& s = c.s;
  const auto& fridge = s.objects[s.fixture(C::Fridge)];
  if (s.objects[t].temp == Temperature::Cold) {
    if (in(s, t, C::Fridge)) {
      if (auto g = goto_fixture(s, C::Fridge)) return g;
      if (!fridge.is_open) return sg(Verb::OpenObject, C::Fridge);
    }
    if (auto g = fetch(c, t)) return g;
    return place_into(c, *c.pddl.parent_target);
  }
  if (in(s, t, C::Fridge)) {
    if (auto g = goto_fixture(s, C::Fridge)) return g;
    return sg(Verb::CloseObject, C::Fridge);
  }
  if (auto g = fetch(c, t)) return g;
  return place_into(c, C::Fridge);
}

std::optional<SubGoal> clean(const Ctx& c, int t) {
  const auto& s = c.s;
  const int faucet = s.fixture(C::Faucet);
  if (s.objects[t].clean) {
    if (s.objects[faucet].is_on) {
      if (auto g = goto_fixture(s, C::Faucet)) return g;
      return sg(Verb::ToggleObjectOff, C::Faucet);
    }
    if (auto g = fetch(c, t)) return g;
    return place_into(c, *c.pddl.parent_target);
  }
  if (in(s, t, C::Sink)) {
    if (auto g = goto_fixture(s, C::Faucet)) return g;
    return sg(Verb::ToggleObjectOn, C::Faucet);
  }
  if (auto g = fetch(c, t)) return g;
  return place_into(c, C::Sink);
}

std::optional<SubGoal> examine(const Ctx& c, int t) {
  if (auto g = fetch(c, t)) return g;
  if (auto g = goto_fixture(c.s, C::DeskLamp)) return g;
  return sg(Verb::ToggleObjectOn, *c.pddl.toggle_target);
}

std::optional<SubGoal> stack(const Ctx& c) {
  const auto& s = c.s;
  const C carrier_cls = *c.pddl.mrecep_target;
  const auto carriers = s.instances(carrier_cls);
  if (carriers.empty()) return std::nullopt;
  // Carrier already loaded with the object, if any.
  int loaded = -1;
  for (int k : carriers) {
    for (int i : s.instances(c.pddl.object_target)) {
      if (s.objects[i].place == Placement{W::Receptacle, k}) loaded = k;
    }
  }
  if (loaded < 0) {
    if (s.inventory && s.objects[*s.inventory].cls == carrier_cls) return put_down_here(c);
    const int t = choose_target(c, false);
    if (t < 0) return std::nullopt;
    if (auto g = fetch(c, t)) return g;
    const int carrier = carriers.front();
    if (auto g = goto_object(s, carrier)) return g;
    if (const int box = closed_enclosure(s, carrier); box >= 0) return sg(Verb::OpenObject, s.objects[box].cls);
    return sg(Verb::PutObject, carrier_cls);
  }
  if (auto g = fetch(c, loaded)) return g;
  return place_into(c, *c.pddl.parent_target);
}

std::optional<SubGoal> next(const Ctx& c) {
  if (evaluate(c.pddl, c.s).success) return std::nullopt;
  if (c.opts.recover) {
    if (auto g = stray_device(c)) return g;
  }
  if (c.pddl.task_type == TaskType::Stack) return stack(c);

  const int t = choose_target(c, c.pddl.task_type == TaskType::PickTwo);
  if (t < 0) return std::nullopt;
  if (c.pddl.object_sliced) {
    if (auto g = slice_step(c, t)) return g;
  }
  switch (c.pddl.task_type) {
    case TaskType::Examine: return examine(c, t);
    case TaskType::Heat: return heat(c, t);
    case TaskType::Cool: return cool(c, t);
    case TaskType::Clean: return clean(c, t);
    default: break;
  }
  if (auto g = fetch(c, t)) return g;
  return place_into(c, *c.pddl.parent_target);
}

}  // namespace

std::optional<SubGoal> expert_next(const PddlArgs& pddl, const LatentState& state, const ExpertOptions& opts) {
  if (validate(pddl)) return std::nullopt;
  // The expert needs every fixture its template visits.
  for (auto needed : {pddl.parent_target, pddl.toggle_target}) {
    if (needed && state.fixture(*needed) < 0) return std::nullopt;
  }
  const auto device = pddl.task_type == TaskType::Heat    ? std::optional{C::Microwave}
                      : pddl.task_type == TaskType::Cool  ? std::optional{C::Fridge}
                      : pddl.task_type == TaskType::Clean ? std::optional{C::Faucet}
                                                          : std::nullopt;
  if (device && state.fixture(*device) < 0) return std::nullopt;
  if (pddl.task_type == TaskType::Clean && state.fixture(C::Sink) < 0) return std::nullopt;
  return next(Ctx{pddl, state, opts});
}

std::vector<SubGoal> expert_plan(const PddlArgs& pddl, const LatentState& state, const ExpertOptions& opts) {
  std::vector<SubGoal> plan;
  LatentState s = state;
  while (static_cast<int>(plan.size()) < opts.max_steps) {
    auto g = expert_next(pddl, s, opts);
    if (!g) break;
    plan.push_back(*g);
    step(s, *g);
  }
  return plan;
}

}  // namespace hsp::world
