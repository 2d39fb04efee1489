#pragma once

#include "hsp/serialize.hpp"
#include "hsp/world.hpp"

namespace hsp::testing {

/// Kitchen where the sink, faucet, coffee machine and dining table share one
/// location; the pan starts on the counter. Task: wash the pan, put it on the
/// dining table.
inline world::Scene pan_kitchen() {
  const Json state = Json::parse(R"({
    "objects": {
      "Apple_0": {"class": "Apple", "location": "Fridge_0", "temp": "cold", "clean": false, "sliced": false},
      "Basketball_0": {"class": "Basketball", "location": "Shelf_0", "temp": "none", "clean": false, "sliced": false},
      "Cabinet_0": {"class": "Cabinet", "location": "loc1", "temp": "none", "clean": false, "sliced": false},
      "CoffeeMachine_0": {"class": "CoffeeMachine", "location": "loc0", "temp": "none", "clean": false, "sliced": false},
      "CounterTop_0": {"class": "CounterTop", "location": "loc0", "temp": "none", "clean": false, "sliced": false},
      "DiningTable_0": {"class": "DiningTable", "location": "loc0", "temp": "none", "clean": false, "sliced": false},
      "Faucet_0": {"class": "Faucet", "location": "loc0", "temp": "none", "clean": false, "sliced": false},
      "Fridge_0": {"class": "Fridge", "location": "loc1", "temp": "none", "clean": false, "sliced": false},
      "Mug_0": {"class": "Mug", "location": "Cabinet_0", "temp": "none", "clean": false, "sliced": false},
      "Pan_0": {"class": "Pan", "location": "CounterTop_0", "temp": "none", "clean": false, "sliced": false},
      "Shelf_0": {"class": "Shelf", "location": "loc2", "temp": "none", "clean": false, "sliced": false},
      "Sink_0": {"class": "Sink", "location": "loc0", "temp": "none", "clean": false, "sliced": false}
    },
    "receptacles": {
      "Cabinet_0": {"is_open": false}, "CoffeeMachine_0": {"is_open": true}, "CounterTop_0": {"is_open": true},
      "DiningTable_0": {"is_open": true}, "Fridge_0": {"is_open": false}, "Shelf_0": {"is_open": true},
      "Sink_0": {"is_open": true}
    },
    "toggles": {"CoffeeMachine_0": {"is_on": false}, "Faucet_0": {"is_on": false}},
    "agent_location": "loc0",
    "inventory": null,
    "clock": 0,
    "locations": ["loc0", "loc1", "loc2"],
    "visited": [true, false, false],
    "moved_at": {}
  })");
  world::Scene scene;
  scene.state = world::state_from_json(state);
  scene.task.pddl = {.task_type = world::TaskType::Clean,
                     .object_target = world::ObjectClass::Pan,
                     .parent_target = world::ObjectClass::DiningTable,
                     .object_state = world::ObjectState::Cleaned};
  scene.task.instruction = "Wash a pan and put it away";
  return scene;
}

inline std::vector<world::SubGoal> subgoals(std::initializer_list<const char*> texts) {
  std::vector<world::SubGoal> out;
  for (const char* t : texts) out.push_back(*world::parse_subgoal(t));
  return out;
}

/// The suboptimal washing trajectory: the pan ends up in the coffee machine
/// with the faucet still running.
inline std::vector<world::SubGoal> pan_detour() {
  return subgoals({"PickupObject Pan", "PutObject Sink", "ToggleObjectOn Faucet", "PickupObject Pan",
                   "PutObject CoffeeMachine"});
}

}  // namespace hsp::testing
