#pragma once

#include <json.hpp>
#include <stdexcept>
#include <string>

#include "hsp/world.hpp"

namespace hsp {

/// Insertion-ordered JSON so serialized files have a stable key order.
using Json = nlohmann::ordered_json;

/// Malformed serialized input.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace world {

Json to_json(const PddlArgs& p);
PddlArgs pddl_from_json(const Json& j);

Json to_json(const TaskSpec& t);
TaskSpec task_from_json(const Json& j);

/// Sub-goals serialize as their rendered text, "PutObject Sink".
Json to_json(const SubGoal& g);
SubGoal subgoal_from_json(const Json& j);
Json to_json(const std::vector<SubGoal>& gs);
std::vector<SubGoal> subgoals_from_json(const Json& j);

Json to_json(const Observation& o);
Observation observation_from_json(const Json& j);

Json to_json(const Outcome& o);

/// Objects keyed by id with {class, location, temp, clean, sliced}; location
/// is a location id, a container object id or "inventory". Receptacle and
/// toggle flags live in their own maps.
Json to_json(const LatentState& s);
LatentState state_from_json(const Json& j);

Json to_json(const Scene& s);
Scene scene_from_json(const Json& j);

}  // namespace world
}  // namespace hsp
