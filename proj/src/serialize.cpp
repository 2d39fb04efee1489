#include "hsp/serialize.hpp"

#include <algorithm>
#include <map>

namespace hsp::world {
namespace {

template <typename T>
T require(std::optional<T> v, std::string_view what, std::string_view text) {
  if (!v) throw ParseError("invalid " + std::string{what} + ": '" + std::string{text} + "'");
  return *v;
}

ObjectClass class_from(const Json& j) {
  const auto text = j.get<std::string>();
  return require(parse_class(text), "object class", text);
}

Json optional_class(const std::optional<ObjectClass>& c) { return c ? Json(std::string{name(*c)}) : Json(nullptr); }

std::optional<ObjectClass> optional_class_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return class_from(j.at(key));
}

Temperature temperature_from(const std::string& text) {
  if (text == "hot") return Temperature::Hot;
  if (text == "cold") return Temperature::Cold;
  if (text == "none") return Temperature::None;
  throw ParseError("invalid temperature: '" + text + "'");
}

}  // namespace

Json to_json(const PddlArgs& p) {
  Json j;
  j["task_type"] = name(p.task_type);
  j["object_target"] = name(p.object_target);
  j["parent_target"] = optional_class(p.parent_target);
  j["mrecep_target"] = optional_class(p.mrecep_target);
  j["toggle_target"] = optional_class(p.toggle_target);
  j["object_state"] = name(p.object_state);
  j["object_sliced"] = p.object_sliced;
  j["two_object"] = p.two_object;
  return j;
}

PddlArgs pddl_from_json(const Json& j) {
  try {
    PddlArgs p;
    const auto type = j.at("task_type").get<std::string>();
    p.task_type = require(parse_task_type(type), "task type", type);
    p.object_target = class_from(j.at("object_target"));
    p.parent_target = optional_class_from(j, "parent_target");
    p.mrecep_target = optional_class_from(j, "mrecep_target");
    p.toggle_target = optional_class_from(j, "toggle_target");
    const auto state = j.at("object_state").get<std::string>();
    p.object_state = require(parse_object_state(state), "object state", state);
    p.object_sliced = j.at("object_sliced").get<bool>();
    p.two_object = j.at("two_object").get<bool>();
    return p;
  } catch (const Json::exception& e) {
    throw ParseError(std::string{"pddl: "} + e.what());
  }
}

Json to_json(const TaskSpec& t) {
  Json j;
  j["pddl"] = to_json(t.pddl);
  j["instruction"] = t.instruction;
  j["scene_seed"] = t.scene_seed;
  return j;
}

TaskSpec task_from_json(const Json& j) {
  try {
    return {pddl_from_json(j.at("pddl")), j.at("instruction").get<std::string>(),
            j.at("scene_seed").get<std::uint64_t>()};
  } catch (const Json::exception& e) {
    throw ParseError(std::string{"task: "} + e.what());
  }
}

Json to_json(const SubGoal& g) { return render(g); }

SubGoal subgoal_from_json(const Json& j) {
  if (!j.is_string()) throw ParseError("sub-goal must be a string");
  const auto text = j.get<std::string>();
  return require(parse_subgoal(text), "sub-goal", text);
}

Json to_json(const std::vector<SubGoal>& gs) {
  Json j = Json::array();
  for (const auto& g : gs) j.push_back(to_json(g));
  return j;
}

std::vector<SubGoal> subgoals_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("sub-goal list must be an array");
  std::vector<SubGoal> out;
  for (const auto& e : j) out.push_back(subgoal_from_json(e));
  return out;
}

Json to_json(const Observation& o) {
  Json j;
  Json classes = Json::array();
  for (auto c : o.visible_classes) classes.push_back(name(c));
  j["visible_classes"] = classes;
  j["last_status"] = render(o.last_status);
  j["step"] = o.step;
  return j;
}

Observation observation_from_json(const Json& j) {
  try {
    Observation o;
    for (const auto& c : j.at("visible_classes")) o.visible_classes.push_back(class_from(c));
    const auto status = j.at("last_status").get<std::string>();
    o.last_status = require(parse_status(status), "status", status);
    o.step = j.at("step").get<int>();
    return o;
  } catch (const Json::exception& e) {
    throw ParseError(std::string{"observation: "} + e.what());
  }
}

Json to_json(const Outcome& o) {
  Json j;
  j["success"] = o.success;
  j["gc"] = o.gc;
  j["satisfied"] = o.satisfied;
  j["total"] = o.total;
  return j;
}

Json to_json(const LatentState& s) {
  Json objects = Json::object();
  Json receptacles = Json::object();
  Json toggles = Json::object();
  Json moved = Json::object();
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& o = s.objects[i];
    Json e;
    e["class"] = name(o.cls);
    switch (o.place.where) {
      case Placement::Where::Location: e["location"] = s.locations[o.place.index]; break;
      case Placement::Where::Receptacle: e["location"] = s.objects[o.place.index].id; break;
      case Placement::Where::Inventory: e["location"] = "inventory"; break;
    }
    e["temp"] = name(o.temp);
    e["clean"] = o.clean;
    e["sliced"] = o.sliced;
    objects[o.id] = e;
    if (is_receptacle(o.cls)) receptacles[o.id] = Json{{"is_open", o.is_open}};
    if (is_toggleable(o.cls)) toggles[o.id] = Json{{"is_on", o.is_on}};
    if (o.moved_at >= 0) moved[o.id] = o.moved_at;
  }
  Json j;
  j["objects"] = objects;
  j["receptacles"] = receptacles;
  j["toggles"] = toggles;
  j["agent_location"] = s.locations[s.agent_location];
  j["inventory"] = s.inventory ? Json(s.objects[*s.inventory].id) : Json(nullptr);
  j["clock"] = s.clock;
  j["locations"] = s.locations;
  j["visited"] = s.visited;
  j["moved_at"] = moved;
  return j;
}

LatentState state_from_json(const Json& j) {
  try {
    LatentState s;
    s.locations = j.at("locations").get<std::vector<std::string>>();
    std::map<std::string, int> loc_index, obj_index;
    for (std::size_t i = 0; i < s.locations.size(); ++i) loc_index[s.locations[i]] = static_cast<int>(i);

    std::vector<std::string> where;
    for (const auto& [id, e] : j.at("objects").items()) {
      ObjectInstance o;
      o.id = id;
      o.cls = class_from(e.at("class"));
      o.temp = temperature_from(e.at("temp").get<std::string>());
      o.clean = e.at("clean").get<bool>();
      o.sliced = e.at("sliced").get<bool>();
      where.push_back(e.at("location").get<std::string>());
      s.objects.push_back(std::move(o));
    }
    // Objects must be sorted by id; keep the location strings aligned.
    std::vector<std::size_t> order(s.objects.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s.objects[a].id < s.objects[b].id; });
    std::vector<ObjectInstance> sorted;
    std::vector<std::string> sorted_where;
    for (auto i : order) {
      sorted.push_back(s.objects[i]);
      sorted_where.push_back(where[i]);
    }
    s.objects = std::move(sorted);
    for (std::size_t i = 0; i < s.objects.size(); ++i) obj_index[s.objects[i].id] = static_cast<int>(i);

    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& w = sorted_where[i];
      auto& o = s.objects[i];
      if (w == "inventory") {
        o.place = {Placement::Where::Inventory, 0};
        s.inventory = static_cast<int>(i);
      } else if (auto l = loc_index.find(w); l != loc_index.end()) {
        o.place = {Placement::Where::Location, l->second};
      } else if (auto r = obj_index.find(w); r != obj_index.end()) {
        o.place = {Placement::Where::Receptacle, r->second};
      } else {
        throw ParseError("object " + o.id + " has unknown location '" + w + "'");
      }
    }
    for (const auto& [id, e] : j.at("receptacles").items()) {
      if (auto it = obj_index.find(id); it != obj_index.end()) s.objects[it->second].is_open = e.at("is_open");
    }
    for (const auto& [id, e] : j.at("toggles").items()) {
      if (auto it = obj_index.find(id); it != obj_index.end()) s.objects[it->second].is_on = e.at("is_on");
    }
    if (j.contains("moved_at")) {
      for (const auto& [id, v] : j.at("moved_at").items()) {
        if (auto it = obj_index.find(id); it != obj_index.end()) s.objects[it->second].moved_at = v.get<int>();
      }
    }
    const auto agent = j.at("agent_location").get<std::string>();
    auto a = loc_index.find(agent);
    if (a == loc_index.end()) throw ParseError("unknown agent location '" + agent + "'");
    s.agent_location = a->second;
    s.clock = j.at("clock").get<int>();
    s.visited = j.at("visited").get<std::vector<bool>>();
    if (s.visited.size() != s.locations.size()) throw ParseError("visited/locations size mismatch");
    return s;
  } catch (const Json::exception& e) {
    throw ParseError(std::string{"state: "} + e.what());
  }
}

Json to_json(const Scene& s) {
  Json j;
  j["task"] = to_json(s.task);
  j["state"] = to_json(s.state);
  return j;
}

Scene scene_from_json(const Json& j) {
  try {
    return {task_from_json(j.at("task")), state_from_json(j.at("state"))};
  } catch (const Json::exception& e) {
    throw ParseError(std::string{"scene: "} + e.what());
  }
}

}  // namespace hsp::world
