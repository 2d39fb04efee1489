#include <algorithm>
#include <array>
#include <map>

#include "hsp/lexicon.hpp"
#include "hsp/rng.hpp"
#include "hsp/world.hpp"

namespace hsp::world {
namespace {

using C = ObjectClass;

constexpr std::array kPickObjects{C::Apple,  C::Basketball, C::Book,     C::Bowl,          C::Bread,
                                  C::Candle, C::CellPhone,  C::Cup,      C::Egg,           C::Fork,
                                  C::KeyChain, C::Ladle,    C::Lettuce,  C::Mug,           C::Pan,
                                  C::Pencil, C::Plate,      C::Pot,      C::Potato,        C::RemoteControl,
                                  C::SoapBottle, C::Spatula, C::Spoon,   C::SprayBottle,   C::Tomato,
                                  C::Vase,   C::Watch};
constexpr std::array kPickParents{C::ArmChair, C::Cabinet, C::CounterTop, C::DiningTable,
                                  C::Drawer,   C::Shelf,   C::SideTable};
constexpr std::array kExamineObjects{C::Basketball, C::Book,  C::Candle, C::CellPhone, C::KeyChain,
                                     C::Pencil,     C::RemoteControl, C::Vase, C::Watch};
constexpr std::array kCleanObjects{C::Apple, C::Bowl, C::Cup,   C::Fork,   C::Ladle,  C::Lettuce, C::Mug,
                                   C::Pan,   C::Plate, C::Pot,  C::Potato, C::Spatula, C::Spoon,  C::Tomato};
constexpr std::array kCleanParents{C::Cabinet, C::CounterTop, C::DiningTable, C::Drawer, C::Shelf, C::SideTable};
constexpr std::array kHeatObjects{C::Apple, C::Bread, C::Cup, C::Egg, C::Mug, C::Potato, C::Tomato};
constexpr std::array kHeatParents{C::Cabinet, C::CounterTop, C::DiningTable, C::Fridge, C::GarbageCan,
                                  C::SideTable};
constexpr std::array kCoolObjects{C::Apple, C::Bowl, C::Bread, C::Cup,   C::Egg,    C::Lettuce,
                                  C::Mug,   C::Pan,  C::Plate, C::Pot,   C::Potato, C::Tomato};
constexpr std::array kCoolParents{C::Cabinet, C::CounterTop, C::DiningTable, C::Shelf, C::SideTable};
constexpr std::array kTwoObjects{C::Apple,    C::Book,   C::Candle,        C::CellPhone, C::Egg,
                                 C::KeyChain, C::Pencil, C::Potato,        C::RemoteControl,
                                 C::SoapBottle, C::SprayBottle, C::Tomato, C::Vase,      C::Watch};
constexpr std::array kTwoParents{C::ArmChair, C::Cabinet,   C::CounterTop, C::DiningTable,
                                 C::Drawer,   C::GarbageCan, C::Shelf,     C::SideTable};
constexpr std::array kStackObjects{C::Apple, C::Egg, C::Fork, C::Ladle, C::Potato, C::Spatula, C::Spoon, C::Tomato};
constexpr std::array kCarriers{C::Bowl, C::Plate, C::Pot};
constexpr std::array kStackParents{C::Cabinet, C::CounterTop, C::DiningTable, C::Fridge, C::Shelf, C::SideTable};
constexpr std::array kReceptacleFixtures{C::ArmChair,   C::Cabinet,   C::CoffeeMachine, C::CounterTop,
                                         C::DiningTable, C::Drawer,   C::Fridge,        C::GarbageCan,
                                         C::Microwave,  C::Shelf,     C::SideTable,     C::Sink};

constexpr double kSlicedChance = 0.1;

template <typename T, std::size_t N>
T pick(Rng& rng, const std::array<T, N>& items) {
  return items[rng.uniform(N)];
}

PddlArgs choose_pddl(Rng& rng, TaskType type) {
  PddlArgs p;
  p.task_type = type;
  p.object_state = required_state(type);
  switch (type) {
    case TaskType::Examine:
      p.object_target = pick(rng, kExamineObjects);
      p.toggle_target = C::DeskLamp;
      break;
    case TaskType::Pick:
      p.object_target = pick(rng, kPickObjects);
      p.parent_target = pick(rng, kPickParents);
      p.object_sliced = is_sliceable(p.object_target) && rng.chance(kSlicedChance);
      break;
    case TaskType::Clean:
      p.object_target = pick(rng, kCleanObjects);
      p.parent_target = pick(rng, kCleanParents);
      break;
    case TaskType::Stack:
      p.object_target = pick(rng, kStackObjects);
      p.mrecep_target = pick(rng, kCarriers);
      p.parent_target = pick(rng, kStackParents);
      break;
    case TaskType::PickTwo:
      p.object_target = pick(rng, kTwoObjects);
      p.parent_target = pick(rng, kTwoParents);
      p.two_object = true;
      break;
    case TaskType::Heat:
      p.object_target = pick(rng, kHeatObjects);
      p.parent_target = pick(rng, kHeatParents);
      p.object_sliced = is_sliceable(p.object_target) && rng.chance(kSlicedChance);
      break;
    case TaskType::Cool:
      p.object_target = pick(rng, kCoolObjects);
      p.parent_target = pick(rng, kCoolParents);
      p.object_sliced = is_sliceable(p.object_target) && rng.chance(kSlicedChance);
      break;
  }
  return p;
}

/// Instruction text. Each synonym-capable slot takes its synonym with
/// probability 0.5.
std::string render_instruction(Rng& rng, const PddlArgs& p) {
  auto slot = [&](C c) {
    auto syn = lexicon::synonym(c);
    if (syn && rng.chance(0.5)) return *syn;
    return lexicon::phrase(c);
  };
  auto state_word = [&](ObjectState s) {
    std::string adj{lexicon::state_adjective(s)};
    auto syn = lexicon::state_synonym(s);
    if (syn && rng.chance(0.5)) adj = std::string{*syn};
    return adj;
  };
  auto with_article = [](const std::string& phrase) { return std::string{lexicon::article(phrase)} + " " + phrase; };

  const std::string obj = slot(p.object_target);
  switch (p.task_type) {
    case TaskType::Examine:
      return "Examine " + with_article(obj) + " under the desk lamp";
    case TaskType::PickTwo:
      return "Put two " + lexicon::plural(obj) + " " + std::string{lexicon::preposition(*p.parent_target)} + " the " +
             slot(*p.parent_target);
    case TaskType::Stack:
      return "Place " + with_article(slot(*p.mrecep_target)) + " with " + with_article(obj) + " on it " +
             std::string{lexicon::preposition(*p.parent_target)} + " the " + slot(*p.parent_target);
    case TaskType::Clean: {
      std::string head = p.object_sliced ? "sliced " + obj : obj;
      return "Wash " + with_article(head) + " and put it " + std::string{lexicon::preposition(*p.parent_target)} +
             " the " + slot(*p.parent_target);
    }
    default: {
      std::string head = obj;
      if (p.object_sliced) head = "sliced " + head;
      if (p.object_state != ObjectState::None) head = state_word(p.object_state) + " " + head;
      return "Put " + with_article(head) + " " + std::string{lexicon::preposition(*p.parent_target)} + " the " +
             slot(*p.parent_target);
    }
  }
}

/// Incrementally assembles a scene; objects refer to each other by index.
class SceneBuilder {
 public:
  SceneBuilder(Rng& rng, int n_locations) : rng_(rng), n_loc_(n_locations) {}

  int add_fixture(C cls, int loc) {
    objects_.push_back({.cls = cls, .place = {Placement::Where::Location, loc}, .is_open = !is_openable(cls)});
    return static_cast<int>(objects_.size()) - 1;
  }
  int add_item(C cls, int container) {
    objects_.push_back({.cls = cls, .place = {Placement::Where::Receptacle, container}});
    return static_cast<int>(objects_.size()) - 1;
  }
  int location(int idx) const {
    int cur = idx;
    while (objects_[cur].place.where == Placement::Where::Receptacle) cur = objects_[cur].place.index;
    return objects_[cur].place.index;
  }
  int find(C cls) const {
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      if (objects_[i].cls == cls) return static_cast<int>(i);
    }
    return -1;
  }
  std::size_t size() const { return objects_.size(); }
  std::vector<ObjectInstance>& objects() { return objects_; }
  int n_locations() const { return n_loc_; }

  /// Receptacle fixtures, optionally restricted to one location, minus excluded classes.
  std::vector<int> containers(std::optional<int> at, std::span<const C> excluded) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const auto& o = objects_[i];
      if (o.place.where != Placement::Where::Location || !is_receptacle(o.cls)) continue;
      if (at && o.place.index != *at) continue;
      if (std::find(excluded.begin(), excluded.end(), o.cls) != excluded.end()) continue;
      out.push_back(static_cast<int>(i));
    }
    return out;
  }

  /// A container for a new item. With probability `near_chance` it is taken
  /// from location `near` (if that location has one); closed containers are
  /// used only a fifth of the time.
  int choose_container(std::optional<int> near, double near_chance, std::span<const C> excluded) {
    std::vector<int> pool;
    if (near && rng_.chance(near_chance)) pool = containers(*near, excluded);
    if (pool.empty()) pool = containers(std::nullopt, excluded);
    std::vector<int> plain;
    for (int i : pool) {
      if (!is_openable(objects_[i].cls)) plain.push_back(i);
    }
    if (!plain.empty() && (plain.size() == pool.size() || rng_.chance(0.8))) pool = plain;
    return pool[rng_.uniform(pool.size())];
  }

 private:
  Rng& rng_;
  int n_loc_;
  std::vector<ObjectInstance> objects_;
};

/// Unrelated classes for distractors: never a class the goal mentions, never
/// Cup/Mug twins of the target, never a Knife when slicing is involved.
std::vector<C> distractor_pool(const PddlArgs& p) {
  std::vector<C> related{p.object_target, C::Knife};
  if (p.mrecep_target) related.push_back(*p.mrecep_target);
  if (p.object_target == C::Cup) related.push_back(C::Mug);
  if (p.object_target == C::Mug) related.push_back(C::Cup);
  std::vector<C> out;
  for (auto c : all_classes()) {
    if (!is_pickupable(c)) continue;
    if (std::find(related.begin(), related.end(), c) != related.end()) continue;
    out.push_back(c);
  }
  return out;
}

struct Layout {
  double start_at_object = 0.7;
  double object_near_parent = 0.0;  // target's container at the parent's location
  double object_near_device = 0.0;  // target's container at the appliance's location
  double parent_near_device = 0.0;  // parent fixture shares the appliance's location
};

Layout layout_for(TaskType t) {
  switch (t) {
    case TaskType::Pick: return {.start_at_object = 0.85, .object_near_parent = 0.75};
    case TaskType::Examine: return {.start_at_object = 0.85, .object_near_device = 0.9};
    case TaskType::Clean: return {.start_at_object = 0.8, .object_near_device = 0.55, .parent_near_device = 0.5};
    case TaskType::Heat:
    case TaskType::Cool: return {.start_at_object = 0.6, .object_near_device = 0.05, .parent_near_device = 0.05};
    case TaskType::PickTwo: return {.start_at_object = 0.85, .object_near_parent = 0.85};
    case TaskType::Stack: return {.start_at_object = 0.7, .object_near_parent = 0.4};
  }
  return {};
}

std::optional<C> appliance(const PddlArgs& p) {
  switch (p.task_type) {
    case TaskType::Heat: return C::Microwave;
    case TaskType::Cool: return C::Fridge;
    case TaskType::Clean: return C::Sink;
    case TaskType::Examine: return C::DeskLamp;
    default: return std::nullopt;
  }
}

Scene build_scene(Rng& rng, const PddlArgs& p, std::uint64_t seed) {
  const int n_loc = rng.between(4, 8);
  SceneBuilder sb(rng, n_loc);
  const Layout layout = layout_for(p.task_type);

  // Receptacle fixtures: the required ones first, then random extras until
  // there is at least one spare beyond one-per-location.
  std::vector<C> fixtures;
  if (p.parent_target) fixtures.push_back(*p.parent_target);
  if (auto dev = appliance(p); dev && is_receptacle(*dev)) fixtures.push_back(*dev);
  const std::size_t target_count = static_cast<std::size_t>(n_loc) + 1 + rng.uniform(3);
  std::vector<C> extras(kReceptacleFixtures.begin(), kReceptacleFixtures.end());
  rng.shuffle(extras);
  for (auto c : extras) {
    if (fixtures.size() >= target_count) break;
    if (std::find(fixtures.begin(), fixtures.end(), c) == fixtures.end()) fixtures.push_back(c);
  }
  rng.shuffle(fixtures);

  // The first n_loc fixtures anchor one location each; the rest go anywhere.
  std::map<C, int> loc_of;
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    loc_of[fixtures[i]] = i < static_cast<std::size_t>(n_loc) ? static_cast<int>(i) : rng.between(0, n_loc - 1);
  }
  auto relocate = [&](C moving, int loc) {
    const auto pos = static_cast<std::size_t>(std::find(fixtures.begin(), fixtures.end(), moving) - fixtures.begin());
    if (pos < static_cast<std::size_t>(n_loc)) {
      // Hand the anchor role to a spare fixture so no location is left empty.
      std::size_t spare = static_cast<std::size_t>(n_loc);
      while (spare < fixtures.size() && loc_of[fixtures[spare]] == loc) ++spare;
      if (spare == fixtures.size()) return;
      loc_of[fixtures[spare]] = loc_of[moving];
      std::swap(fixtures[pos], fixtures[spare]);
    }
    loc_of[moving] = loc;
  };
  const auto device = appliance(p);
  if (device && is_receptacle(*device) && p.parent_target && *p.parent_target != *device &&
      rng.chance(layout.parent_near_device)) {
    relocate(*p.parent_target, loc_of[*device]);
  }
  for (auto c : fixtures) sb.add_fixture(c, loc_of[c]);
  if (auto sink = sb.find(C::Sink); sink >= 0) sb.add_fixture(C::Faucet, sb.location(sink));

  // Appliance-free landmarks.
  int lamp_loc = -1;
  if (p.task_type == TaskType::Examine) lamp_loc = rng.between(0, n_loc - 1);

  // Target objects. Containers never hold the goal already.
  std::vector<C> excluded;
  if (p.parent_target) excluded.push_back(*p.parent_target);
  if (p.task_type == TaskType::Cool) excluded.push_back(C::Fridge);
  if (p.task_type == TaskType::Heat) excluded.push_back(C::Microwave);
  if (p.task_type == TaskType::Clean) excluded.push_back(C::Sink);

  std::optional<int> near;
  double near_chance = 0.0;
  if (layout.object_near_parent > 0 && p.parent_target) {
    near = sb.location(sb.find(*p.parent_target));
    near_chance = layout.object_near_parent;
  } else if (layout.object_near_device > 0 && device) {
    if (*device == C::DeskLamp) {
      near = lamp_loc;
    } else {
      near = sb.location(sb.find(*device));
    }
    near_chance = layout.object_near_device;
  }

  int target = -1;
  if (p.task_type == TaskType::Stack) {
    const int carrier_box = sb.choose_container(near, near_chance, excluded);
    sb.add_item(*p.mrecep_target, carrier_box);
    std::vector<C> ex2 = excluded;
    const int obj_box = sb.choose_container(sb.location(carrier_box), 0.8, ex2);
    target = sb.add_item(p.object_target, obj_box);
  } else {
    const int box = sb.choose_container(near, near_chance, excluded);
    target = sb.add_item(p.object_target, box);
    if (p.task_type == TaskType::PickTwo) {
      const int second = rng.chance(0.8) ? box : sb.choose_container(std::nullopt, 0.0, excluded);
      sb.add_item(p.object_target, second);
    }
  }
  if (p.object_sliced) {
    const int knife_box = sb.choose_container(sb.location(target), 0.5, excluded);
    sb.add_item(C::Knife, knife_box);
  }
  if (p.task_type == TaskType::Examine) sb.add_fixture(C::DeskLamp, lamp_loc);

  // Distractors: 3-8 unrelated classes, keeping the scene at <= 25 instances.
  auto pool = distractor_pool(p);
  rng.shuffle(pool);
  const int n_distract = rng.between(3, 8);
  for (int i = 0; i < n_distract && sb.size() < 25; ++i) {
    const C c = pool[static_cast<std::size_t>(i)];
    const int copies = rng.chance(0.25) ? 2 : 1;
    for (int k = 0; k < copies && sb.size() < 25; ++k) {
      sb.add_item(c, sb.choose_container(std::nullopt, 0.0, {}));
    }
  }

  // Ids, sorted order, index remap.
  auto& objs = sb.objects();
  std::map<C, int> counter;
  for (auto& o : objs) o.id = std::string{name(o.cls)} + "_" + std::to_string(counter[o.cls]++);
  std::vector<int> order(objs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return objs[a].id < objs[b].id; });
  std::vector<int> remap(objs.size());
  for (std::size_t i = 0; i < order.size(); ++i) remap[order[i]] = static_cast<int>(i);

  LatentState st;
  for (int i = 0; i < n_loc; ++i) st.locations.push_back("loc" + std::to_string(i));
  for (int old : order) {
    ObjectInstance o = objs[old];
    if (o.place.where == Placement::Where::Receptacle) o.place.index = remap[o.place.index];
    st.objects.push_back(std::move(o));
  }
  for (auto& o : st.objects) {
    if (o.place.where == Placement::Where::Receptacle && st.objects[o.place.index].cls == C::Fridge) {
      o.temp = Temperature::Cold;
    }
  }
  const int target_idx = remap[target];
  st.agent_location = rng.chance(layout.start_at_object) ? st.location_of(target_idx) : rng.between(0, n_loc - 1);
  st.visited.assign(static_cast<std::size_t>(n_loc), false);
  st.visited[st.agent_location] = true;

  Scene scene;
  scene.task.pddl = p;
  scene.task.instruction = render_instruction(rng, p);
  scene.task.scene_seed = seed;
  scene.state = std::move(st);
  return scene;
}

bool acceptable(const Scene& s) {
  if (evaluate(s.task, s.state).satisfied_count != 0) return false;
  const auto plan = expert_rollout(s.task, s.state);
  return evaluate(s.task, replay(s.state, plan)).success;
}

}  // namespace

Scene generate_task(std::uint64_t seed, TaskType type) {
  // A handful of attempts; every (seed, type) in practice succeeds on the first.
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(mix(mix(seed, static_cast<std::uint64_t>(type)), attempt));
    const PddlArgs p = choose_pddl(rng, type);
    Scene scene = build_scene(rng, p, seed);
    if (acceptable(scene) || attempt >= 31) return scene;
  }
}

}  // namespace hsp::world
