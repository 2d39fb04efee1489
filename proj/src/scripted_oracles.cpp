#include <algorithm>
#include <functional>
#include <set>

#include "hsp/lexicon.hpp"
#include "hsp/oracles.hpp"
#include "hsp/retrieval.hpp"
#include "hsp/rng.hpp"

namespace hsp::oracles {

using world::ObjectClass;
using world::PddlArgs;
using world::SubGoal;
using world::TaskType;
using world::Verb;

std::vector<SubGoal> RolloutCandidate::actions() const {
  std::vector<SubGoal> out;
  for (const auto& s : prefix) out.push_back(s.goal);
  return out;
}

// ---------------------------------------------------------------------------
// Instruction reading
// ---------------------------------------------------------------------------

namespace {

bool is_carrier(ObjectClass c) {
  return c == ObjectClass::Plate || c == ObjectClass::Bowl || c == ObjectClass::Pot;
}

bool has_word(const std::vector<std::string>& words, std::initializer_list<std::string_view> keys) {
  return std::any_of(words.begin(), words.end(), [&](const std::string& w) {
    return std::find(keys.begin(), keys.end(), w) != keys.end();
  });
}

ObjectClass resolve(const world::lexicon::Mention& m, const std::vector<ObjectClass>& visible) {
  for (auto c : m.candidates) {
    if (std::binary_search(visible.begin(), visible.end(), c)) return c;
  }
  return m.candidates.front();
}

}  // namespace

PddlArgs infer_pddl(std::string_view instruction, const std::vector<ObjectClass>& visible_in) {
  std::vector<ObjectClass> visible = visible_in;
  std::sort(visible.begin(), visible.end());
  const auto words = world::lexicon::words(instruction);

  std::vector<ObjectClass> items, places;
  std::optional<ObjectClass> toggle;
  for (const auto& m : world::lexicon::find_mentions(instruction)) {
    const ObjectClass c = resolve(m, visible);
    if (world::is_pickupable(c)) {
      if (std::find(items.begin(), items.end(), c) == items.end()) items.push_back(c);
    } else if (world::is_receptacle(c)) {
      places.push_back(c);
    } else if (world::is_toggleable(c)) {
      toggle = c;
    }
  }
  // Once some mentioned object has been seen, unseen mentions are treated as
  // misreadings.
  std::vector<ObjectClass> seen_items;
  for (auto c : items) {
    if (std::binary_search(visible.begin(), visible.end(), c)) seen_items.push_back(c);
  }
  if (!seen_items.empty()) items = seen_items;

  PddlArgs p;
  if (has_word(words, {"two"})) {
    p.task_type = TaskType::PickTwo;
  } else if (has_word(words, {"examine", "look", "lamp", "desklamp"}) || toggle == ObjectClass::DeskLamp) {
    p.task_type = TaskType::Examine;
  } else if (has_word(words, {"heated", "warmed", "hot", "heat", "warm"})) {
    p.task_type = TaskType::Heat;
  } else if (has_word(words, {"cooled", "chilled", "cold", "cool", "chill"})) {
    p.task_type = TaskType::Cool;
  } else if (has_word(words, {"clean", "cleaned", "wash", "washed", "rinse", "rinsed"})) {
    p.task_type = TaskType::Clean;
  } else {
    const bool carrier = std::any_of(items.begin(), items.end(), is_carrier);
    const bool other = std::any_of(items.begin(), items.end(), [](ObjectClass c) { return !is_carrier(c); });
    p.task_type = carrier && other ? TaskType::Stack : TaskType::Pick;
  }
  p.object_state = world::required_state(p.task_type);
  p.two_object = p.task_type == TaskType::PickTwo;
  p.object_sliced = has_word(words, {"sliced", "slice"});

  if (p.task_type == TaskType::Stack) {
    for (auto c : items) {
      if (is_carrier(c) && !p.mrecep_target) p.mrecep_target = c;
    }
    for (auto c : items) {
      if (!is_carrier(c)) {
        p.object_target = c;
        break;
      }
    }
  } else if (!items.empty()) {
    p.object_target = items.front();
  }
  if (!world::is_sliceable(p.object_target)) p.object_sliced = false;

  if (p.task_type == TaskType::Examine) {
    p.toggle_target = ObjectClass::DeskLamp;
  } else {
    // The destination is the last fixture named; portable receptacles are
    // objects, not destinations.
    for (auto c : places) {
      if (world::is_fixture(c)) p.parent_target = c;
    }
    if (!p.parent_target) p.parent_target = ObjectClass::CounterTop;
  }
  return p;
}

PddlArgs default_pddl(std::string_view instruction) {
  PddlArgs p;
  const auto mentions = world::lexicon::find_mentions(instruction);
  if (!mentions.empty()) p.object_target = mentions.front().candidates.front();
  return p;
}

world::PddlArgs GroundTruthAdapter::predict(const AdapterQuery& q) {
  if (!q.truth) throw std::invalid_argument("ground-truth adapter queried without the true arguments");
  return *q.truth;
}

// ---------------------------------------------------------------------------
// Actors
// ---------------------------------------------------------------------------

namespace {

/// Walk towards unexplored places when the expert has nothing to offer (the
/// predicted task names an object the scene does not have, or is invalid).
SubGoal explore(const OracleContext& ctx) {
  const auto& s = ctx.belief;
  std::optional<ObjectClass> target;
  for (const auto& o : s.objects) {
    if (o.place.where != world::Placement::Where::Location || s.visited[o.place.index]) continue;
    if (!target || o.cls < *target) target = o.cls;
  }
  if (target) return {Verb::GotoLocation, *target};
  for (const auto& o : s.objects) {
    if (o.place.where == world::Placement::Where::Location && world::is_openable(o.cls) && !o.is_open) {
      if (o.place.index != s.agent_location) return {Verb::GotoLocation, o.cls};
      return {Verb::OpenObject, o.cls};
    }
  }
  return ctx.legal.front();
}

std::uint64_t context_key(const OracleContext& ctx) {
  return mix(retrieval::stable_hash(prompts::render_history(ctx.history)),
             static_cast<std::uint64_t>(ctx.belief.clock));
}

}  // namespace

SubGoal ScriptedActor::policy(const OracleContext& ctx) const {
  const world::ExpertOptions opts{.recover = kind_ == Kind::Hindsight};
  auto g = world::expert_next(ctx.pddl_predicted, ctx.belief, opts);
  if (!g) g = explore(ctx);
  if (std::find(ctx.legal.begin(), ctx.legal.end(), *g) == ctx.legal.end()) {
    g = prompts::canonicalize(world::render(*g), ctx.legal).goal;
  }
  return *g;
}

std::vector<SubGoal> ScriptedActor::propose(const OracleContext& ctx, int m) {
  if (ctx.legal.empty()) throw std::invalid_argument("propose: empty legal set");
  const SubGoal best = policy(ctx);
  const std::uint64_t actor_id = kind_ == Kind::Hindsight ? 1 : 2;
  std::vector<SubGoal> out;
  for (int j = 0; j < m; ++j) {
    Rng rng(mix(mix(ctx.rng_seed, actor_id), mix(context_key(ctx), static_cast<std::uint64_t>(j))));
    if (rng.chance(epsilon_)) {
      out.push_back(ctx.legal[rng.uniform(ctx.legal.size())]);
    } else {
      out.push_back(best);
    }
  }
  return out;
}

std::string ScriptedActor::name() const { return kind_ == Kind::Hindsight ? "actor_hind" : "actor_gt"; }

std::vector<SubGoal> ExhaustiveActor::propose(const OracleContext& ctx, int m) {
  if (ctx.legal.empty()) throw std::invalid_argument("propose: empty legal set");
  std::vector<SubGoal> out;
  for (int j = 0; j < m; ++j) out.push_back(ctx.legal[static_cast<std::size_t>(j) % ctx.legal.size()]);
  return out;
}

// ---------------------------------------------------------------------------
// Critic
// ---------------------------------------------------------------------------

double discounted_return(const PddlArgs& goal, const world::LatentState& start, const std::vector<SubGoal>& actions,
                         double gamma, int horizon) {
  world::LatentState s = start;
  world::Outcome prev = world::evaluate(goal, s);
  double total = 0.0;
  double discount = 1.0;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    if (prev.success) break;
    if (horizon >= 0 && static_cast<int>(t) >= horizon) break;
    world::step(s, actions[t]);
    const world::Outcome next = world::evaluate(goal, s);
    total += discount * ((next.gc - prev.gc) + (next.success ? 1.0 : 0.0));
    discount *= gamma;
    prev = next;
  }
  return total;
}

double TrueValueCritic::score(const OracleContext& ctx, const RolloutCandidate& candidate) {
  const auto& goal = ctx.task.pddl;
  std::vector<SubGoal> actions = candidate.actions();
  switch (mode_) {
    case Continuation::None: return discounted_return(goal, ctx.belief, actions, cfg_.gamma);
    case Continuation::Expert: {
      const auto end = world::replay(ctx.belief, actions);
      const auto tail = world::expert_plan(goal, end);
      actions.insert(actions.end(), tail.begin(), tail.end());
      return discounted_return(goal, ctx.belief, actions, cfg_.gamma);
    }
    case Continuation::Exhaustive: {
      // Best completion over the fixed menu up to the horizon, every full
      // sequence scored from the root so values match a brute-force scan.
      const int horizon = cfg_.lookahead_budget;
      const int remaining = std::max(0, horizon - static_cast<int>(actions.size()));
      double best = discounted_return(goal, ctx.belief, actions, cfg_.gamma, horizon);
      std::vector<SubGoal> seq = actions;
      std::function<void(int)> extend = [&](int depth) {
        if (depth == remaining) {
          best = std::max(best, discounted_return(goal, ctx.belief, seq, cfg_.gamma, horizon));
          return;
        }
        for (const auto& g : ctx.legal) {
          seq.push_back(g);
          extend(depth + 1);
          seq.pop_back();
        }
      };
      extend(0);
      return best;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

PredictedState ScriptedGenerator::next_state(const OracleContext&, const PredictedState& current, const SubGoal& g) {
  auto [belief, status] = world::apply_subgoal(current.belief, g);
  PredictedState out{"", std::move(belief), status};
  if (status.ok()) {
    out.summary = prompts::belief_summary(out.belief);
  } else {
    out.summary = current.summary + "; " + world::render(g) + " would fail (" +
                  std::string{world::name(status.reason)} + ")";
  }
  return out;
}

}  // namespace hsp::oracles
