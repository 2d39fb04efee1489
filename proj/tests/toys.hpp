#pragma once

#include <algorithm>
#include <cmath>

#include "hsp/planner.hpp"
#include "hsp/rng.hpp"

namespace hsp::testing {

using planner::EpisodeState;
using planner::Oracles;
using planner::PlannerConfig;
using world::SubGoal;

inline EpisodeState episode_at(const world::Scene& scene) {
  EpisodeState ep;
  ep.task = scene.task;
  ep.sim = scene.state;
  ep.observation = world::observe(scene.state);
  ep.pddl = scene.task.pddl;
  return ep;
}

/// Independent return computation for the brute-force scan.
inline double replay_return(const world::PddlArgs& goal, world::LatentState s, const std::vector<SubGoal>& seq, double gamma) {
  auto prev = world::evaluate(goal, s);
  double total = 0.0, discount = 1.0;
  for (const auto& g : seq) {
    if (prev.success) break;
    world::step(s, g);
    const auto next = world::evaluate(goal, s);
    total += discount * ((next.gc - prev.gc) + (next.success ? 1.0 : 0.0));
    discount *= gamma;
    prev = next;
  }
  return total;
}

struct Toy {
  world::Scene scene;
  std::vector<SubGoal> menu;  // sorted, at most four
  int horizon = 1;
};

inline Toy make_toy(Rng& rng) {
  Toy toy;
  const auto types = world::all_task_types();
  toy.scene = world::generate_task(rng.next(), types[rng.uniform(types.size())]);
  const int walk = rng.between(0, 6);
  for (int i = 0; i < walk; ++i) {
    const auto legal = world::legal_subgoals(toy.scene.state, world::observe(toy.scene.state));
    world::step(toy.scene.state, legal[rng.uniform(legal.size())]);
  }
  const auto legal = world::legal_subgoals(toy.scene.state, world::observe(toy.scene.state));
  const std::size_t size = std::min<std::size_t>(legal.size(), static_cast<std::size_t>(rng.between(1, 4)));
  // Keep the expert's move on the menu most of the time so rewards are reachable.
  if (auto g = world::expert_next(toy.scene.task.pddl, toy.scene.state); g && rng.chance(0.8)) toy.menu.push_back(*g);
  while (toy.menu.size() < size) {
    const auto g = legal[rng.uniform(legal.size())];
    if (std::find(toy.menu.begin(), toy.menu.end(), g) == toy.menu.end()) toy.menu.push_back(g);
  }
  std::sort(toy.menu.begin(), toy.menu.end());
  toy.horizon = rng.between(1, 4);
  return toy;
}

/// Best first action over all menu^horizon sequences; ties (at 1e-9) go to
/// the smaller action.
inline std::pair<SubGoal, double> brute_force(const Toy& toy, double gamma) {
  std::vector<double> best(toy.menu.size(), -1e18);
  std::vector<std::size_t> idx(static_cast<std::size_t>(toy.horizon), 0);
  while (true) {
    std::vector<SubGoal> seq;
    for (auto i : idx) seq.push_back(toy.menu[i]);
    best[idx[0]] = std::max(best[idx[0]], replay_return(toy.scene.task.pddl, toy.scene.state, seq, gamma));
    std::size_t d = idx.size();
    while (d > 0 && ++idx[d - 1] == toy.menu.size()) idx[--d] = 0;
    if (d == 0) break;
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < best.size(); ++i) {
    if (std::llround(best[i] * 1e9) > std::llround(best[arg] * 1e9)) arg = i;
  }
  return {toy.menu[arg], best[arg]};
}

inline SubGoal plan_toy(const Toy& toy, int depth, int breadth) {
  oracles::ExhaustiveActor actor;
  oracles::TrueValueCritic critic({.gamma = 0.95, .lookahead_budget = toy.horizon}, oracles::TrueValueCritic::Continuation::Exhaustive);
  oracles::ScriptedGenerator gen;
  const Oracles o{{&actor}, &critic, &gen, nullptr};
  const PlannerConfig cfg{.width = 4, .breadth = breadth, .depth = depth};
  const auto menu = toy.menu;
  return plan_subgoal(episode_at(toy.scene), o, cfg, [menu](const auto&, const auto&) { return menu; });
}

}  // namespace hsp::testing
