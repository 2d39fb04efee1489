#include "hsp/planner.hpp"

#include <algorithm>
#include <cmath>

namespace hsp::planner {

using oracles::OracleContext;
using oracles::PredictedState;
using oracles::RolloutCandidate;
using world::SubGoal;

std::optional<std::string> validate(const PlannerConfig& cfg, std::size_t n_actors) {
  if (n_actors < 1 || n_actors > 2) return "need one or two actors";
  if (cfg.max_steps < 0 || cfg.max_replans < 0) return "budgets must be non-negative";
  if (cfg.greedy) return std::nullopt;
  if (cfg.width < 2 || cfg.width % 2 != 0) return "width must be even and at least 2";
  if (cfg.width % static_cast<int>(n_actors) != 0) return "width must split evenly across the actors";
  if (cfg.breadth < 1 || cfg.breadth > cfg.width) return "breadth must be in [1, width]";
  if (cfg.depth < 0) return "depth must be non-negative";
  return std::nullopt;
}

namespace {

struct Node {
  RolloutCandidate rollout;  // prefix from the root
  PredictedState state;      // state after the prefix
  prompts::History history;
  world::Observation observation;
};

/// Scores are compared at 1e-9 resolution so values that differ only by
/// rounding noise tie; ties go to the lexicographically smaller action list.
bool better(const Node& a, const Node& b) {
  const auto qa = std::llround(a.rollout.value * 1e9);
  const auto qb = std::llround(b.rollout.value * 1e9);
  if (qa != qb) return qa > qb;
  return a.rollout.actions() < b.rollout.actions();
}

std::vector<SubGoal> legal_at(const LegalFn& legal, const world::LatentState& s, const world::Observation& o) {
  return legal ? legal(s, o) : world::legal_subgoals(s, o);
}

OracleContext context_at(const EpisodeState& ep, const Node& node, const LegalFn& legal) {
  OracleContext ctx;
  ctx.task = ep.task;
  ctx.observation = node.observation;
  ctx.pddl_predicted = ep.pddl;
  ctx.legal = legal_at(legal, node.state.belief, node.observation);
  ctx.rng_seed = ep.rng_seed;
  ctx.belief = node.state.belief;
  ctx.history = node.history;
  return ctx;
}

Json actions_json(const RolloutCandidate& c) { return world::to_json(c.actions()); }

}  // namespace

SubGoal plan_subgoal(const EpisodeState& ep, const Oracles& oracles, const PlannerConfig& cfg, const LegalFn& legal,
                     Json* log) {
  if (auto err = validate(cfg, oracles.actors.size())) throw std::invalid_argument("planner: " + *err);

  Node root;
  root.state = {prompts::history_summary(ep.history), ep.sim, {}};
  root.history = ep.history;
  root.observation = ep.observation;
  const OracleContext root_ctx = context_at(ep, root, legal);

  if (cfg.greedy) {
    const SubGoal g = oracles.actors.front()->propose(root_ctx, 1).front();
    if (log) *log = {{"greedy", world::to_json(g)}};
    return g;
  }
  if (!oracles.critic || !oracles.generator) throw std::invalid_argument("planner: critic and generator required");

  const int per_actor = cfg.width / static_cast<int>(oracles.actors.size());
  std::vector<Node> frontier{root};
  Json rounds = Json::array();

  for (int u = 0; u <= cfg.depth; ++u) {
    std::vector<Node> scored;
    for (const auto& node : frontier) {
      const OracleContext ctx = context_at(ep, node, legal);
      std::vector<SubGoal> proposals;
      for (auto* actor : oracles.actors) {
        const auto p = actor->propose(ctx, per_actor);
        proposals.insert(proposals.end(), p.begin(), p.end());
      }
      for (const auto& a : proposals) {
        Node child;
        child.state = oracles.generator->next_state(ctx, node.state, a);
        child.rollout.prefix = node.rollout.prefix;
        child.rollout.prefix.push_back({node.state.summary, a});
        child.history = node.history;
        child.history.push_back({a, child.state.status});
        child.observation = world::merge(node.observation, world::observe(child.state.belief));
        child.rollout.value = oracles.critic->score(root_ctx, child.rollout);
        scored.push_back(std::move(child));
      }
    }
    std::stable_sort(scored.begin(), scored.end(), better);
    if (log) {
      Json cands = Json::array();
      for (std::size_t i = 0; i < scored.size(); ++i) {
        cands.push_back({{"actions", actions_json(scored[i].rollout)},
                         {"value", scored[i].rollout.value},
                         {"kept", i < static_cast<std::size_t>(cfg.breadth)}});
      }
      rounds.push_back({{"depth", u}, {"candidates", cands}});
    }
    scored.resize(std::min(scored.size(), static_cast<std::size_t>(cfg.breadth)));
    frontier = std::move(scored);
  }

  // The kept rollouts are judged again as whole rollouts.
  for (auto& node : frontier) node.rollout.value = oracles.critic->score(root_ctx, node.rollout);
  std::stable_sort(frontier.begin(), frontier.end(), better);
  const SubGoal chosen = frontier.front().rollout.prefix.front().goal;

  if (log) {
    Json finals = Json::array();
    for (const auto& node : frontier) {
      finals.push_back({{"actions", actions_json(node.rollout)}, {"value", node.rollout.value}});
    }
    *log = {{"rounds", rounds}, {"final", finals}, {"chosen", world::to_json(chosen)}};
  }
  return chosen;
}

EpisodeResult run_episode(const world::Scene& scene, const Oracles& oracles, const PlannerConfig& cfg,
                          std::uint64_t rng_seed, const LegalFn& legal) {
  if (!oracles.adapter) throw std::invalid_argument("planner: adapter required");
  EpisodeState ep;
  ep.task = scene.task;
  ep.sim = scene.state;
  ep.observation = world::observe(ep.sim);
  ep.rng_seed = rng_seed;

  EpisodeResult result;
  try {
    while (!world::evaluate(ep.task, ep.sim).success && ep.t < cfg.max_steps && ep.replans < cfg.max_replans) {
      ep.pddl = oracles.adapter->predict(
          {ep.task.instruction, ep.observation.visible_classes, ep.history, ep.task.pddl});
      Json decision;
      ep.current = plan_subgoal(ep, oracles, cfg, legal, &decision);
      ++ep.replans;
      decision["step"] = ep.t;
      decision["pddl"] = world::to_json(ep.pddl);
      result.decisions.push_back(std::move(decision));

      // One simulator transition stands in for the low-level controller, so
      // the sub-goal is finished or failed after a single step.
      const auto before = ep.observation;
      const auto status = world::step(ep.sim, *ep.current);
      ++ep.t;
      result.trajectory.push_back({before, *ep.current, status});
      ep.history.push_back({*ep.current, status});
      if (status.ok()) ep.completed.push_back(*ep.current);
      auto seen = world::observe(ep.sim);
      seen.last_status = status;
      seen.step = ep.t;
      ep.observation = world::merge(ep.observation, seen);
    }
  } catch (const oracles::OracleUnavailable& e) {
    result.aborted = true;
    result.abort_reason = e.what();
  }
  result.outcome = world::evaluate(ep.task, ep.sim);
  result.replans = ep.replans;
  return result;
}

Json to_json(const EpisodeResult& r) {
  Json traj = Json::array();
  for (const auto& s : r.trajectory) {
    traj.push_back({{"observation", world::to_json(s.observation)},
                    {"goal", world::to_json(s.goal)},
                    {"status", world::render(s.status)}});
  }
  Json j;
  j["outcome"] = world::to_json(r.outcome);
  j["replans"] = r.replans;
  j["aborted"] = r.aborted;
  if (r.aborted) j["abort_reason"] = r.abort_reason;
  j["trajectory"] = traj;
  return j;
}

}  // namespace hsp::planner
