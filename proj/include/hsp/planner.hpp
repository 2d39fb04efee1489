#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsp/oracles.hpp"
#include "hsp/serialize.hpp"

namespace hsp::planner {

struct PlannerConfig {
  int width = 2;    // W: proposals per frontier state, split evenly across actors
  int breadth = 2;  // B: tuples kept per depth
  int depth = 2;    // U: search runs for depths 0..U
  int k_actor = 2;
  int k_adapter = 5;
  int max_replans = 30;
  int max_steps = 60;
  /// Single proposal from the first actor, no critic (the greedy baseline).
  bool greedy = false;
};

/// Empty when the configuration is usable with `n_actors` actors.
std::optional<std::string> validate(const PlannerConfig& cfg, std::size_t n_actors);

/// Legal sub-goals at a search node; defaults to world::legal_subgoals.
using LegalFn = std::function<std::vector<world::SubGoal>(const world::LatentState&, const world::Observation&)>;

struct EpisodeState {
  world::TaskSpec task;
  world::LatentState sim;
  world::Observation observation;  // everything seen so far
  std::vector<world::SubGoal> completed;  // G
  prompts::History history;               // every executed sub-goal with its status
  std::optional<world::SubGoal> current;  // S_k
  world::PddlArgs pddl;                   // latest adapter prediction
  int t = 0;
  int replans = 0;
  std::uint64_t rng_seed = 0;
};

struct Oracles {
  std::vector<oracles::ActorOracle*> actors;
  oracles::CriticOracle* critic = nullptr;
  oracles::Generator* generator = nullptr;
  oracles::AdapterOracle* adapter = nullptr;
};

/// Beam search over sub-goals. Returns the first action of the best rollout;
/// `log` (when given) receives every scored candidate.
world::SubGoal plan_subgoal(const EpisodeState& ep, const Oracles& oracles, const PlannerConfig& cfg,
                            const LegalFn& legal = {}, Json* log = nullptr);

struct TrajectoryStep {
  world::Observation observation;  // before the sub-goal
  world::SubGoal goal;
  world::Status status;
};

struct EpisodeResult {
  world::Outcome outcome;
  std::vector<TrajectoryStep> trajectory;
  int replans = 0;
  bool aborted = false;  // an oracle became unavailable
  std::string abort_reason;
  std::vector<Json> decisions;
};

/// Closed loop: adapter, plan, execute one sub-goal, repeat until success or
/// a budget runs out.
EpisodeResult run_episode(const world::Scene& scene, const Oracles& oracles, const PlannerConfig& cfg,
                          std::uint64_t rng_seed, const LegalFn& legal = {});

Json to_json(const EpisodeResult& r);

}  // namespace hsp::planner
