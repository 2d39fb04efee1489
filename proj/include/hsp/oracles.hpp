#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsp/prompts.hpp"
#include "hsp/world.hpp"

namespace hsp::oracles {

/// Transport failure after all retries; the episode is aborted, not failed.
class OracleUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvalConfig {
  double gamma = 0.95;
  double epsilon_noise = 0.0;
  int lookahead_budget = 0;
};

/// Everything an oracle may look at when asked about one search node.
///
/// `belief` is the latent state at that node. Scripted backends read it
/// directly (their privileged view); remote backends see only the prompt
/// material (task text, observation, predicted arguments, history).
struct OracleContext {
  world::TaskSpec task;
  world::Observation observation;
  world::PddlArgs pddl_predicted;
  std::vector<world::SubGoal> legal;
  std::uint64_t rng_seed = 0;
  world::LatentState belief;
  prompts::History history;
};

/// Generator output: a text summary plus the belief it was derived from.
struct PredictedState {
  std::string summary;
  world::LatentState belief;
  world::Status status;
};

struct RolloutStep {
  std::string summary;  // predicted state the action is taken from
  world::SubGoal goal;
};

struct RolloutCandidate {
  std::vector<RolloutStep> prefix;
  double value = 0.0;

  std::vector<world::SubGoal> actions() const;
};

class ActorOracle {
 public:
  virtual ~ActorOracle() = default;
  /// Exactly m sub-goals, each an element of ctx.legal.
  virtual std::vector<world::SubGoal> propose(const OracleContext& ctx, int m) = 0;
  virtual std::string name() const = 0;
};

class CriticOracle {
 public:
  virtual ~CriticOracle() = default;
  /// Higher is better. `ctx` describes the node the prefix starts from.
  virtual double score(const OracleContext& ctx, const RolloutCandidate& candidate) = 0;
};

struct AdapterQuery {
  std::string instruction;
  std::vector<world::ObjectClass> object_list;
  prompts::History history;
  /// The real arguments; only the ground-truth adapter reads them.
  std::optional<world::PddlArgs> truth;
};

class AdapterOracle {
 public:
  virtual ~AdapterOracle() = default;
  virtual world::PddlArgs predict(const AdapterQuery& q) = 0;
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual PredictedState next_state(const OracleContext& ctx, const PredictedState& current,
                                    const world::SubGoal& g) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backends
// ---------------------------------------------------------------------------

/// Keyword reading of an instruction. Class mentions resolve to a visible
/// candidate when there is one; object mentions are restricted to visible
/// classes once any of them has been seen.
world::PddlArgs infer_pddl(std::string_view instruction, const std::vector<world::ObjectClass>& visible);

/// Arguments used when the adapter is switched off: the first class named in
/// the instruction as object_target, everything else left at its default.
world::PddlArgs default_pddl(std::string_view instruction);

/// Expert-driven actor. With probability epsilon each proposal is replaced by
/// a uniformly drawn legal sub-goal (seeded from the context).
class ScriptedActor : public ActorOracle {
 public:
  enum class Kind { Hindsight, GroundTruth };

  ScriptedActor(Kind kind, double epsilon) : kind_(kind), epsilon_(epsilon) {}
  std::vector<world::SubGoal> propose(const OracleContext& ctx, int m) override;
  std::string name() const override;

  /// The noise-free choice for a context.
  world::SubGoal policy(const OracleContext& ctx) const;

 private:
  Kind kind_;
  double epsilon_;
};

/// Proposes the legal list in order, wrapping around: legal[i % n].
class ExhaustiveActor : public ActorOracle {
 public:
  std::vector<world::SubGoal> propose(const OracleContext& ctx, int m) override;
  std::string name() const override { return "exhaustive"; }
};

/// Discounted true reward of the prefix on the real task (gc gain per step,
/// +1 on reaching success; success is absorbing), plus a continuation value:
/// nothing, the best continuation over ctx.legal up to the lookahead horizon,
/// or the value of following the expert.
class TrueValueCritic : public CriticOracle {
 public:
  enum class Continuation { None, Exhaustive, Expert };

  explicit TrueValueCritic(EvalConfig cfg, Continuation mode = Continuation::Expert) : cfg_(cfg), mode_(mode) {}
  double score(const OracleContext& ctx, const RolloutCandidate& candidate) override;

 private:
  EvalConfig cfg_;
  Continuation mode_;
};

/// Discounted return of an action sequence from a state, truncated at
/// `horizon` steps (negative = no truncation).
double discounted_return(const world::PddlArgs& goal, const world::LatentState& start,
                         const std::vector<world::SubGoal>& actions, double gamma, int horizon = -1);

class ScriptedAdapter : public AdapterOracle {
 public:
  world::PddlArgs predict(const AdapterQuery& q) override { return infer_pddl(q.instruction, q.object_list); }
};

class GroundTruthAdapter : public AdapterOracle {
 public:
  world::PddlArgs predict(const AdapterQuery& q) override;
};

class DefaultAdapter : public AdapterOracle {
 public:
  world::PddlArgs predict(const AdapterQuery& q) override { return default_pddl(q.instruction); }
};

/// Replays the transition table on the belief.
class ScriptedGenerator : public Generator {
 public:
  PredictedState next_state(const OracleContext& ctx, const PredictedState& current,
                            const world::SubGoal& g) override;
};

}  // namespace hsp::oracles
