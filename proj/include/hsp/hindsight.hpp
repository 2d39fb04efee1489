#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hsp/planner.hpp"
#include "hsp/remote.hpp"
#include "hsp/retrieval.hpp"

namespace hsp::hindsight {

/// A training scenario; `id` is "<Type>-<seed>" and doubles as the
/// source_task_id of every record derived from it.
struct Scenario {
  std::string id;
  world::Scene scene;
};

std::string scenario_id(world::TaskType type, std::uint64_t seed);
/// Rebuilds the scene behind an id; throws ParseError on a malformed id.
Scenario scenario_from_id(const std::string& id);
/// Seeds seed_base + 1000 * type_index + i for i < per_type.
std::vector<Scenario> training_scenarios(int per_type, std::uint64_t seed_base);

/// "gt-<id>" with the expert rollout, and "adapter-<id>" for the adapter.
retrieval::SampleRecord gt_record(const Scenario& s);
retrieval::SampleRecord adapter_record(const Scenario& s);
retrieval::SamplePool build_gt_pool(const std::vector<Scenario>& scenarios);

/// Goal predicates (described as text) that hold after replaying the
/// trajectory from the scenario's initial state.
using InformationStatistic = std::set<std::string>;
InformationStatistic information_statistic(const world::Scene& scene, const std::vector<world::SubGoal>& trajectory);

enum class Verdict : std::uint8_t { Bad, Acceptable, Optimal };
std::string_view name(Verdict v);

struct RelabelInput {
  world::Scene scene;  // initial state and true task
  std::string renamed_task;
  std::vector<world::SubGoal> reference;   // ground-truth rollout
  std::vector<world::SubGoal> suboptimal;  // what the agent did
};

struct ActorRelabel {
  std::string think;
  std::vector<world::SubGoal> completed;  // suboptimal + appended suffix
  bool valid = false;                     // prefix kept and replay succeeds
  std::string raw;                        // backend output, for rejection reports
};

struct CriticRelabel {
  std::string critique;  // ends with a verdict line
  std::optional<Verdict> verdict;
};

class Relabeler {
 public:
  virtual ~Relabeler() = default;
  virtual ActorRelabel relabel_actor(const RelabelInput& in) = 0;
  virtual CriticRelabel relabel_critic(const RelabelInput& in) = 0;
};

/// Diagnoses the replayed state and appends the expert's completion.
class ScriptedRelabeler : public Relabeler {
 public:
  ActorRelabel relabel_actor(const RelabelInput& in) override;
  CriticRelabel relabel_critic(const RelabelInput& in) override;
};

/// Think and Complete chat calls for actors, one call for critics. The
/// completion is canonicalized line by line and checked by replay.
class RemoteRelabeler : public Relabeler {
 public:
  explicit RemoteRelabeler(remote::RemoteClient& client) : client_(client) {}
  ActorRelabel relabel_actor(const RelabelInput& in) override;
  CriticRelabel relabel_critic(const RelabelInput& in) override;

 private:
  remote::RemoteClient& client_;
};

/// Replay check shared by every backend.
bool relabel_valid(const RelabelInput& in, const std::vector<world::SubGoal>& completed);

/// Every kind-compatible sub-goal over the classes present in a scene.
std::vector<world::SubGoal> scene_subgoals(const world::LatentState& s);

/// HER-style goal: the task the trajectory actually accomplished.
world::PddlArgs her_relabel(const world::Scene& scene, const std::vector<world::SubGoal>& trajectory);

/// Runs the agent on one scenario; the sample source already excludes the
/// scenario's own records.
using AgentFn = std::function<planner::EpisodeResult(const Scenario&, const remote::SampleSource&)>;

/// Greedy ground-truth scripted actor with proposal noise and the scripted
/// adapter; seeds derive from `seed` and the scenario id.
AgentFn scripted_agent(double noise, std::uint64_t seed, planner::PlannerConfig cfg = {.greedy = true});

struct CollectedEpisode {
  std::string scenario_id;
  world::PddlArgs task;
  std::vector<world::SubGoal> trajectory;
  world::Outcome outcome;
  bool aborted = false;
  bool accepted = false;
  std::vector<std::string> icl_sources;  // sources of the samples the agent could see
};

struct CollectResult {
  retrieval::SamplePool pool;  // gt records plus accepted hindsight records
  std::vector<CollectedEpisode> episodes;
  std::vector<Json> rejections;  // {scenario_id, reason, raw_relabel}
};

/// The collection phase: every gt record in `gt_pool` becomes a scenario, the
/// agent runs on it, and valid relabels join the pool.
CollectResult collect(const retrieval::SamplePool& gt_pool, const AgentFn& agent, Relabeler& relabeler,
                      std::size_t k = 2);

struct DistributionReport {
  std::map<std::string, int> original, completion, her;
  double kl_completion = 0.0;
  double kl_her = 0.0;
};

/// Histograms over (task_type, object_state, two_object) for the tasks of the
/// collected episodes, their completion relabels and their HER relabels.
DistributionReport distribution_report(const std::vector<CollectedEpisode>& episodes);
/// KL(q || p) over the union of bins, with empty bins smoothed by eps.
double kl_divergence(const std::map<std::string, int>& q, const std::map<std::string, int>& p, double eps = 1e-9);
Json to_json(const DistributionReport& r);

}  // namespace hsp::hindsight
