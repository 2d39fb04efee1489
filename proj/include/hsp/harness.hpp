#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hsp/hindsight.hpp"
#include "hsp/planner.hpp"
#include "hsp/remote.hpp"

namespace hsp::harness {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleSettings {
  std::string backend = "scripted";  // scripted | remote
  std::string endpoint;
  std::string model = "gpt-4";
  int max_inflight = 4;
};

struct DataSettings {
  std::string pool_path;
  std::string out_dir = "out";
};

struct SplitSettings {
  int n_episodes = 10;  // per task type
  std::uint64_t seed_base = 100000;
  std::vector<world::TaskType> types;  // empty = all seven
};

struct Ablations {
  bool disable_adapter = false;
  bool disable_hindsight = false;
};

struct RunConfig {
  planner::PlannerConfig planner;
  oracles::EvalConfig eval;
  OracleSettings oracle;
  DataSettings data;
  SplitSettings split;
  Ablations ablations;
};

/// TOML with sections planner, eval, oracle, data, split, ablations. Unknown
/// keys and wrong types are errors that name the source, line and key.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::filesystem::path& path);
/// Fully resolved config as TOML; parsing it back gives the same config.
std::string to_toml(const RunConfig& cfg);
std::optional<std::string> validate(const RunConfig& cfg);
std::vector<world::TaskType> selected_types(const RunConfig& cfg);

/// p^T: success of T independent steps that each succeed with probability p.
double compound_success(double p, int steps);

// ---------------------------------------------------------------------------
// Episode logs and metrics
// ---------------------------------------------------------------------------

struct EpisodeLog {
  std::string scenario_id;
  world::TaskType task_type = world::TaskType::Pick;
  std::uint64_t seed = 0;
  bool success = false;
  double gc = 0.0;
  int length = 0;  // executed sub-goals
  int replans = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<world::SubGoal> trajectory;
  std::vector<world::Status> statuses;

  bool operator==(const EpisodeLog&) const = default;
};

Json to_json(const EpisodeLog& log);
EpisodeLog episode_log_from_json(const Json& j);
void write_jsonl(std::ostream& out, const std::vector<EpisodeLog>& logs);
/// Throws ParseError naming the 1-based line of the first malformed entry.
std::vector<EpisodeLog> read_jsonl(std::istream& in);

struct MetricsRow {
  int episodes = 0;
  double sr = 0.0;  // percent
  double gc = 0.0;  // percent
  double mean_length = 0.0;
  double mean_replans = 0.0;

  bool operator==(const MetricsRow&) const = default;
};

struct MetricsTable {
  std::vector<std::pair<world::TaskType, MetricsRow>> per_type;  // in task-type order, empty types omitted
  MetricsRow overall;
  int aborted = 0;  // excluded from every row

  bool operator==(const MetricsTable&) const = default;
};

MetricsTable metrics(const std::vector<EpisodeLog>& logs);
Json to_json(const MetricsTable& t);
/// Plain-text table for terminals.
std::string render(const MetricsTable& t);

// ---------------------------------------------------------------------------
// Running episodes
// ---------------------------------------------------------------------------

/// Owns the oracles of one episode.
struct OracleSet {
  std::vector<std::unique_ptr<oracles::ActorOracle>> actors;
  std::unique_ptr<oracles::CriticOracle> critic;
  std::unique_ptr<oracles::Generator> generator;
  std::unique_ptr<oracles::AdapterOracle> adapter;

  planner::Oracles view() const;
};

/// Oracles for one episode as configured: scripted or remote backend, with
/// the ablation switches applied. `client` is required for the remote
/// backend; `samples` feeds remote prompts.
OracleSet make_oracles(const RunConfig& cfg, remote::RemoteClient* client, const remote::SampleSource& samples,
                       const remote::Logger& log = {});

/// Seed of episode i of a type: seed_base + 1000 * type_index + i.
std::uint64_t episode_seed(const RunConfig& cfg, world::TaskType type, int i);

/// Runs every configured episode on `workers` threads. Results come back in
/// (type, index) order whatever the scheduling.
std::vector<EpisodeLog> deploy(const RunConfig& cfg, const retrieval::SamplePool& pool, int workers,
                               remote::RemoteClient* client = nullptr, const remote::Logger& log = {});

/// Runs fn(i) for i < n on a pool of worker threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// Collection logs
// ---------------------------------------------------------------------------

Json to_json(const hindsight::CollectedEpisode& ep);
hindsight::CollectedEpisode collected_from_json(const Json& j);

}  // namespace hsp::harness
