#include "hsp/harness.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <toml.hpp>

namespace hsp::harness {

using world::TaskType;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

namespace {

class ConfigReader {
 public:
  ConfigReader(const toml::table& root, std::string source) : root_(root), source_(std::move(source)) {}

  const toml::table* section(const std::string& name) {
    const auto* node = root_.get(name);
    if (!node) return nullptr;
    if (!node->is_table()) fail(*node, name, "expected a table");
    return node->as_table();
  }

  template <typename T>
  void read(const toml::table* sec, const std::string& section, const std::string& key, T& out) {
    if (!sec) return;
    const auto* node = sec->get(key);
    if (!node) return;
    const std::string full = section + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!node->is_boolean()) fail(*node, full, "expected true or false");
      out = **node->as_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!node->is_string()) fail(*node, full, "expected a string");
      out = **node->as_string();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (const auto v = node->value<double>()) {
        out = *v;
      } else {
        fail(*node, full, "expected a number");
      }
    } else {
      if (!node->is_integer()) fail(*node, full, "expected an integer");
      const auto v = **node->as_integer();
      if constexpr (std::is_unsigned_v<T>) {
        if (v < 0) fail(*node, full, "must be non-negative");
      }
      out = static_cast<T>(v);
    }
  }

  void read_types(const toml::table* sec, std::vector<TaskType>& out) {
    if (!sec) return;
    const auto* node = sec->get("types");
    if (!node) return;
    const auto* arr = node->as_array();
    if (!arr) fail(*node, "split.types", "expected an array of task types");
    out.clear();
    for (const auto& el : *arr) {
      const auto* s = el.as_string();
      const auto t = s ? world::parse_task_type(**s) : std::nullopt;
      if (!t) fail(el, "split.types", "unknown task type");
      out.push_back(*t);
    }
  }

  /// Every key must be one the reader knows.
  void check_keys(const std::map<std::string, std::set<std::string>>& known) {
    for (const auto& [k, node] : root_) {
      const std::string name(k.str());
      const auto it = known.find(name);
      if (it == known.end()) fail(node, name, "unknown section");
      if (const auto* t = node.as_table()) {
        for (const auto& [kk, inner] : *t) {
          if (!it->second.contains(std::string(kk.str()))) fail(inner, name + "." + std::string(kk.str()), "unknown key");
        }
      }
    }
  }

  [[noreturn]] void fail(const toml::node& node, const std::string& key, const std::string& what) const {
    const auto line = node.source().begin.line;
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + key + ": " + what);
  }

 private:
  const toml::table& root_;
  std::string source_;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"planner", {"width", "breadth", "depth", "k_actor", "k_adapter", "max_replans", "max_steps", "greedy"}},
      {"eval", {"gamma", "epsilon_noise", "lookahead_budget"}},
      {"oracle", {"backend", "endpoint", "model", "max_inflight"}},
      {"data", {"pool_path", "out_dir"}},
      {"split", {"n_episodes", "seed_base", "types"}},
      {"ablations", {"disable_adapter", "disable_hindsight"}},
  };
  return keys;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.source().begin.line) + ": " + std::string(e.description()));
  }
  ConfigReader r(root, source);
  r.check_keys(known_keys());

  RunConfig cfg;
  const auto* p = r.section("planner");
  r.read(p, "planner", "width", cfg.planner.width);
  r.read(p, "planner", "breadth", cfg.planner.breadth);
  r.read(p, "planner", "depth", cfg.planner.depth);
  r.read(p, "planner", "k_actor", cfg.planner.k_actor);
  r.read(p, "planner", "k_adapter", cfg.planner.k_adapter);
  r.read(p, "planner", "max_replans", cfg.planner.max_replans);
  r.read(p, "planner", "max_steps", cfg.planner.max_steps);
  r.read(p, "planner", "greedy", cfg.planner.greedy);

  const auto* e = r.section("eval");
  r.read(e, "eval", "gamma", cfg.eval.gamma);
  r.read(e, "eval", "epsilon_noise", cfg.eval.epsilon_noise);
  r.read(e, "eval", "lookahead_budget", cfg.eval.lookahead_budget);

  const auto* o = r.section("oracle");
  r.read(o, "oracle", "backend", cfg.oracle.backend);
  r.read(o, "oracle", "endpoint", cfg.oracle.endpoint);
  r.read(o, "oracle", "model", cfg.oracle.model);
  r.read(o, "oracle", "max_inflight", cfg.oracle.max_inflight);

  const auto* d = r.section("data");
  r.read(d, "data", "pool_path", cfg.data.pool_path);
  r.read(d, "data", "out_dir", cfg.data.out_dir);

  const auto* s = r.section("split");
  r.read(s, "split", "n_episodes", cfg.split.n_episodes);
  r.read(s, "split", "seed_base", cfg.split.seed_base);
  r.read_types(s, cfg.split.types);

  const auto* a = r.section("ablations");
  r.read(a, "ablations", "disable_adapter", cfg.ablations.disable_adapter);
  r.read(a, "ablations", "disable_hindsight", cfg.ablations.disable_hindsight);

  if (const auto err = validate(cfg)) throw ConfigError(source + ": " + *err);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string to_toml(const RunConfig& cfg) {
  toml::array types;
  for (auto t : cfg.split.types) types.push_back(std::string{world::name(t)});
  const toml::table root{
      {"planner", toml::table{{"width", cfg.planner.width},
                              {"breadth", cfg.planner.breadth},
                              {"depth", cfg.planner.depth},
                              {"k_actor", cfg.planner.k_actor},
                              {"k_adapter", cfg.planner.k_adapter},
                              {"max_replans", cfg.planner.max_replans},
                              {"max_steps", cfg.planner.max_steps},
                              {"greedy", cfg.planner.greedy}}},
      {"eval", toml::table{{"gamma", cfg.eval.gamma},
                           {"epsilon_noise", cfg.eval.epsilon_noise},
                           {"lookahead_budget", cfg.eval.lookahead_budget}}},
      {"oracle", toml::table{{"backend", cfg.oracle.backend},
                             {"endpoint", cfg.oracle.endpoint},
                             {"model", cfg.oracle.model},
                             {"max_inflight", cfg.oracle.max_inflight}}},
      {"data", toml::table{{"pool_path", cfg.data.pool_path}, {"out_dir", cfg.data.out_dir}}},
      {"split", toml::table{{"n_episodes", cfg.split.n_episodes},
                            {"seed_base", static_cast<std::int64_t>(cfg.split.seed_base)},
                            {"types", types}}},
      {"ablations", toml::table{{"disable_adapter", cfg.ablations.disable_adapter},
                                {"disable_hindsight", cfg.ablations.disable_hindsight}}},
  };
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

std::optional<std::string> validate(const RunConfig& cfg) {
  const std::size_t n_actors = cfg.ablations.disable_hindsight ? 1 : 2;
  if (auto err = planner::validate(cfg.planner, n_actors)) return "planner: " + *err;
  if (cfg.eval.gamma <= 0.0 || cfg.eval.gamma > 1.0) return "eval.gamma must be in (0, 1]";
  if (cfg.eval.epsilon_noise < 0.0 || cfg.eval.epsilon_noise > 1.0) return "eval.epsilon_noise must be in [0, 1]";
  if (cfg.oracle.backend != "scripted" && cfg.oracle.backend != "remote") {
    return "oracle.backend must be scripted or remote";
  }
  if (cfg.oracle.max_inflight < 1) return "oracle.max_inflight must be at least 1";
  if (cfg.split.n_episodes < 1) return "split.n_episodes must be at least 1";
  // TOML integers are signed 64-bit.
  if (cfg.split.seed_base > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    return "split.seed_base must be below 2^63";
  }
  return std::nullopt;
}

std::vector<TaskType> selected_types(const RunConfig& cfg) {
  if (!cfg.split.types.empty()) return cfg.split.types;
  const auto all = world::all_task_types();
  return {all.begin(), all.end()};
}

double compound_success(double p, int steps) { return std::pow(p, steps); }

// ---------------------------------------------------------------------------
// Logs and metrics
// ---------------------------------------------------------------------------

Json to_json(const EpisodeLog& log) {
  Json statuses = Json::array();
  for (const auto& s : log.statuses) statuses.push_back(world::render(s));
  Json j;
  j["scenario_id"] = log.scenario_id;
  j["task_type"] = world::name(log.task_type);
  j["seed"] = log.seed;
  j["success"] = log.success;
  j["gc"] = log.gc;
  j["length"] = log.length;
  j["replans"] = log.replans;
  j["aborted"] = log.aborted;
  if (log.aborted) j["abort_reason"] = log.abort_reason;
  j["trajectory"] = world::to_json(log.trajectory);
  j["statuses"] = statuses;
  return j;
}

EpisodeLog episode_log_from_json(const Json& j) {
  EpisodeLog log;
  try {
    log.scenario_id = j.at("scenario_id").get<std::string>();
    const auto type = world::parse_task_type(j.at("task_type").get<std::string>());
    if (!type) throw ParseError("unknown task_type");
    log.task_type = *type;
    log.seed = j.at("seed").get<std::uint64_t>();
    log.success = j.at("success").get<bool>();
    log.gc = j.at("gc").get<double>();
    log.length = j.at("length").get<int>();
    log.replans = j.at("replans").get<int>();
    log.aborted = j.at("aborted").get<bool>();
    if (log.aborted) log.abort_reason = j.value("abort_reason", "");
    if (j.contains("trajectory")) log.trajectory = world::subgoals_from_json(j.at("trajectory"));
    if (j.contains("statuses")) {
      for (const auto& s : j.at("statuses")) {
        const auto st = world::parse_status(s.get<std::string>());
        if (!st) throw ParseError("bad status");
        log.statuses.push_back(*st);
      }
    }
  } catch (const Json::exception& e) {
    throw ParseError(e.what());
  }
  if (log.gc < 0.0 || log.gc > 1.0) throw ParseError("gc out of range");
  return log;
}

void write_jsonl(std::ostream& out, const std::vector<EpisodeLog>& logs) {
  for (const auto& l : logs) out << to_json(l).dump() << "\n";
}

std::vector<EpisodeLog> read_jsonl(std::istream& in) {
  std::vector<EpisodeLog> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(episode_log_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

struct Accum {
  int n = 0, success = 0;
  double gc = 0.0, length = 0.0, replans = 0.0;

  void add(const EpisodeLog& l) {
    ++n;
    success += l.success;
    gc += l.gc;
    length += l.length;
    replans += l.replans;
  }
  MetricsRow row() const {
    const double d = n;
    return {n, 100.0 * success / d, 100.0 * gc / d, length / d, replans / d};
  }
};

}  // namespace

MetricsTable metrics(const std::vector<EpisodeLog>& logs) {
  MetricsTable t;
  std::map<TaskType, Accum> by_type;
  Accum all;
  for (const auto& l : logs) {
    if (l.aborted) {
      ++t.aborted;
      continue;
    }
    by_type[l.task_type].add(l);
    all.add(l);
  }
  for (auto type : world::all_task_types()) {
    const auto it = by_type.find(type);
    if (it != by_type.end()) t.per_type.emplace_back(type, it->second.row());
  }
  if (all.n) t.overall = all.row();
  return t;
}

namespace {

Json row_json(const MetricsRow& r) {
  return {{"episodes", r.episodes}, {"sr", r.sr}, {"gc", r.gc}, {"mean_length", r.mean_length},
          {"mean_replans", r.mean_replans}};
}

}  // namespace

Json to_json(const MetricsTable& t) {
  Json per = Json::object();
  for (const auto& [type, row] : t.per_type) per[std::string{world::name(type)}] = row_json(row);
  return {{"per_type", per}, {"overall", row_json(t.overall)}, {"aborted", t.aborted}};
}

std::string render(const MetricsTable& t) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(10) << "type" << std::right << std::setw(8) << "n" << std::setw(9) << "SR"
      << std::setw(9) << "GC" << std::setw(9) << "len" << std::setw(9) << "replans" << "\n";
  auto line = [&](std::string_view name, const MetricsRow& r) {
    out << std::left << std::setw(10) << name << std::right << std::setw(8) << r.episodes << std::setw(9) << r.sr
        << std::setw(9) << r.gc << std::setw(9) << r.mean_length << std::setw(9) << r.mean_replans << "\n";
  };
  for (const auto& [type, row] : t.per_type) line(world::name(type), row);
  line("overall", t.overall);
  if (t.aborted) out << "aborted: " << t.aborted << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Running episodes
// ---------------------------------------------------------------------------

planner::Oracles OracleSet::view() const {
  planner::Oracles o;
  for (const auto& a : actors) o.actors.push_back(a.get());
  o.critic = critic.get();
  o.generator = generator.get();
  o.adapter = adapter.get();
  return o;
}

OracleSet make_oracles(const RunConfig& cfg, remote::RemoteClient* client, const remote::SampleSource& samples,
                       const remote::Logger& log) {
  OracleSet set;
  if (cfg.oracle.backend == "remote") {
    if (!client) throw std::invalid_argument("remote backend needs a client");
    const remote::SampleSource actor_samples{samples.pool, static_cast<std::size_t>(cfg.planner.k_actor),
                                             samples.exclude_sources};
    const remote::SampleSource adapter_samples{samples.pool, static_cast<std::size_t>(cfg.planner.k_adapter),
                                               samples.exclude_sources};
    set.actors.push_back(std::make_unique<remote::RemoteActor>(*client, prompts::Role::ActorGt, actor_samples, log));
    if (!cfg.ablations.disable_hindsight) {
      set.actors.push_back(
          std::make_unique<remote::RemoteActor>(*client, prompts::Role::ActorHind, actor_samples, log));
    }
    set.critic = std::make_unique<remote::RemoteCritic>(*client, actor_samples, log);
    set.generator = std::make_unique<remote::RemoteGenerator>(*client);
    if (cfg.ablations.disable_adapter) {
      set.adapter = std::make_unique<oracles::DefaultAdapter>();
    } else {
      set.adapter = std::make_unique<remote::RemoteAdapter>(*client, adapter_samples, log);
    }
    return set;
  }

  using oracles::ScriptedActor;
  const double eps = cfg.eval.epsilon_noise;
  set.actors.push_back(std::make_unique<ScriptedActor>(ScriptedActor::Kind::GroundTruth, eps));
  if (!cfg.ablations.disable_hindsight) {
    set.actors.push_back(std::make_unique<ScriptedActor>(ScriptedActor::Kind::Hindsight, eps));
  }
  set.critic = std::make_unique<oracles::TrueValueCritic>(cfg.eval);
  set.generator = std::make_unique<oracles::ScriptedGenerator>();
  if (cfg.ablations.disable_adapter) {
    set.adapter = std::make_unique<oracles::DefaultAdapter>();
  } else {
    set.adapter = std::make_unique<oracles::ScriptedAdapter>();
  }
  return set;
}

std::uint64_t episode_seed(const RunConfig& cfg, TaskType type, int i) {
  const auto all = world::all_task_types();
  const auto idx = static_cast<std::uint64_t>(std::find(all.begin(), all.end(), type) - all.begin());
  return cfg.split.seed_base + 1000 * idx + static_cast<std::uint64_t>(i);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(std::max(workers, 1), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::vector<EpisodeLog> deploy(const RunConfig& cfg, const retrieval::SamplePool& pool, int workers,
                               remote::RemoteClient* client, const remote::Logger& log) {
  if (auto err = validate(cfg)) throw ConfigError(*err);
  std::vector<std::pair<TaskType, int>> jobs;
  for (auto type : selected_types(cfg)) {
    for (int i = 0; i < cfg.split.n_episodes; ++i) jobs.emplace_back(type, i);
  }
  std::vector<EpisodeLog> logs(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto [type, i] = jobs[j];
    const auto seed = episode_seed(cfg, type, i);
    const auto id = hindsight::scenario_id(type, seed);
    const auto scene = world::generate_task(seed, type);
    const auto oracles = make_oracles(cfg, client, {&pool, 0, {id}}, log);
    const auto run = planner::run_episode(scene, oracles.view(), cfg.planner, seed);

    EpisodeLog& l = logs[j];
    l.scenario_id = id;
    l.task_type = type;
    l.seed = seed;
    l.success = run.outcome.success;
    l.gc = run.outcome.gc;
    l.length = static_cast<int>(run.trajectory.size());
    l.replans = run.replans;
    l.aborted = run.aborted;
    l.abort_reason = run.abort_reason;
    for (const auto& s : run.trajectory) {
      l.trajectory.push_back(s.goal);
      l.statuses.push_back(s.status);
    }
  });
  return logs;
}

// ---------------------------------------------------------------------------
// Collection logs
// ---------------------------------------------------------------------------

Json to_json(const hindsight::CollectedEpisode& ep) {
  return {{"scenario_id", ep.scenario_id},
          {"task", world::to_json(ep.task)},
          {"trajectory", world::to_json(ep.trajectory)},
          {"success", ep.outcome.success},
          {"gc", ep.outcome.gc},
          {"aborted", ep.aborted},
          {"accepted", ep.accepted},
          {"icl_sources", ep.icl_sources}};
}

hindsight::CollectedEpisode collected_from_json(const Json& j) {
  hindsight::CollectedEpisode ep;
  try {
    ep.scenario_id = j.at("scenario_id").get<std::string>();
    ep.task = world::pddl_from_json(j.at("task"));
    ep.trajectory = world::subgoals_from_json(j.at("trajectory"));
    ep.outcome.success = j.at("success").get<bool>();
    ep.outcome.gc = j.at("gc").get<double>();
    ep.aborted = j.at("aborted").get<bool>();
    ep.accepted = j.at("accepted").get<bool>();
    ep.icl_sources = j.at("icl_sources").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw ParseError(e.what());
  }
  return ep;
}

}  // namespace hsp::harness
