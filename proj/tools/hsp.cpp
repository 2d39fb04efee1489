// Command-line front end: collect, deploy, eval, ablate, oracle-check,
// report-shift and mock-server.

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <pthread.h>
#include <fstream>
#include <iostream>
#include <mutex>

#include "hsp/harness.hpp"
#include "hsp/mock_server.hpp"
#include "hsp/rng.hpp"

using namespace hsp;
using namespace hsp::harness;
namespace fs = std::filesystem;

namespace {

/// Flags shared by the commands that run episodes. Unset flags leave the
/// config value alone.
struct Overrides {
  std::string config;
  std::optional<std::string> backend, endpoint, model, pool, out;
  std::optional<int> episodes, max_inflight;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise;
  std::vector<std::string> types;
  int workers = 1;
  bool strict = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "TOML run configuration");
    cmd->add_option("--backend", backend, "scripted or remote");
    cmd->add_option("--endpoint", endpoint, "base URL of an OpenAI-compatible server");
    cmd->add_option("--model", model);
    cmd->add_option("--max-inflight", max_inflight);
    cmd->add_option("--pool", pool, "sample pool (JSONL)");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--episodes", episodes, "episodes per task type");
    cmd->add_option("--types", types, "task types to run")->delimiter(',');
    cmd->add_option("--seed", seed, "seed base");
    cmd->add_option("--noise", noise, "probability that a proposal is replaced at random");
    cmd->add_option("--workers", workers, "episodes run in parallel")->check(CLI::PositiveNumber);
    cmd->add_flag("--strict", strict, "exit non-zero if any episode aborted");
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    if (backend) cfg.oracle.backend = *backend;
    if (endpoint) cfg.oracle.endpoint = *endpoint;
    if (model) cfg.oracle.model = *model;
    if (max_inflight) cfg.oracle.max_inflight = *max_inflight;
    if (pool) cfg.data.pool_path = *pool;
    if (out) cfg.data.out_dir = *out;
    if (episodes) cfg.split.n_episodes = *episodes;
    if (seed) cfg.split.seed_base = *seed;
    if (noise) cfg.eval.epsilon_noise = *noise;
    if (!types.empty()) {
      cfg.split.types.clear();
      for (const auto& t : types) {
        const auto parsed = world::parse_task_type(t);
        if (!parsed) throw ConfigError("--types: unknown task type " + t);
        cfg.split.types.push_back(*parsed);
      }
    }
    if (auto err = validate(cfg)) throw ConfigError(*err);
    return cfg;
  }
};

/// Thread-safe JSONL sink for oracle events; the file is only created for
/// the remote backend.
class EventLog {
 public:
  EventLog(const RunConfig& cfg, const fs::path& path) {
    if (cfg.oracle.backend == "remote") out_.open(path, std::ios::app);
  }
  remote::Logger logger() {
    if (!out_.is_open()) return {};
    return [this](const Json& e) {
      std::lock_guard lock(mu_);
      out_ << e.dump() << "\n";
    };
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

std::unique_ptr<remote::RemoteClient> client_for(const RunConfig& cfg, const remote::Logger& log) {
  if (cfg.oracle.backend != "remote") return nullptr;
  remote::RemoteConfig rc;
  rc.endpoint = cfg.oracle.endpoint;
  rc.model = cfg.oracle.model;
  rc.max_in_flight = cfg.oracle.max_inflight;
  rc.api_key = remote::api_key_from_env();
  if (rc.api_key.empty()) throw ConfigError(std::string("set ") + remote::kApiKeyEnv + " for the remote backend");
  return std::make_unique<remote::RemoteClient>(rc, log);
}

retrieval::SamplePool load_pool(const RunConfig& cfg, bool required) {
  if (cfg.data.pool_path.empty()) {
    if (required) throw ConfigError("data.pool_path is required for the remote backend");
    return retrieval::SamplePool{};
  }
  if (!fs::exists(cfg.data.pool_path)) throw ConfigError("pool file not found: " + cfg.data.pool_path);
  return retrieval::SamplePool::load_jsonl(cfg.data.pool_path);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string metrics_text(const MetricsTable& t) { return to_json(t).dump(2) + "\n"; }

int aborted_exit(bool strict, int aborted) {
  if (aborted) std::cerr << aborted << " episode(s) aborted: oracle unavailable\n";
  return strict && aborted ? 3 : 0;
}

/// Runs the configured episodes and writes config echo, logs and metrics.
MetricsTable run_and_record(const RunConfig& cfg, int workers, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "config.toml", to_toml(cfg));
  const auto pool = load_pool(cfg, cfg.oracle.backend == "remote");
  EventLog events(cfg, dir / "oracle_events.jsonl");
  const auto client = client_for(cfg, events.logger());
  const auto logs = deploy(cfg, pool, workers, client.get(), events.logger());
  std::ofstream out(dir / "episodes.jsonl", std::ios::binary);
  write_jsonl(out, logs);
  const auto table = metrics(logs);
  write_file(dir / "metrics.json", metrics_text(table));
  return table;
}

int cmd_deploy(const Overrides& o) {
  const auto cfg = o.resolve();
  const auto table = run_and_record(cfg, o.workers, cfg.data.out_dir);
  std::cout << render(table);
  return aborted_exit(o.strict, table.aborted);
}

int cmd_eval(const std::string& logs_path) {
  std::ifstream in(logs_path);
  if (!in) throw ConfigError("cannot open " + logs_path);
  std::cout << metrics_text(metrics(read_jsonl(in)));
  return 0;
}

int cmd_ablate(const Overrides& o, bool disable_adapter, bool disable_hindsight) {
  auto base = o.resolve();
  base.ablations = {};
  const fs::path dir = base.data.out_dir;
  Json report;
  const auto base_table = run_and_record(base, o.workers, dir / "base");
  report["base"] = to_json(base_table);
  int aborted = base_table.aborted;
  std::cout << "base SR " << base_table.overall.sr << "\n";

  auto variant = [&](const std::string& name, Ablations a) {
    auto cfg = base;
    cfg.ablations = a;
    const auto t = run_and_record(cfg, o.workers, dir / name);
    report[name] = to_json(t);
    aborted += t.aborted;
    std::cout << name << " SR " << t.overall.sr << "\n";
  };
  if (disable_adapter) variant("disable_adapter", {.disable_adapter = true});
  if (disable_hindsight) variant("disable_hindsight", {.disable_hindsight = true});
  write_file(dir / "ablation.json", report.dump(2) + "\n");
  return aborted_exit(o.strict, aborted);
}

int cmd_collect(const Overrides& o, int per_type, std::size_t k) {
  const auto cfg = o.resolve();
  const fs::path dir = cfg.data.out_dir;
  fs::create_directories(dir);
  write_file(dir / "config.toml", to_toml(cfg));
  EventLog events(cfg, dir / "oracle_events.jsonl");
  const auto client = client_for(cfg, events.logger());

  // Training scenarios start at seed 0 unless --seed says otherwise, which
  // keeps them apart from the evaluation seeds (split.seed_base).
  const std::uint64_t train_base = o.seed.value_or(0);
  const auto gt = hindsight::build_gt_pool(hindsight::training_scenarios(per_type, train_base));
  hindsight::CollectResult res;
  if (client) {
    hindsight::RemoteRelabeler relabeler(*client);
    auto agent = [&](const hindsight::Scenario& sc, const remote::SampleSource& src) {
      const auto set = make_oracles(cfg, client.get(), src, events.logger());
      return planner::run_episode(sc.scene, set.view(), cfg.planner,
                                  mix(train_base, retrieval::stable_hash(sc.id)));
    };
    res = hindsight::collect(gt, agent, relabeler, k);
  } else {
    hindsight::ScriptedRelabeler relabeler;
    res = hindsight::collect(gt, hindsight::scripted_agent(cfg.eval.epsilon_noise, train_base), relabeler,
                             k);
  }
  res.pool.save_jsonl(dir / "pool.jsonl");
  std::ofstream eps(dir / "collect_episodes.jsonl", std::ios::binary);
  for (const auto& ep : res.episodes) eps << to_json(ep).dump() << "\n";
  std::ofstream rej(dir / "rejections.jsonl", std::ios::binary);
  for (const auto& r : res.rejections) rej << r.dump() << "\n";
  const auto report = hindsight::distribution_report(res.episodes);
  write_file(dir / "shift.json", to_json(report).dump(2) + "\n");

  int accepted = 0, aborted = 0;
  for (const auto& ep : res.episodes) {
    accepted += ep.accepted;
    aborted += ep.aborted;
  }
  std::cout << "scenarios " << res.episodes.size() << ", accepted " << accepted << ", rejected "
            << res.rejections.size() << ", pool " << res.pool.size() << " records\n"
            << "kl_completion " << report.kl_completion << ", kl_her " << report.kl_her << "\n";
  return aborted_exit(o.strict, aborted);
}

int cmd_report_shift(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<hindsight::CollectedEpisode> episodes;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      episodes.push_back(collected_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path + ": line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::cout << to_json(hindsight::distribution_report(episodes)).dump(2) << "\n";
  return 0;
}

int cmd_oracle_check(const Overrides& o) {
  auto cfg = o.resolve();
  cfg.oracle.backend = "remote";
  const auto client = client_for(cfg, {});
  const auto start = std::chrono::steady_clock::now();
  try {
    const auto reply = client->complete("You are a connectivity check.", "Reply with the single word ok.");
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::cout << "ok " << ms << " ms: " << reply << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "oracle unavailable: " << e.what() << "\n";
    return 1;
  }
}

int cmd_mock_server(const std::string& script, int port) {
  std::vector<remote::MockRoute> routes;
  if (script.empty()) {
    routes.push_back({"", {remote::MockReply{.content = "ok"}}, true});
  } else {
    std::ifstream in(script);
    if (!in) throw ConfigError("cannot open " + script);
    routes = remote::routes_from_json(Json::parse(in));
  }
  // Block the stop signals before the server threads start so that only
  // sigwait below sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  remote::MockServer server(std::move(routes), port);
  std::cout << "listening on " << server.endpoint() << std::endl;
  int sig = 0;
  sigwait(&stop_signals, &sig);
  server.stop();
  std::cout << "served " << server.requests().size() << " request(s)" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hindsight planning over a symbolic household simulator"};
  app.require_subcommand(1);

  Overrides deploy_o, ablate_o, collect_o, check_o;
  auto* deploy_cmd = app.add_subcommand("deploy", "run evaluation episodes");
  deploy_o.attach(deploy_cmd);

  std::string logs_path;
  auto* eval_cmd = app.add_subcommand("eval", "recompute metrics from episode logs");
  eval_cmd->add_option("logs", logs_path, "episodes.jsonl written by deploy")->required();

  bool disable_adapter = false, disable_hindsight = false;
  auto* ablate_cmd = app.add_subcommand("ablate", "deploy with components switched off, on paired seeds");
  ablate_o.attach(ablate_cmd);
  ablate_cmd->add_flag("--disable-adapter", disable_adapter, "replace the adapter with instruction defaults");
  ablate_cmd->add_flag("--disable-hindsight", disable_hindsight, "keep only the ground-truth actor");

  int per_type = 20;
  std::size_t k = 2;
  auto* collect_cmd = app.add_subcommand("collect", "run training scenarios and relabel them into a pool");
  collect_o.attach(collect_cmd);
  collect_cmd->add_option("--per-type", per_type, "training scenarios per task type")->check(CLI::PositiveNumber);
  collect_cmd->add_option("-k", k, "samples the agent may retrieve");

  auto* check_cmd = app.add_subcommand("oracle-check", "send one request to the configured endpoint");
  check_o.attach(check_cmd);

  std::string shift_path;
  auto* shift_cmd = app.add_subcommand("report-shift", "task distribution of collected episodes");
  shift_cmd->add_option("episodes", shift_path, "collect_episodes.jsonl written by collect")->required();

  std::string script;
  int port = 0;
  auto* mock_cmd = app.add_subcommand("mock-server", "serve canned chat completions locally");
  mock_cmd->add_option("--script", script, "routes JSON");
  mock_cmd->add_option("--port", port, "0 picks a free port");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*deploy_cmd) return cmd_deploy(deploy_o);
    if (*eval_cmd) return cmd_eval(logs_path);
    if (*ablate_cmd) {
      if (!disable_adapter && !disable_hindsight) disable_adapter = disable_hindsight = true;
      return cmd_ablate(ablate_o, disable_adapter, disable_hindsight);
    }
    if (*collect_cmd) return cmd_collect(collect_o, per_type, k);
    if (*check_cmd) return cmd_oracle_check(check_o);
    if (*shift_cmd) return cmd_report_shift(shift_path);
    if (*mock_cmd) return cmd_mock_server(script, port);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
