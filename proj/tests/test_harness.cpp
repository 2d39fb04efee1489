#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "golden.hpp"
#include "hsp/harness.hpp"
#include "hsp/rng.hpp"

using namespace hsp;
using namespace hsp::harness;
using world::TaskType;

namespace {

std::vector<EpisodeLog> fixture_logs() {
  std::ifstream in("tests/data/metrics_logs.jsonl");
  REQUIRE(in);
  return read_jsonl(in);
}

EpisodeLog synthetic(TaskType t, bool success, double gc, int length = 3) {
  EpisodeLog l;
  l.scenario_id = hindsight::scenario_id(t, 0);
  l.task_type = t;
  l.success = success;
  l.gc = gc;
  l.length = length;
  l.replans = length;
  return l;
}

RunConfig small_run(double eps) {
  RunConfig cfg;
  cfg.split.n_episodes = 3;
  cfg.split.seed_base = 7000;
  cfg.eval.epsilon_noise = eps;
  cfg.planner.depth = 1;
  return cfg;
}

}  // namespace

TEST_CASE("config defaults and overrides") {
  const auto d = parse_config("");
  CHECK(d.planner.width == 2);
  CHECK(d.planner.breadth == 2);
  CHECK(d.planner.depth == 2);
  CHECK(d.oracle.backend == "scripted");
  CHECK(selected_types(d).size() == 7);

  const auto c = parse_config(R"(
[planner]
width = 4
greedy = false

[eval]
gamma = 0.9
epsilon_noise = 0.3

[oracle]
backend = "remote"
endpoint = "http://127.0.0.1:9"

[split]
n_episodes = 5
seed_base = 42
types = ["Pick", "Heat"]

[ablations]
disable_adapter = true
)");
  CHECK(c.planner.width == 4);
  CHECK(c.eval.gamma == 0.9);
  CHECK(c.eval.epsilon_noise == 0.3);
  CHECK(c.oracle.backend == "remote");
  CHECK(c.split.seed_base == 42);
  CHECK(selected_types(c) == std::vector<TaskType>{TaskType::Pick, TaskType::Heat});
  CHECK(c.ablations.disable_adapter);
  CHECK_FALSE(c.ablations.disable_hindsight);
}

TEST_CASE("config errors name source, line and key") {
  auto message = [](std::string_view text) {
    try {
      parse_config(text, "run.toml");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(message("[planner]\nwidth = 2\nwidht = 3\n") == "run.toml:3: planner.widht: unknown key");
  CHECK(message("[planner]\nwidth = \"two\"\n") == "run.toml:2: planner.width: expected an integer");
  CHECK(message("[spilt]\nn_episodes = 1\n") == "run.toml:1: spilt: unknown section");
  CHECK(message("[split]\ntypes = [\"Pick\", \"Fly\"]\n") == "run.toml:2: split.types: unknown task type");
  CHECK(message("[split]\nseed_base = -1\n") == "run.toml:2: split.seed_base: must be non-negative");
  CHECK(message("[split]\nn_episodes = 0\n").find("n_episodes must be at least 1") != std::string::npos);
  CHECK(message("[oracle]\nbackend = \"magic\"\n").find("oracle.backend") != std::string::npos);
  CHECK(message("[planner\n").starts_with("run.toml:1: "));
  CHECK_THROWS_AS(load_config("does/not/exist.toml"), ConfigError);
}

TEST_CASE("config echo parses back to the same config") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    RunConfig cfg;
    cfg.planner.width = 2 * static_cast<int>(1 + rng.uniform(3));
    cfg.planner.breadth = static_cast<int>(1 + rng.uniform(static_cast<std::uint64_t>(cfg.planner.width)));
    cfg.planner.depth = static_cast<int>(rng.uniform(4));
    cfg.planner.greedy = rng.unit() < 0.2;
    cfg.eval.gamma = 0.5 + 0.5 * rng.unit();
    cfg.eval.epsilon_noise = rng.unit();
    cfg.eval.lookahead_budget = static_cast<int>(rng.uniform(5));
    cfg.oracle.model = "m" + std::to_string(i);
    cfg.data.out_dir = "out/" + std::to_string(i);
    cfg.split.n_episodes = 1 + static_cast<int>(rng.uniform(50));
    cfg.split.seed_base = rng.next() >> 1;
    if (rng.unit() < 0.5) cfg.split.types = {TaskType::Cool, TaskType::Pick};
    cfg.ablations.disable_adapter = rng.unit() < 0.5;
    const auto text = to_toml(cfg);
    const auto back = parse_config(text);
    CHECK(to_toml(back) == text);
    CHECK(back.eval.gamma == cfg.eval.gamma);
    CHECK(back.split.seed_base == cfg.split.seed_base);
  }
}

TEST_CASE("compound success") {
  CHECK(compound_success(1.0, 0) == 1.0);
  CHECK(compound_success(1.0, 37) == 1.0);
  CHECK(compound_success(0.9, 12) == doctest::Approx(0.2824).epsilon(1e-4));
  CHECK(compound_success(0.9, 10) == doctest::Approx(0.3487).epsilon(1e-4));
  CHECK(compound_success(0.0, 0) == 1.0);
  CHECK(compound_success(0.0, 3) == 0.0);

  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.unit();  // [0, 1)
    const int t = static_cast<int>(rng.uniform(40));
    CHECK(compound_success(p, t + 1) < compound_success(p, t) + (p == 0.0 && t == 0 ? 0.0 : 1e-300));
    CHECK(compound_success(p, t) <= 1.0);
    CHECK(compound_success(p, 0) == 1.0);
    CHECK(compound_success(1.0, t) == 1.0);
  }
}

TEST_CASE("metrics arithmetic") {
  std::vector<EpisodeLog> logs;
  const double gcs[] = {1, 1, 1, 1, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};  // sum 7
  for (int i = 0; i < 10; ++i) logs.push_back(synthetic(TaskType::Heat, i < 4, gcs[i]));
  auto t = metrics(logs);
  REQUIRE(t.per_type.size() == 1);
  CHECK(t.per_type[0].first == TaskType::Heat);
  CHECK(t.overall.sr == doctest::Approx(40.0));
  CHECK(t.overall.gc == doctest::Approx(70.0));

  logs.push_back(synthetic(TaskType::Pick, false, 0.0));
  logs.back().aborted = true;
  t = metrics(logs);
  CHECK(t.per_type.size() == 1);
  CHECK(t.aborted == 1);
  CHECK(t.overall.episodes == 10);

  CHECK(metrics({}).per_type.empty());
  CHECK(metrics({}).overall.episodes == 0);
}

TEST_CASE("metrics of the synthetic fixture") {
  const auto logs = fixture_logs();
  REQUIRE(logs.size() == 20);
  const auto t = metrics(logs);
  CHECK(t.aborted == 2);
  CHECK(t.overall.episodes == 18);
  CHECK(t.overall.sr == doctest::Approx(66.66666666666667));
  CHECK(t.overall.gc == doctest::Approx(73.61111111111111));
  CHECK(t.overall.mean_length == doctest::Approx(6.611111111111111));
  REQUIRE(t.per_type.size() == 5);
  CHECK(t.per_type[0].first == TaskType::Pick);
  CHECK(t.per_type[1].second.gc == doctest::Approx(41.666666666666664));  // Clean
  CHECK(testing::matches_golden("metrics_golden.json", to_json(t).dump(2) + "\n"));
  CHECK(testing::matches_golden("metrics_golden.txt", render(t)));
}

TEST_CASE("malformed log lines are reported by line number") {
  std::istringstream bad(
      "{\"scenario_id\":\"Pick-1\",\"task_type\":\"Pick\",\"seed\":1,\"success\":true,\"gc\":1.0,\"length\":2,"
      "\"replans\":2,\"aborted\":false}\n\n{\"scenario_id\":\"Pick-2\"}\n");
  try {
    read_jsonl(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).starts_with("line 3: "));
  }
  std::istringstream junk("not json\n");
  CHECK_THROWS_WITH_AS(read_jsonl(junk), doctest::Contains("line 1"), ParseError);
}

TEST_CASE("deploy is deterministic and its logs reproduce its metrics") {
  const auto cfg = small_run(0.3);
  const retrieval::SamplePool empty;
  const auto a = deploy(cfg, empty, 1);
  const auto b = deploy(cfg, empty, 4);
  REQUIRE(a.size() == 21);
  CHECK(a == b);
  CHECK(a[0].scenario_id == hindsight::scenario_id(TaskType::Examine, 7000));
  CHECK(a[3].seed == 8000);

  std::stringstream ss;
  write_jsonl(ss, a);
  const auto back = read_jsonl(ss);
  CHECK(back == a);
  CHECK(to_json(metrics(back)).dump() == to_json(metrics(a)).dump());

  // A rerun from the echoed config gives the same logs.
  CHECK(deploy(parse_config(to_toml(cfg)), empty, 2) == a);
}

TEST_CASE("ablations switch oracles") {
  auto cfg = small_run(0.3);
  const retrieval::SamplePool empty;
  const auto base = make_oracles(cfg, nullptr, {&empty, 0, {}});
  CHECK(base.actors.size() == 2);
  cfg.ablations.disable_hindsight = true;
  CHECK(make_oracles(cfg, nullptr, {&empty, 0, {}}).actors.size() == 1);
  cfg.ablations.disable_adapter = true;
  const auto set = make_oracles(cfg, nullptr, {&empty, 0, {}});
  const auto p = set.adapter->predict({.instruction = "Put a washed apple in the fridge"});
  CHECK(p == oracles::default_pddl("Put a washed apple in the fridge"));
  cfg.oracle.backend = "remote";
  CHECK_THROWS_AS(make_oracles(cfg, nullptr, {&empty, 0, {}}), std::invalid_argument);
}

TEST_CASE("parallel_for visits every index once and forwards errors") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 8, [&](std::size_t i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("collected episodes round trip") {
  const auto pool = hindsight::build_gt_pool(hindsight::training_scenarios(1, 300));
  hindsight::ScriptedRelabeler r;
  const auto res = hindsight::collect(pool, hindsight::scripted_agent(0.5, 1), r, 2);
  for (const auto& ep : res.episodes) {
    const auto back = collected_from_json(to_json(ep));
    CHECK(back.scenario_id == ep.scenario_id);
    CHECK(back.trajectory == ep.trajectory);
    CHECK(back.task == ep.task);
    CHECK(back.icl_sources == ep.icl_sources);
  }
}
