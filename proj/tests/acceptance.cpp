// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any of them fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <unistd.h>

#include "golden.hpp"
#include "hsp/harness.hpp"
#include "hsp/mock_server.hpp"
#include "hsp/rng.hpp"
#include "support.hpp"
#include "toys.hpp"

using namespace hsp;
using world::SubGoal;
using world::TaskType;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const std::string& name, const std::function<Verdict()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::ostringstream time;
  time.precision(1);
  time << std::fixed << secs;
  std::cout << (v.pass ? "PASS" : "FAIL") << "  " << n << ". " << name << ": " << v.detail << " (" << time.str()
            << " s)" << std::endl;
}

std::string fmt(double x, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << std::fixed << x;
  return out.str();
}

// One-sided sign test: P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
double sign_test_p(int wins, int losses) {
  const int n = wins + losses;
  if (n == 0) return 1.0;
  double p = 0.0;
  for (int k = wins; k <= n; ++k) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return p;
}

std::vector<SubGoal> goals_of(const planner::EpisodeResult& r) {
  std::vector<SubGoal> out;
  for (const auto& s : r.trajectory) out.push_back(s.goal);
  return out;
}

// 1 ---------------------------------------------------------------------------
Verdict expert_soundness() {
  const auto start = std::chrono::steady_clock::now();
  oracles::ScriptedActor expert(oracles::ScriptedActor::Kind::GroundTruth, 0.0);
  oracles::GroundTruthAdapter adapter;
  oracles::TrueValueCritic critic({});
  oracles::ScriptedGenerator gen;
  int n = 0, success = 0;
  double gc = 0.0;
  for (auto type : world::all_task_types()) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto scene = world::generate_task(seed, type);
      const auto r = planner::run_episode(scene, {{&expert}, &critic, &gen, &adapter}, {.greedy = true}, seed);
      ++n;
      success += r.outcome.success;
      gc += r.outcome.gc;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double sr = 100.0 * success / n, gcp = 100.0 * gc / n;
  return {success == n && gc == n && secs < 60.0,
          std::to_string(n) + " episodes, SR " + fmt(sr, 2) + "%, GC " + fmt(gcp, 2) + "%, " + fmt(secs, 2) + " s"};
}

// 2 ---------------------------------------------------------------------------
Verdict beam_equivalence() {
  Rng rng(77);
  int agree = 0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto toy = testing::make_toy(rng);
    const auto [best, value] = testing::brute_force(toy, 0.95);
    agree += testing::plan_toy(toy, toy.horizon - 1, 2) == best;
  }
  return {agree == n, std::to_string(agree) + "/" + std::to_string(n) + " toy instances match brute force"};
}

// 3 ---------------------------------------------------------------------------
Verdict hindsight_recovery() {
  oracles::ScriptedGenerator gen;
  oracles::ScriptedAdapter adapter;
  oracles::TrueValueCritic critic({.gamma = 0.95});
  const planner::PlannerConfig search_cfg{.width = 2, .breadth = 2, .depth = 2};
  int search = 0, greedy = 0, wins = 0, losses = 0;
  const int n = 500;
  const auto types = world::all_task_types();
  for (int i = 0; i < n; ++i) {
    const auto type = types[static_cast<std::size_t>(i) % types.size()];
    const std::uint64_t seed = 200000 + static_cast<std::uint64_t>(i);
    const auto scene = world::generate_task(seed, type);
    oracles::ScriptedActor gt(oracles::ScriptedActor::Kind::GroundTruth, 0.3);
    oracles::ScriptedActor hind(oracles::ScriptedActor::Kind::Hindsight, 0.3);
    const bool s = planner::run_episode(scene, {{&gt, &hind}, &critic, &gen, &adapter}, search_cfg, seed).outcome.success;
    const bool g = planner::run_episode(scene, {{&gt}, &critic, &gen, &adapter}, {.greedy = true}, seed).outcome.success;
    search += s;
    greedy += g;
    wins += s && !g;
    losses += g && !s;
  }
  const double p = sign_test_p(wins, losses);
  return {search > greedy && p < 0.01, "search SR " + fmt(100.0 * search / n, 1) + "% vs greedy SR " +
                                           fmt(100.0 * greedy / n, 1) + "% over " + std::to_string(n) +
                                           " paired episodes, discordant " + std::to_string(wins) + ":" +
                                           std::to_string(losses) + ", sign test p = " + std::to_string(p)};
}

// 4 ---------------------------------------------------------------------------
Verdict relabel_validity() {
  const auto gt = hindsight::build_gt_pool(hindsight::training_scenarios(20, 0));
  hindsight::ScriptedRelabeler relabeler;
  int records = 0, valid = 0;
  for (double eps : {0.3, 0.5}) {
    const auto res = hindsight::collect(gt, hindsight::scripted_agent(eps, 1), relabeler, 2);
    for (const auto& r : res.pool.records()) {
      if (r.kind != retrieval::SampleKind::HindActor) continue;
      ++records;
      const auto sc = hindsight::scenario_from_id(r.source_task_id);
      const auto reference = world::expert_plan(sc.scene.task.pddl, sc.scene.state);
      const bool ok = world::evaluate(sc.scene.task.pddl, world::replay(sc.scene.state, r.rollout)).success &&
                      hindsight::information_statistic(sc.scene, r.rollout) ==
                          hindsight::information_statistic(sc.scene, reference);
      valid += ok;
    }
  }
  const auto pan = testing::pan_kitchen();
  const auto detour = testing::pan_detour();
  const auto out = relabeler.relabel_actor({pan, prompts::rename_task(pan.task.pddl),
                                            world::expert_plan(pan.task.pddl, pan.state), detour});
  const std::vector<SubGoal> suffix(out.completed.begin() + static_cast<std::ptrdiff_t>(detour.size()),
                                    out.completed.end());
  const bool pan_ok = suffix == testing::subgoals({"ToggleObjectOff Faucet", "PickupObject Pan", "PutObject DiningTable"});
  return {records > 0 && valid == records && pan_ok,
          std::to_string(valid) + "/" + std::to_string(records) + " hindsight actor records replay to success; pan suffix " +
              (pan_ok ? "matches" : "differs")};
}

// 5 ---------------------------------------------------------------------------
Verdict distribution_preservation() {
  const auto gt = hindsight::build_gt_pool(hindsight::training_scenarios(20, 0));
  hindsight::ScriptedRelabeler relabeler;
  bool completion_zero = true;
  double kl_her_05 = 0.0;
  std::string detail;
  for (double eps : {0.0, 0.3, 0.5}) {
    const auto res = hindsight::collect(gt, hindsight::scripted_agent(eps, 5), relabeler, 2);
    const auto rep = hindsight::distribution_report(res.episodes);
    completion_zero = completion_zero && rep.kl_completion == 0.0;
    if (eps == 0.5) kl_her_05 = rep.kl_her;
    detail += "eps " + fmt(eps, 1) + ": kl_completion " + fmt(rep.kl_completion, 1) + ", kl_her " + fmt(rep.kl_her) + "; ";
  }
  detail.resize(detail.size() - 2);
  return {completion_zero && kl_her_05 > 0.0, detail + " (140 scenarios each)"};
}

// 6 ---------------------------------------------------------------------------
Verdict horizon_decay() {
  const double eps = 0.1;
  const int n = 10000;
  bool all_ok = true;
  std::string detail;
  const auto types = world::all_task_types();
  for (std::size_t ti = 0; ti < types.size(); ++ti) {
    int success = 0;
    double predicted = 0.0, length = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::uint64_t seed = 400000 + static_cast<std::uint64_t>(i);
      auto scene = world::generate_task(seed, types[ti]);
      const auto plan = world::expert_plan(scene.task.pddl, scene.state);
      Rng rng(mix(seed, ti));
      // Open loop: each sub-goal independently fails to execute with
      // probability eps and the plan carries on regardless.
      for (const auto& g : plan) {
        if (!rng.chance(eps)) world::step(scene.state, g);
      }
      success += world::evaluate(scene.task.pddl, scene.state).success;
      predicted += harness::compound_success(1.0 - eps, static_cast<int>(plan.size()));
      length += static_cast<double>(plan.size());
    }
    predicted /= n;
    const double measured = static_cast<double>(success) / n;
    const double se = std::sqrt(predicted * (1.0 - predicted) / n);
    const bool ok = std::abs(measured - predicted) <= 3.0 * se;
    all_ok = all_ok && ok;
    detail += std::string{world::name(types[ti])} + " L=" + fmt(length / n, 2) + " SR " + fmt(measured, 3) + " vs " +
              fmt(predicted, 3) + (ok ? "" : " (outside 3 SE)") + "; ";
  }
  const double c = harness::compound_success(0.9, 12);
  const bool c_ok = std::abs(c - 0.2824) <= 1e-4;
  return {all_ok && c_ok, detail + "0.9^12 = " + fmt(c)};
}

// 7 ---------------------------------------------------------------------------
Verdict expert_lengths() {
  const std::vector<std::pair<TaskType, double>> reference{
      {TaskType::Examine, 2.07}, {TaskType::Pick, 2.48}, {TaskType::PickTwo, 5.70}, {TaskType::Stack, 5.63},
      {TaskType::Clean, 7.25},   {TaskType::Cool, 10.36}, {TaskType::Heat, 12.78}};
  bool ok = true;
  std::string detail;
  for (const auto& [type, want] : reference) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto scene = world::generate_task(seed, type);
      total += static_cast<double>(world::expert_plan(scene.task.pddl, scene.state).size());
    }
    const double mean = total / 100.0;
    ok = ok && std::abs(mean - want) <= 2.0;
    detail += std::string{world::name(type)} + " " + fmt(mean, 2) + " (" + fmt(want, 2) + ") ";
  }
  detail.pop_back();
  return {ok, detail};
}

// 8 ---------------------------------------------------------------------------
Verdict retriever_equivalence() {
  const std::vector<std::string> vocab{"put", "a", "mug", "cup", "on", "the", "table", "wash", "pan", "heat",
                                       "apple", "fridge", "two", "candles", "cabinet", "lamp", "cool", "slice"};
  Rng rng(99);
  int agree = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    retrieval::SamplePool pool;
    const std::size_t n = rng.uniform(501);
    for (std::size_t i = 0; i < n; ++i) {
      retrieval::SampleRecord r;
      r.id = "r" + std::to_string(rng.uniform(1000)) + "_" + std::to_string(i);
      r.kind = retrieval::SampleKind::Gt;
      for (std::size_t w = rng.uniform(6); w > 0; --w) r.task_text += vocab[rng.uniform(vocab.size())] + " ";
      r.pddl = {.object_target = world::ObjectClass::Mug, .parent_target = world::ObjectClass::Shelf};
      r.rollout = testing::subgoals({"PickupObject Mug", "PutObject Shelf"});
      r.source_task_id = "s" + std::to_string(rng.uniform(30));
      pool.add(r);
    }
    retrieval::Query q;
    for (std::size_t w = 1 + rng.uniform(4); w > 0; --w) q.text += vocab[rng.uniform(vocab.size())] + " ";
    q.k = rng.uniform(15);
    if (rng.chance(0.5)) q.exclude_sources = {"s" + std::to_string(rng.uniform(30))};

    const auto qe = retrieval::embed(q.text);
    std::vector<std::pair<double, std::string>> all;
    for (const auto& r : pool.records()) {
      if (q.exclude_sources.contains(r.source_task_id)) continue;
      const auto re = retrieval::embed(r.task_text);
      double s = 0.0;
      for (std::size_t d = 0; d < retrieval::kEmbeddingDim; ++d) s += (qe[d] - re[d]) * (qe[d] - re[d]);
      all.emplace_back(std::sqrt(s), r.id);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::string> expected, got;
    for (std::size_t i = 0; i < std::min(q.k, all.size()); ++i) expected.push_back(all[i].second);
    for (const auto& r : retrieval::knn_retrieve(pool, q)) got.push_back(r.id);
    agree += got == expected;
  }
  return {agree == trials, std::to_string(agree) + "/" + std::to_string(trials) + " random pools agree, tie order included"};
}

// 9 ---------------------------------------------------------------------------
Verdict ablation_mechanics() {
  const fs::path dir = fs::temp_directory_path() / ("hsp_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const std::string cmd = std::string(HSP_CLI) + " ablate --disable-adapter --disable-hindsight --noise 0.3 --episodes 30 --out " +
                          dir.string() + " > " + (dir.string() + ".log") + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(dir / "ablation.json");
  if (rc != 0 || !in) return {false, "ablate exited with " + std::to_string(rc)};
  const auto j = Json::parse(in);
  const double base = j["base"]["overall"]["sr"];
  const double no_adapter = j["disable_adapter"]["overall"]["sr"];
  const double no_hindsight = j["disable_hindsight"]["overall"]["sr"];
  fs::remove_all(dir);
  fs::remove(dir.string() + ".log");
  return {no_adapter <= base && no_hindsight <= base,
          "SR base " + fmt(base, 2) + "%, without adapter " + fmt(no_adapter, 2) + "%, without hindsight " +
              fmt(no_hindsight, 2) + "% (210 paired episodes each, eps 0.3)"};
}

// 10 --------------------------------------------------------------------------
remote::RemoteConfig mock_config(const remote::MockServer& server) {
  remote::RemoteConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "mock-model";
  cfg.api_key = "test-key";
  cfg.backoff_seconds = 0.01;
  cfg.timeout_seconds = 5;
  return cfg;
}

Verdict remote_integration() {
  std::string detail;
  bool ok = true;

  // A full Pick episode driven by canned replies.
  const std::uint64_t seed = 7;
  const auto scene = world::generate_task(seed, TaskType::Pick);
  const auto plan = world::expert_plan(scene.task.pddl, scene.state);
  std::vector<remote::MockReply> actor_replies;
  for (const auto& g : plan) {
    // Both actors answer each step with the expert's move, in their own words.
    actor_replies.push_back({.content = "Next sub-goal:\n" + world::render(g)});
    actor_replies.push_back({.content = world::render(g)});
  }
  remote::MockServer server({
      {"planner of a household robot", actor_replies, true},
      {"critic", {{.content = "Moves toward the goal.\noptimal"}}, true},
      {"task instruction", {{.content = prompts::render_pddl(scene.task.pddl)}}, true},
      {"predict how a household scene changes", {{.content = "the robot carried out the step"}}, true},
  });
  remote::RemoteClient client(mock_config(server));
  harness::RunConfig cfg;
  cfg.oracle.backend = "remote";
  cfg.planner = {.width = 2, .breadth = 1, .depth = 0};
  const retrieval::SamplePool pool = hindsight::build_gt_pool(hindsight::training_scenarios(2, 0));
  const auto set = harness::make_oracles(cfg, &client, {&pool, 0, {}});
  const auto run = planner::run_episode(scene, set.view(), cfg.planner, seed);
  const bool e2e = run.outcome.success && !run.aborted && goals_of(run) == plan;
  ok = ok && e2e;
  detail += "mock episode " + std::string(e2e ? "succeeded" : "failed") + " in " + std::to_string(run.trajectory.size()) +
            " steps with " + std::to_string(server.requests().size()) + " requests";

  bool temp0 = true;
  for (const auto& r : server.requests()) temp0 = temp0 && r.body.at("temperature") == 0.0;
  ok = ok && temp0;

  // Golden requests: the exact bodies for a fixed context.
  remote::MockServer echo({{"", {{.content = "pick up the pan\nacceptable"}}, true}});
  remote::RemoteClient echo_client(mock_config(echo));
  retrieval::SamplePool small;
  {
    const auto pan = testing::pan_kitchen();
    retrieval::SampleRecord r;
    r.id = "gt-Clean-1";
    r.task_text = "Rinse a pan and put it on the table";
    r.pddl = pan.task.pddl;
    r.rollout = world::expert_plan(pan.task.pddl, pan.state);
    r.source_task_id = "Clean-1";
    small.add(r);
    r.id = "gt-Pick-2";
    r.task_text = "Put a mug in the cabinet";
    r.pddl = {.object_target = world::ObjectClass::Mug, .parent_target = world::ObjectClass::Cabinet};
    r.rollout = testing::subgoals({"GotoLocation Cabinet", "OpenObject Cabinet", "PickupObject Mug"});
    r.source_task_id = "Pick-2";
    small.add(r);
  }
  const auto pan = testing::pan_kitchen();
  oracles::OracleContext ctx;
  ctx.task = pan.task;
  ctx.observation = world::observe(pan.state);
  ctx.pddl_predicted = pan.task.pddl;
  ctx.legal = world::legal_subgoals(pan.state, ctx.observation);
  ctx.belief = pan.state;
  remote::RemoteActor actor(echo_client, prompts::Role::ActorGt, {&small, 2});
  actor.propose(ctx, 1);
  remote::RemoteCritic critic(echo_client, {});
  oracles::RolloutCandidate cand;
  cand.prefix.push_back({"holding nothing", *world::parse_subgoal("PickupObject Pan")});
  critic.score(ctx, cand);
  const auto reqs = echo.requests();
  const bool golden = reqs.size() == 2 &&
                      testing::matches_golden("request_actor.json", reqs[0].body.dump(2) + "\n") &&
                      testing::matches_golden("request_critic.json", reqs[1].body.dump(2) + "\n");
  ok = ok && golden;
  detail += "; golden requests " + std::string(golden ? "match" : "differ") + ", temperature 0 " +
            (temp0 ? "everywhere" : "violated");

  // Three server errors in a row abort the episode cleanly.
  remote::MockServer down({{"", {{.status = 500}}, true}});
  remote::RemoteClient down_client(mock_config(down));
  const auto down_set = harness::make_oracles(cfg, &down_client, {&pool, 0, {}});
  const auto aborted = planner::run_episode(scene, down_set.view(), cfg.planner, seed);
  const bool clean_abort = aborted.aborted && down.requests().size() == 3 && aborted.trajectory.empty();
  ok = ok && clean_abort;
  detail += "; 500x3 " + std::string(clean_abort ? "aborts the episode after 3 attempts" : "did not abort cleanly");
  return {ok, detail};
}

}  // namespace

int main() {
  report(1, "expert soundness", expert_soundness);
  report(2, "beam search oracle equivalence", beam_equivalence);
  report(3, "hindsight recovery", hindsight_recovery);
  report(4, "relabel validity", relabel_validity);
  report(5, "distribution preservation", distribution_preservation);
  report(6, "horizon decay", horizon_decay);
  report(7, "expert length calibration", expert_lengths);
  report(8, "retriever equivalence", retriever_equivalence);
  report(9, "ablation mechanics", ablation_mechanics);
  report(10, "remote backend integration", remote_integration);
  std::cout << (failures ? std::to_string(failures) + " criterion(s) failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
