#include <doctest.h>

#include <atomic>
#include <thread>

#include "golden.hpp"
#include "hsp/mock_server.hpp"
#include "hsp/remote.hpp"
#include "hsp/rng.hpp"
#include "support.hpp"

using namespace hsp;
using namespace hsp::remote;
using world::ObjectClass;

namespace {

RemoteConfig mock_config(const MockServer& server) {
  RemoteConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.model = "mock-model";
  cfg.api_key = "test-key";
  cfg.backoff_seconds = 0.01;
  cfg.timeout_seconds = 5;
  return cfg;
}

MockRoute always(std::string match, std::string content) {
  return {std::move(match), {MockReply{.content = std::move(content)}}, true};
}

oracles::OracleContext pan_context() {
  const auto scene = testing::pan_kitchen();
  oracles::OracleContext ctx;
  ctx.task = scene.task;
  ctx.observation = world::observe(scene.state);
  ctx.pddl_predicted = scene.task.pddl;
  ctx.legal = world::legal_subgoals(scene.state, ctx.observation);
  ctx.belief = scene.state;
  return ctx;
}

retrieval::SamplePool small_pool() {
  retrieval::SamplePool pool;
  const auto scene = testing::pan_kitchen();
  retrieval::SampleRecord r;
  r.id = "gt-Clean-1";
  r.kind = retrieval::SampleKind::Gt;
  r.task_text = "Rinse a pan and put it on the table";
  r.pddl = scene.task.pddl;
  r.rollout = world::expert_plan(scene.task.pddl, scene.state);
  r.source_task_id = "Clean-1";
  pool.add(r);
  r.id = "gt-Pick-2";
  r.task_text = "Put a mug in the cabinet";
  r.pddl = {.object_target = ObjectClass::Mug, .parent_target = ObjectClass::Cabinet};
  r.rollout = testing::subgoals({"GotoLocation Cabinet", "OpenObject Cabinet", "PickupObject Mug"});
  r.source_task_id = "Pick-2";
  pool.add(r);
  return pool;
}

}  // namespace

TEST_CASE("response helpers") {
  CHECK(final_line("Think: the pan is dirty.\n\nPickupObject Pan\n  \n") == "PickupObject Pan");
  CHECK(final_line("") == "");
  CHECK(parse_verdict("Verdict: optimal") == 2.0);
  CHECK(parse_verdict("acceptable") == 1.0);
  CHECK(parse_verdict("BAD") == 0.0);
  CHECK(parse_verdict("score 0.75") == 0.75);
  CHECK_FALSE(parse_verdict("no idea").has_value());

  const auto [system, user] = split_prompt("role text\n\nthe rest", "role text");
  CHECK(system == "role text");
  CHECK(user == "the rest");
}

TEST_CASE("adapter answers are parsed and repaired") {
  using V = std::vector<ObjectClass>;
  SUBCASE("rendered arguments read back") {
    for (auto type : world::all_task_types()) {
      for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto truth = world::generate_task(seed, type).task.pddl;
        CHECK(parse_adapter_answer(prompts::render_pddl(truth), {}) == truth);
      }
    }
  }
  SUBCASE("loose names and bad fields") {
    const auto p = parse_adapter_answer(
        "task type: Bake\ntarget object: coffee cup\ndestination: small black table\nsliced: yes", V{ObjectClass::Mug});
    CHECK(p.task_type == world::TaskType::Pick);
    CHECK(p.object_target == ObjectClass::Mug);
    CHECK(p.parent_target == ObjectClass::SideTable);
    CHECK_FALSE(p.object_sliced);
  }
  SUBCASE("potato") {
    const auto p = parse_adapter_answer("target object: potato; destination: SideTable; state: cooled", {});
    CHECK(p.task_type == world::TaskType::Cool);
    CHECK(p.object_target == ObjectClass::Potato);
    CHECK(p.parent_target == ObjectClass::SideTable);
  }
  SUBCASE("anything validates") {
    Rng rng(8);
    const std::vector<std::string> pieces{"task type", "target object", "carrier", "destination", "toggle", "state",
                                          "sliced",    "two objects",   "Stack",   "Examine",     "Plate",  "Sink",
                                          "heated",    "yes",           "Apple",   ":",           ";",      "\n",
                                          "Fridge",    "Knife",         "lamp",    "xyz"};
    for (int i = 0; i < 2000; ++i) {
      std::string text;
      const int n = rng.between(0, 14);
      for (int j = 0; j < n; ++j) text += pieces[rng.uniform(pieces.size())] + " ";
      INFO(text);
      CHECK_FALSE(world::validate(parse_adapter_answer(text, {})).has_value());
    }
  }
}

TEST_CASE("client round trip against the mock server") {
  MockServer server({always("", "echo this back")});
  std::vector<Json> events;
  RemoteClient client(mock_config(server), [&](const Json& e) { events.push_back(e); });
  CHECK(client.complete("system text", "user text") == "echo this back");

  const auto reqs = server.requests();
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0].authorization == "Bearer test-key");
  CHECK(reqs[0].body.at("temperature") == 0.0);
  CHECK(reqs[0].body.at("messages").at(0).at("role") == "system");
  CHECK(reqs[0].body.at("messages").at(1).at("content") == "user text");
  for (const auto& e : events) CHECK(e.dump().find("test-key") == std::string::npos);
}

TEST_CASE("client gives up after three failed attempts") {
  MockServer server({{"", {MockReply{.status = 500}}, true}});
  std::vector<Json> events;
  RemoteClient client(mock_config(server), [&](const Json& e) { events.push_back(e); });
  CHECK_THROWS_AS(client.complete("s", "u"), oracles::OracleUnavailable);
  CHECK(server.requests().size() == 3);
  int requests = 0, errors = 0;
  for (const auto& e : events) {
    requests += e.at("event") == "request";
    errors += e.at("event") == "error";
  }
  CHECK(requests == 3);
  CHECK(errors == 3);
}

TEST_CASE("client recovers when a retry succeeds") {
  MockServer server({{"", {MockReply{.status = 500}, MockReply{.status = 502}, MockReply{.content = "ok"}}, true}});
  RemoteClient client(mock_config(server));
  CHECK(client.complete("s", "u") == "ok");
  CHECK(server.requests().size() == 3);
}

TEST_CASE("malformed bodies surface as parse errors") {
  MockServer server({{"", {MockReply{.raw_body = "{\"choices\": []}"}}, true}});
  RemoteClient client(mock_config(server));
  try {
    client.complete("s", "u");
    FAIL("expected a parse error");
  } catch (const ResponseParseError& e) {
    CHECK(e.raw_body() == "{\"choices\": []}");
  }
  CHECK(server.requests().size() == 1);
}

TEST_CASE("unreachable endpoint is unavailable") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.api_key = "k";
  cfg.backoff_seconds = 0.0;
  cfg.timeout_seconds = 1;
  RemoteClient client(cfg);
  CHECK_THROWS_AS(client.complete("s", "u"), oracles::OracleUnavailable);
}

TEST_CASE("client configuration is checked") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/";
  CHECK_THROWS_AS(RemoteClient{cfg}, std::invalid_argument);
  cfg.api_key = "k";
  cfg.endpoint.clear();
  CHECK_THROWS_AS(RemoteClient{cfg}, std::invalid_argument);
}

TEST_CASE("in-flight requests are capped") {
  MockServer server({{"", {MockReply{.content = "slow", .delay_ms = 60}}, true}});
  auto cfg = mock_config(server);
  cfg.max_in_flight = 2;
  RemoteClient client(cfg);
  std::vector<std::thread> threads;
  std::atomic<int> ok{0};
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&] { ok += client.complete("s", "u") == "slow"; });
  }
  for (auto& t : threads) t.join();
  CHECK(ok == 6);
  CHECK(server.peak_concurrency() <= 2);
  CHECK(server.peak_concurrency() >= 1);
}

TEST_CASE("remote oracles") {
  MockServer server({
      always("planner of a household robot", "The pan must be washed first.\npick up the pan"),
      always("critic", "It makes progress.\nVerdict: acceptable"),
      always("task instruction", "target object: potato; destination: small black table; state: cooled"),
      always("predict how a household scene changes", "holding Pan"),
  });
  RemoteClient client(mock_config(server));
  const auto pool = small_pool();
  const auto ctx = pan_context();

  RemoteActor actor(client, prompts::Role::ActorGt, {&pool, 2});
  CHECK(actor.propose(ctx, 2) == testing::subgoals({"PickupObject Pan", "PickupObject Pan"}));

  RemoteCritic critic(client, {});
  oracles::RolloutCandidate cand;
  cand.prefix.push_back({"holding nothing", *world::parse_subgoal("PickupObject Pan")});
  CHECK(critic.score(ctx, cand) == 1.0);

  RemoteAdapter adapter(client, {});
  const auto p = adapter.predict({.instruction = "Put a chilled potato on the small black table",
                                  .object_list = {ObjectClass::Potato, ObjectClass::SideTable}});
  CHECK(p.object_target == ObjectClass::Potato);
  CHECK(p.parent_target == ObjectClass::SideTable);
  CHECK(p.task_type == world::TaskType::Cool);

  RemoteGenerator gen(client);
  const oracles::PredictedState start{"holding nothing", ctx.belief, {}};
  const auto next = gen.next_state(ctx, start, *world::parse_subgoal("PickupObject Pan"));
  CHECK(next.summary == "holding Pan");
  CHECK(next.status.ok());

  const auto reqs = server.requests();
  REQUIRE(reqs.size() == 5);
  CHECK(reqs[0].route == "planner of a household robot");
  CHECK(reqs[2].route == "critic");
  CHECK(reqs[3].route == "task instruction");
  CHECK(reqs[4].route == "predict how a household scene changes");
  for (const auto& r : reqs) CHECK(r.body.at("temperature") == 0.0);

  // Golden request: exact body of the first actor call, so message layout and
  // slot order are frozen.
  CHECK(testing::matches_golden("request_actor.json", reqs[0].body.dump(2) + "\n"));
  CHECK(testing::matches_golden("request_critic.json", reqs[2].body.dump(2) + "\n"));
}
