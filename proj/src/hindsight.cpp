#include "hsp/hindsight.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "hsp/lexicon.hpp"
#include "hsp/rng.hpp"

namespace hsp::hindsight {

using retrieval::SampleKind;
using retrieval::SampleRecord;
using world::ObjectClass;
using world::PddlArgs;
using world::SubGoal;
using world::TaskType;

std::string scenario_id(TaskType type, std::uint64_t seed) {
  return std::string{world::name(type)} + "-" + std::to_string(seed);
}

Scenario scenario_from_id(const std::string& id) {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos) throw ParseError("bad scenario id: " + id);
  const auto type = world::parse_task_type(id.substr(0, dash));
  std::uint64_t seed = 0;
  try {
    std::size_t used = 0;
    seed = std::stoull(id.substr(dash + 1), &used);
    if (used != id.size() - dash - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ParseError("bad scenario id: " + id);
  }
  if (!type) throw ParseError("bad scenario id: " + id);
  return {id, world::generate_task(seed, *type)};
}

std::vector<Scenario> training_scenarios(int per_type, std::uint64_t seed_base) {
  std::vector<Scenario> out;
  const auto types = world::all_task_types();
  for (std::size_t ti = 0; ti < types.size(); ++ti) {
    for (int i = 0; i < per_type; ++i) {
      const std::uint64_t seed = seed_base + 1000 * ti + static_cast<std::uint64_t>(i);
      out.push_back({scenario_id(types[ti], seed), world::generate_task(seed, types[ti])});
    }
  }
  return out;
}

SampleRecord gt_record(const Scenario& s) {
  SampleRecord r;
  r.id = "gt-" + s.id;
  r.kind = SampleKind::Gt;
  r.task_text = s.scene.task.instruction;
  r.pddl = s.scene.task.pddl;
  r.rollout = world::expert_plan(s.scene.task.pddl, s.scene.state);
  r.source_task_id = s.id;
  return r;
}

SampleRecord adapter_record(const Scenario& s) {
  SampleRecord r = gt_record(s);
  r.id = "adapter-" + s.id;
  r.kind = SampleKind::Adapter;
  return r;
}

retrieval::SamplePool build_gt_pool(const std::vector<Scenario>& scenarios) {
  retrieval::SamplePool pool;
  for (const auto& s : scenarios) {
    pool.add(gt_record(s));
    pool.add(adapter_record(s));
  }
  return pool;
}

InformationStatistic information_statistic(const world::Scene& scene, const std::vector<SubGoal>& trajectory) {
  const auto end = world::replay(scene.state, trajectory);
  const auto out = world::evaluate(scene.task.pddl, end);
  return {out.satisfied.begin(), out.satisfied.end()};
}

std::string_view name(Verdict v) {
  switch (v) {
    case Verdict::Bad: return "bad";
    case Verdict::Acceptable: return "acceptable";
    case Verdict::Optimal: return "optimal";
  }
  return "bad";
}

// ---------------------------------------------------------------------------
// Scripted relabeling
// ---------------------------------------------------------------------------

namespace {

std::vector<ObjectClass> running_devices(const world::LatentState& s) {
  std::vector<ObjectClass> out;
  for (auto dev : {ObjectClass::Faucet, ObjectClass::Microwave}) {
    const int f = s.fixture(dev);
    if (f >= 0 && s.objects[f].is_on) out.push_back(dev);
  }
  return out;
}

std::string article_for(std::string_view word) {
  return std::string{world::lexicon::article(word)} + " " + std::string{word};
}

/// Sentences describing what went wrong on the way to `end`.
std::vector<std::string> diagnose(const RelabelInput& in, const world::LatentState& end) {
  std::vector<std::string> notes;
  world::LatentState s = in.scene.state;
  for (std::size_t i = 0; i < in.suboptimal.size(); ++i) {
    const auto status = world::step(s, in.suboptimal[i]);
    if (!status.ok()) {
      notes.push_back("Step " + std::to_string(i + 1) + " (" + world::render(in.suboptimal[i]) + ") failed: " +
                      std::string{world::name(status.reason)} + ".");
    }
  }
  const auto& p = in.scene.task.pddl;
  if (end.inventory) {
    const ObjectClass held = end.objects[*end.inventory].cls;
    if (held != p.object_target && held != p.mrecep_target) {
      notes.push_back("The robot is holding " + article_for(world::name(held)) +
                      " that the task does not need, so it must put it down first.");
    }
  }
  for (auto dev : running_devices(end)) {
    notes.push_back("The " + std::string{world::name(dev)} + " is still on and has to be switched off.");
  }
  for (const auto& pred : world::goal_predicates(p)) {
    if (!world::holds(pred, end)) notes.push_back("Not yet true: " + pred.describe() + ".");
  }
  return notes;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

Verdict downgrade(Verdict v) { return v == Verdict::Optimal ? Verdict::Acceptable : Verdict::Bad; }

}  // namespace

bool relabel_valid(const RelabelInput& in, const std::vector<SubGoal>& completed) {
  if (completed.size() < in.suboptimal.size()) return false;
  if (!std::equal(in.suboptimal.begin(), in.suboptimal.end(), completed.begin())) return false;
  return world::evaluate(in.scene.task.pddl, world::replay(in.scene.state, completed)).success;
}

ActorRelabel ScriptedRelabeler::relabel_actor(const RelabelInput& in) {
  const auto end = world::replay(in.scene.state, in.suboptimal);
  const auto notes = diagnose(in, end);
  ActorRelabel out;
  out.think = notes.empty() ? "no correction needed" : join(notes, " ");
  const auto suffix = world::expert_plan(in.scene.task.pddl, end, {.recover = true});
  out.completed = in.suboptimal;
  out.completed.insert(out.completed.end(), suffix.begin(), suffix.end());
  out.raw = prompts::render_rollout(suffix);
  out.valid = relabel_valid(in, out.completed);
  return out;
}

CriticRelabel ScriptedRelabeler::relabel_critic(const RelabelInput& in) {
  const auto end = world::replay(in.scene.state, in.suboptimal);
  const auto outcome = world::evaluate(in.scene.task.pddl, end);
  Verdict v = Verdict::Bad;
  if (outcome.success) {
    v = in.suboptimal.size() <= in.reference.size() + 2 ? Verdict::Optimal : Verdict::Acceptable;
  } else if (outcome.gc >= 0.5) {
    v = Verdict::Acceptable;
  }
  if (!running_devices(end).empty()) v = downgrade(v);

  auto notes = diagnose(in, end);
  if (outcome.success && in.suboptimal.size() > in.reference.size()) {
    notes.push_back("It takes " + std::to_string(in.suboptimal.size()) + " steps where " +
                    std::to_string(in.reference.size()) + " suffice.");
  }
  if (notes.empty()) notes.push_back("The trajectory completes the task along a shortest path.");
  CriticRelabel out;
  out.critique = join(notes, " ") + "\nVerdict: " + std::string{name(v)};
  out.verdict = v;
  return out;
}

// ---------------------------------------------------------------------------
// Remote relabeling
// ---------------------------------------------------------------------------

std::vector<SubGoal> scene_subgoals(const world::LatentState& s) {
  std::set<ObjectClass> classes;
  for (const auto& o : s.objects) classes.insert(o.cls);
  std::vector<SubGoal> out;
  for (std::size_t v = 0; v < world::kNumVerbs; ++v) {
    for (auto c : classes) {
      const SubGoal g{static_cast<world::Verb>(v), c};
      if (world::kind_compatible(g.verb, g.arg)) out.push_back(g);
    }
  }
  return out;
}

namespace {

prompts::PromptContext relabel_prompt(prompts::Role role, const RelabelInput& in) {
  prompts::PromptContext pc;
  pc.role = role;
  pc.base_info = prompts::base_info(role);
  pc.task_text = in.renamed_task;
  pc.trajectory = in.suboptimal;
  pc.reference = in.reference;
  return pc;
}

std::string ask(remote::RemoteClient& client, const prompts::PromptContext& pc) {
  const auto [system, user] = remote::split_prompt(prompts::build_prompt(pc), pc.base_info);
  return client.complete(system, user);
}

std::string strip_numbering(std::string line) {
  std::size_t i = 0;
  while (i < line.size() && (std::isdigit(static_cast<unsigned char>(line[i])) || line[i] == '.' || line[i] == ')')) {
    ++i;
  }
  line = line.substr(i);
  const auto b = line.find_first_not_of(" \t-*");
  return b == std::string::npos ? std::string{} : line.substr(b);
}

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ActorRelabel RemoteRelabeler::relabel_actor(const RelabelInput& in) {
  ActorRelabel out;
  out.think = trimmed(ask(client_, relabel_prompt(prompts::Role::RelabelThink, in)));
  auto pc = relabel_prompt(prompts::Role::RelabelComplete, in);
  pc.think = out.think;
  out.raw = ask(client_, pc);

  const auto menu = scene_subgoals(in.scene.state);
  std::vector<SubGoal> suffix;
  std::size_t start = 0;
  while (start <= out.raw.size()) {
    auto end = out.raw.find('\n', start);
    if (end == std::string::npos) end = out.raw.size();
    const std::string line = strip_numbering(trimmed(out.raw.substr(start, end - start)));
    if (!line.empty()) suffix.push_back(prompts::canonicalize(line, menu).goal);
    start = end + 1;
  }
  // Models sometimes repeat the trajectory before continuing it.
  if (suffix.size() >= in.suboptimal.size() &&
      std::equal(in.suboptimal.begin(), in.suboptimal.end(), suffix.begin()) && !in.suboptimal.empty()) {
    suffix.erase(suffix.begin(), suffix.begin() + static_cast<std::ptrdiff_t>(in.suboptimal.size()));
  }
  out.completed = in.suboptimal;
  out.completed.insert(out.completed.end(), suffix.begin(), suffix.end());
  out.valid = relabel_valid(in, out.completed);
  return out;
}

CriticRelabel RemoteRelabeler::relabel_critic(const RelabelInput& in) {
  CriticRelabel out;
  out.critique = trimmed(ask(client_, relabel_prompt(prompts::Role::RelabelCritic, in)));
  if (const auto v = remote::parse_verdict(remote::final_line(out.critique))) {
    out.verdict = *v >= 2.0 ? Verdict::Optimal : (*v >= 1.0 ? Verdict::Acceptable : Verdict::Bad);
  }
  return out;
}

// ---------------------------------------------------------------------------
// HER baseline
// ---------------------------------------------------------------------------

namespace {

/// Fixture at the top of an object's container chain, if it is not held.
std::optional<int> resting_fixture(const world::LatentState& s, int idx) {
  int cur = idx;
  while (s.objects[cur].place.where == world::Placement::Where::Receptacle) {
    cur = s.objects[cur].place.index;
    if (world::is_fixture(s.objects[cur].cls)) return cur;
  }
  return std::nullopt;
}

}  // namespace

PddlArgs her_relabel(const world::Scene& scene, const std::vector<SubGoal>& trajectory) {
  const auto& start = scene.state;
  world::LatentState s = start;
  std::optional<int> focus;  // last object successfully picked up
  for (const auto& g : trajectory) {
    const bool pickup = g.verb == world::Verb::PickupObject;
    const auto status = world::step(s, g);
    if (pickup && status.ok()) focus = s.inventory;
  }

  PddlArgs z;
  if (!focus) {
    // Nothing was ever carried: the weakest task about the original object.
    z.object_target = scene.task.pddl.object_target;
    z.parent_target = scene.task.pddl.parent_target.value_or(ObjectClass::CounterTop);
    return z;
  }

  int obj = *focus;
  const auto& o = s.objects[obj];
  // A carried receptacle with something on it is a stacking result.
  std::optional<ObjectClass> carrier;
  if (world::is_receptacle(o.cls)) {
    for (std::size_t i = 0; i < s.objects.size(); ++i) {
      const auto& inner = s.objects[i];
      if (inner.place.where == world::Placement::Where::Receptacle && inner.place.index == obj &&
          world::is_pickupable(inner.cls)) {
        carrier = o.cls;
        obj = static_cast<int>(i);
        break;
      }
    }
  } else if (o.place.where == world::Placement::Where::Receptacle &&
             world::is_pickupable(s.objects[o.place.index].cls)) {
    // Or the object was put into a carrier that already stood in place.
    carrier = s.objects[o.place.index].cls;
  }
  const auto& target = s.objects[obj];
  const auto& before = start.objects[obj];
  z.object_target = target.cls;
  z.object_sliced = target.sliced && !before.sliced;

  const auto rest = resting_fixture(s, *focus);
  if (s.held(*focus) && !carrier) {
    const int lamp = s.fixture(ObjectClass::DeskLamp);
    if (lamp >= 0 && s.objects[lamp].is_on && s.objects[lamp].place.index == s.agent_location) {
      z.task_type = TaskType::Examine;
      z.toggle_target = ObjectClass::DeskLamp;
      z.object_state = world::ObjectState::None;
      z.object_sliced = z.object_sliced && world::is_sliceable(z.object_target);
      return z;
    }
  }
  // Never put down: fall back to where the object started.
  if (rest) {
    z.parent_target = s.objects[*rest].cls;
  } else if (const auto origin = resting_fixture(start, *focus)) {
    z.parent_target = start.objects[*origin].cls;
  } else {
    z.parent_target = ObjectClass::CounterTop;
  }

  if (carrier) {
    z.task_type = TaskType::Stack;
    z.mrecep_target = carrier;
    return z;
  }
  if (target.temp != before.temp && target.temp == world::Temperature::Hot) {
    z.task_type = TaskType::Heat;
  } else if (target.temp != before.temp && target.temp == world::Temperature::Cold) {
    z.task_type = TaskType::Cool;
  } else if (target.clean && !before.clean) {
    z.task_type = TaskType::Clean;
  } else if (rest) {
    int moved_here = 0;
    for (int i : s.instances(target.cls)) {
      if (s.objects[i].moved_at != start.objects[i].moved_at && resting_fixture(s, i) == rest) ++moved_here;
    }
    if (moved_here >= 2) z.task_type = TaskType::PickTwo;
  }
  z.object_state = world::required_state(z.task_type);
  z.two_object = z.task_type == TaskType::PickTwo;
  return z;
}

// ---------------------------------------------------------------------------
// Collection
// ---------------------------------------------------------------------------

AgentFn scripted_agent(double noise, std::uint64_t seed, planner::PlannerConfig cfg) {
  return [noise, seed, cfg](const Scenario& sc, const remote::SampleSource&) {
    oracles::ScriptedActor actor(oracles::ScriptedActor::Kind::GroundTruth, noise);
    oracles::ScriptedAdapter adapter;
    oracles::TrueValueCritic critic({});
    oracles::ScriptedGenerator gen;
    const planner::Oracles o{{&actor}, &critic, &gen, &adapter};
    return planner::run_episode(sc.scene, o, cfg, mix(seed, retrieval::stable_hash(sc.id)));
  };
}

CollectResult collect(const retrieval::SamplePool& gt_pool, const AgentFn& agent, Relabeler& relabeler,
                      std::size_t k) {
  CollectResult result;
  result.pool = gt_pool;
  for (const auto& rec : gt_pool.records()) {
    if (rec.kind != SampleKind::Gt) continue;
    const Scenario sc = scenario_from_id(rec.source_task_id);
    const remote::SampleSource source{&gt_pool, k, {sc.id}};

    CollectedEpisode ep;
    ep.scenario_id = sc.id;
    ep.task = sc.scene.task.pddl;
    for (const auto& s : retrieval::knn_retrieve(gt_pool, {sc.scene.task.instruction, k, {SampleKind::Gt}, {sc.id}})) {
      ep.icl_sources.push_back(s.source_task_id);
    }
    try {
      const auto run = agent(sc, source);
      for (const auto& step : run.trajectory) ep.trajectory.push_back(step.goal);
      ep.outcome = run.outcome;
      ep.aborted = run.aborted;
      if (run.aborted) {
        result.rejections.push_back({{"scenario_id", sc.id}, {"reason", "agent aborted: " + run.abort_reason},
                                     {"raw_relabel", ""}});
        result.episodes.push_back(std::move(ep));
        continue;
      }

      const RelabelInput in{sc.scene, prompts::rename_task(sc.scene.task.pddl), rec.rollout, ep.trajectory};
      const auto actor = relabeler.relabel_actor(in);
      if (!actor.valid || !relabel_valid(in, actor.completed)) {
        result.rejections.push_back(
            {{"scenario_id", sc.id}, {"reason", "relabel does not replay to success"}, {"raw_relabel", actor.raw}});
        result.episodes.push_back(std::move(ep));
        continue;
      }
      const auto critic = relabeler.relabel_critic(in);

      SampleRecord hind;
      hind.id = "hind-actor-" + sc.id;
      hind.kind = SampleKind::HindActor;
      hind.task_text = in.renamed_task;
      hind.pddl = sc.scene.task.pddl;
      hind.rollout = actor.completed;
      hind.think = actor.think;
      hind.source_task_id = sc.id;
      result.pool.add(hind);

      SampleRecord crit;
      crit.id = "hind-critic-" + sc.id;
      crit.kind = SampleKind::HindCritic;
      crit.task_text = in.renamed_task;
      crit.pddl = sc.scene.task.pddl;
      crit.rollout = ep.trajectory;
      crit.critique = critic.critique;
      crit.source_task_id = sc.id;
      result.pool.add(crit);
      ep.accepted = true;
    } catch (const oracles::OracleUnavailable& e) {
      ep.aborted = true;
      result.rejections.push_back({{"scenario_id", sc.id}, {"reason", std::string("oracle unavailable: ") + e.what()},
                                   {"raw_relabel", ""}});
    }
    result.episodes.push_back(std::move(ep));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Distribution shift
// ---------------------------------------------------------------------------

namespace {

std::string bin(const PddlArgs& p) {
  return std::string{world::name(p.task_type)} + "/" + std::string{world::name(p.object_state)} + "/" +
         (p.two_object ? "two" : "one");
}

}  // namespace

double kl_divergence(const std::map<std::string, int>& q, const std::map<std::string, int>& p, double eps) {
  std::set<std::string> keys;
  for (const auto& [k, n] : q) keys.insert(k);
  for (const auto& [k, n] : p) keys.insert(k);
  auto normalized = [&](const std::map<std::string, int>& h) {
    std::map<std::string, double> out;
    double total = 0.0;
    for (const auto& k : keys) {
      const auto it = h.find(k);
      const double v = it == h.end() || it->second == 0 ? eps : static_cast<double>(it->second);
      out[k] = v;
      total += v;
    }
    for (auto& [k, v] : out) v /= total;
    return out;
  };
  const auto qn = normalized(q);
  const auto pn = normalized(p);
  double kl = 0.0;
  for (const auto& k : keys) kl += qn.at(k) * std::log(qn.at(k) / pn.at(k));
  return kl;
}

DistributionReport distribution_report(const std::vector<CollectedEpisode>& episodes) {
  DistributionReport r;
  for (const auto& ep : episodes) {
    if (ep.aborted || ep.trajectory.empty()) continue;
    const Scenario sc = scenario_from_id(ep.scenario_id);
    ++r.original[bin(ep.task)];
    // Completion relabeling keeps the task exactly as it was.
    ++r.completion[bin(ep.task)];
    ++r.her[bin(her_relabel(sc.scene, ep.trajectory))];
  }
  r.kl_completion = kl_divergence(r.completion, r.original);
  r.kl_her = kl_divergence(r.her, r.original);
  return r;
}

Json to_json(const DistributionReport& r) {
  Json j;
  j["kl_completion"] = r.kl_completion;
  j["kl_her"] = r.kl_her;
  j["histograms"] = {{"original", r.original}, {"completion", r.completion}, {"her", r.her}};
  return j;
}

}  // namespace hsp::hindsight
