#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "hsp/lexicon.hpp"
#include "hsp/remote.hpp"

namespace hsp::remote {

using oracles::OracleContext;
using world::ObjectClass;
using world::PddlArgs;
using world::SubGoal;
using world::TaskType;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<retrieval::SampleRecord> fetch_samples(const SampleSource& src, const std::string& text,
                                                   retrieval::SampleKind kind) {
  if (!src.pool || src.k == 0) return {};
  retrieval::Query q{text, src.k, {kind}, {src.exclude_sources.begin(), src.exclude_sources.end()}};
  return retrieval::knn_retrieve(*src.pool, q);
}

retrieval::SampleKind sample_kind(prompts::Role role) {
  switch (role) {
    case prompts::Role::ActorHind: return retrieval::SampleKind::HindActor;
    case prompts::Role::Critic: return retrieval::SampleKind::HindCritic;
    case prompts::Role::Adapter: return retrieval::SampleKind::Adapter;
    default: return retrieval::SampleKind::Gt;
  }
}

prompts::PromptContext planning_prompt(prompts::Role role, const OracleContext& ctx, const SampleSource& src) {
  prompts::PromptContext p;
  p.role = role;
  p.base_info = prompts::base_info(role);
  p.samples = fetch_samples(src, ctx.task.instruction, sample_kind(role));
  p.k = p.samples.size();
  p.task_text = ctx.task.instruction;
  p.object_list = ctx.observation.visible_classes;
  p.pddl_predicted = ctx.pddl_predicted;
  p.history = ctx.history;
  return p;
}

std::string ask(RemoteClient& client, const std::string& base_info, const std::string& prompt) {
  const auto [system, user] = split_prompt(prompt, base_info);
  return client.complete(system, user);
}

std::string render_candidate(const oracles::RolloutCandidate& c) {
  std::string out;
  for (std::size_t i = 0; i < c.prefix.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". from \"" + c.prefix[i].summary + "\": " + world::render(c.prefix[i].goal);
  }
  return out;
}

std::optional<ObjectClass> read_class(std::string_view value, const std::vector<ObjectClass>& visible) {
  const std::string v = trim(value);
  if (v.empty() || lower(v) == "none" || lower(v) == "n/a") return std::nullopt;
  if (auto c = world::parse_class(v)) return c;
  for (auto c : world::all_classes()) {
    if (lower(world::name(c)) == lower(v)) return c;
  }
  const auto mentions = world::lexicon::find_mentions(v);
  if (mentions.empty()) return std::nullopt;
  for (auto c : mentions.front().candidates) {
    if (std::find(visible.begin(), visible.end(), c) != visible.end()) return c;
  }
  return mentions.front().candidates.front();
}

bool read_flag(std::string_view value) {
  const std::string v = lower(trim(value));
  return v == "yes" || v == "true" || v == "1";
}

bool is_carrier(ObjectClass c) { return world::is_pickupable(c) && world::is_receptacle(c); }

}  // namespace

std::pair<std::string, std::string> split_prompt(const std::string& prompt, const std::string& base_info) {
  if (!base_info.empty() && prompt.starts_with(base_info)) {
    std::string rest = prompt.substr(base_info.size());
    const auto b = rest.find_first_not_of('\n');
    return {base_info, b == std::string::npos ? std::string{} : rest.substr(b)};
  }
  return {base_info, prompt};
}

std::string final_line(std::string_view text) {
  std::string last;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    if (!line.empty()) last = std::move(line);
    start = end + 1;
  }
  return last;
}

std::optional<double> parse_verdict(std::string_view line) {
  const std::string l = lower(line);
  // Strongest verdict first, so "optimal, not bad" reads as optimal.
  for (auto [word, value] : {std::pair{"optimal", 2.0}, {"acceptable", 1.0}, {"bad", 0.0}}) {
    if (l.find(word) != std::string::npos) return value;
  }
  const auto digit = l.find_first_of("-0123456789");
  if (digit == std::string::npos) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(l.data() + digit, l.data() + l.size(), v);
  if (ec != std::errc{} || !std::isfinite(v)) return std::nullopt;
  return v;
}

PddlArgs parse_adapter_answer(std::string_view text, const std::vector<ObjectClass>& visible) {
  std::map<std::string, std::string> fields;
  std::string normalized(text);
  std::replace(normalized.begin(), normalized.end(), ';', '\n');
  std::size_t start = 0;
  while (start <= normalized.size()) {
    auto end = normalized.find('\n', start);
    if (end == std::string::npos) end = normalized.size();
    const std::string line = normalized.substr(start, end - start);
    const auto colon = line.find(':');
    if (colon != std::string::npos) {
      std::string key = lower(trim(line.substr(0, colon)));
      std::replace(key.begin(), key.end(), '_', ' ');
      fields[key] = trim(line.substr(colon + 1));
    }
    start = end + 1;
  }
  auto get = [&](std::initializer_list<const char*> keys) -> std::optional<std::string> {
    for (const char* k : keys) {
      if (auto it = fields.find(k); it != fields.end()) return it->second;
    }
    return std::nullopt;
  };

  PddlArgs p;
  if (auto v = get({"target object", "object target", "object"})) {
    if (auto c = read_class(*v, visible); c && world::is_pickupable(*c)) p.object_target = *c;
  }
  std::optional<ObjectClass> carrier, parent, toggle;
  if (auto v = get({"carrier", "mrecep target", "movable receptacle"})) {
    if (auto c = read_class(*v, visible); c && is_carrier(*c)) carrier = c;
  }
  if (auto v = get({"destination", "parent target", "receptacle"})) {
    if (auto c = read_class(*v, visible); c && world::is_receptacle(*c) && world::is_fixture(*c)) parent = c;
  }
  if (auto v = get({"toggle", "toggle target"})) {
    if (auto c = read_class(*v, visible); c && world::is_toggleable(*c)) toggle = c;
  }
  std::optional<world::ObjectState> state;
  if (auto v = get({"state", "object state"})) state = world::parse_object_state(lower(*v));
  const auto two_text = get({"two objects", "two object"});
  const bool two = two_text && read_flag(*two_text);

  // Task type: stated, else implied by the other fields.
  std::optional<TaskType> type;
  if (auto v = get({"task type", "type", "task"})) {
    for (auto t : world::all_task_types()) {
      if (lower(world::name(t)) == lower(*v)) type = t;
    }
  }
  if (!type) {
    if (two) {
      type = TaskType::PickTwo;
    } else if (toggle) {
      type = TaskType::Examine;
    } else if (state == world::ObjectState::Heated) {
      type = TaskType::Heat;
    } else if (state == world::ObjectState::Cooled) {
      type = TaskType::Cool;
    } else if (state == world::ObjectState::Cleaned) {
      type = TaskType::Clean;
    } else if (carrier) {
      type = TaskType::Stack;
    } else {
      type = TaskType::Pick;
    }
  }

  p.task_type = *type;
  p.object_state = world::required_state(p.task_type);
  p.two_object = p.task_type == TaskType::PickTwo;
  if (p.task_type == TaskType::Stack) p.mrecep_target = carrier.value_or(ObjectClass::Plate);
  if (p.task_type == TaskType::Examine) {
    p.toggle_target = toggle.value_or(ObjectClass::DeskLamp);
  } else {
    p.parent_target = parent.value_or(ObjectClass::CounterTop);
  }
  const auto sliced_text = get({"sliced", "object sliced"});
  p.object_sliced = sliced_text && read_flag(*sliced_text) && world::is_sliceable(p.object_target);
  return p;
}

// ---------------------------------------------------------------------------

RemoteActor::RemoteActor(RemoteClient& client, prompts::Role role, SampleSource samples, Logger log)
    : client_(client), role_(role), samples_(std::move(samples)), log_(std::move(log)) {
  if (role != prompts::Role::ActorGt && role != prompts::Role::ActorHind) {
    throw std::invalid_argument("RemoteActor needs an actor role");
  }
}

std::string RemoteActor::name() const { return std::string(prompts::name(role_)); }

std::vector<SubGoal> RemoteActor::propose(const OracleContext& ctx, int m) {
  if (ctx.legal.empty()) throw std::invalid_argument("propose: empty legal set");
  const auto pc = planning_prompt(role_, ctx, samples_);
  const std::string prompt = prompts::build_prompt(pc);
  std::vector<SubGoal> out;
  for (int j = 0; j < m; ++j) {
    const std::string text = ask(client_, pc.base_info, prompt);
    const auto line = final_line(text);
    const auto match = prompts::canonicalize(line, ctx.legal);
    if (log_) {
      log_({{"event", "actor"}, {"role", name()}, {"raw", text}, {"parsed", world::render(match.goal)},
            {"similarity", match.similarity}, {"weak", match.weak}});
    }
    out.push_back(match.goal);
  }
  return out;
}

RemoteCritic::RemoteCritic(RemoteClient& client, SampleSource samples, Logger log)
    : client_(client), samples_(std::move(samples)), log_(std::move(log)) {}

double RemoteCritic::score(const OracleContext& ctx, const oracles::RolloutCandidate& candidate) {
  auto pc = planning_prompt(prompts::Role::Critic, ctx, samples_);
  pc.candidate = render_candidate(candidate);
  const std::string text = ask(client_, pc.base_info, prompts::build_prompt(pc));
  const auto verdict = parse_verdict(final_line(text));
  if (log_) {
    log_({{"event", "critic"}, {"raw", text}, {"score", verdict.value_or(0.0)}, {"unparsed", !verdict.has_value()}});
  }
  return verdict.value_or(0.0);
}

RemoteAdapter::RemoteAdapter(RemoteClient& client, SampleSource samples, Logger log)
    : client_(client), samples_(std::move(samples)), log_(std::move(log)) {}

PddlArgs RemoteAdapter::predict(const oracles::AdapterQuery& q) {
  prompts::PromptContext pc;
  pc.role = prompts::Role::Adapter;
  pc.base_info = prompts::base_info(pc.role);
  pc.samples = fetch_samples(samples_, q.instruction, retrieval::SampleKind::Adapter);
  pc.k = pc.samples.size();
  pc.task_text = q.instruction;
  pc.object_list = q.object_list;
  pc.history = q.history;
  const std::string text = ask(client_, pc.base_info, prompts::build_prompt(pc));
  const auto p = parse_adapter_answer(text, q.object_list);
  if (log_) log_({{"event", "adapter"}, {"raw", text}, {"parsed", world::to_json(p)}});
  return p;
}

oracles::PredictedState RemoteGenerator::next_state(const OracleContext& ctx, const oracles::PredictedState& current,
                                                    const SubGoal& g) {
  const std::string base{prompts::template_text("base_generator")};
  std::string user{prompts::template_text("frame_generator")};
  auto fill = [&](std::string_view slot, const std::string& value) {
    const auto at = user.find(slot);
    if (at != std::string::npos) user.replace(at, slot.size(), value);
  };
  fill("<base_info>", "");
  fill("<task_text>", ctx.task.instruction);
  fill("<state>", current.summary);
  fill("<action>", world::render(g));
  user = trim(user);
  auto [belief, status] = world::apply_subgoal(current.belief, g);
  std::string summary = final_line(client_.complete(trim(base), user));
  return {std::move(summary), std::move(belief), status};
}

}  // namespace hsp::remote
