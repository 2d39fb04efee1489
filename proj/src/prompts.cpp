#include "hsp/prompts.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "hsp/lexicon.hpp"

namespace hsp::prompts {
namespace detail {
extern const std::pair<std::string_view, std::string_view> kTemplates[];
extern const std::size_t kNumTemplates;
}  // namespace detail

namespace {

using world::ObjectClass;
using world::PddlArgs;
using world::TaskType;

constexpr std::array<std::string_view, 7> kRoleNames{"actor_gt",          "actor_hind",       "critic",
                                                     "adapter",           "relabel_think",    "relabel_complete",
                                                     "relabel_critic"};

std::string_view frame_stem(Role r) {
  switch (r) {
    case Role::ActorGt:
    case Role::ActorHind: return "frame_actor";
    case Role::Critic: return "frame_critic";
    case Role::Adapter: return "frame_adapter";
    case Role::RelabelThink: return "frame_relabel_think";
    case Role::RelabelComplete: return "frame_relabel_complete";
    case Role::RelabelCritic: return "frame_relabel_critic";
  }
  return "frame_actor";
}

std::string_view base_stem(Role r) {
  switch (r) {
    case Role::ActorGt:
    case Role::ActorHind: return "base_actor";
    case Role::Critic: return "base_critic";
    case Role::Adapter: return "base_adapter";
    case Role::RelabelThink: return "base_relabel_think";
    case Role::RelabelComplete: return "base_relabel_complete";
    case Role::RelabelCritic: return "base_relabel_critic";
  }
  return "base_actor";
}

std::string trim_newlines(std::string_view s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.remove_suffix(1);
  return std::string{s};
}

std::string render_sample(Role role, std::size_t index, const retrieval::SampleRecord& r) {
  std::string out = "Example " + std::to_string(index + 1) + ":\n";
  const std::string think = r.think.value_or("");
  const std::string critique = r.critique.value_or("");
  switch (role) {
    case Role::ActorGt:
      out += "Task: " + r.task_text + "\nActions:\n" + render_rollout(r.rollout) + "\n";
      break;
    case Role::ActorHind:
      out += "Task: " + r.task_text + "\nThink: " + think + "\nActions:\n" + render_rollout(r.rollout) + "\n";
      break;
    case Role::Critic:
    case Role::RelabelCritic:
      out += "Task: " + r.task_text + "\nTrajectory:\n" + render_rollout(r.rollout) + "\nEvaluation: " + critique + "\n";
      break;
    case Role::Adapter:
      out += "Instruction: " + r.task_text + "\nArguments: task type: " + std::string{world::name(r.pddl.task_type)} +
             "; " + render_pddl(r.pddl) + "\n";
      break;
    case Role::RelabelThink:
      out += "Task: " + r.task_text + "\nTrajectory:\n" + render_rollout(r.rollout) + "\nThink: " + think + "\n";
      break;
    case Role::RelabelComplete:
      out += "Task: " + r.task_text + "\nThink: " + think + "\nCompleted trajectory:\n" + render_rollout(r.rollout) +
             "\n";
      break;
  }
  return out;
}

void require(bool ok, const char* slot, Role role) {
  if (!ok) {
    throw PromptError(slot, std::string{"prompt for role "} + std::string{name(role)} + " is missing slot <" + slot +
                                ">");
  }
}

std::string object_list_text(std::vector<ObjectClass> classes) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.empty()) return "none";
  std::string out;
  for (auto c : classes) {
    if (!out.empty()) out += ", ";
    out += world::name(c);
  }
  return out;
}

/// Single left-to-right pass: inserted values are never rescanned.
std::string fill(std::string_view frame, const std::map<std::string, std::string, std::less<>>& slots) {
  std::string out;
  std::size_t i = 0;
  while (i < frame.size()) {
    if (frame[i] == '<') {
      const auto close = frame.find('>', i);
      if (close != std::string_view::npos) {
        auto it = slots.find(frame.substr(i + 1, close - i - 1));
        if (it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += frame[i++];
  }
  return out;
}

std::string object_word(ObjectClass c) { return std::string{world::name(c)}; }

}  // namespace

std::string_view name(Role r) { return kRoleNames[static_cast<std::size_t>(r)]; }

std::string_view template_text(std::string_view stem) {
  for (std::size_t i = 0; i < detail::kNumTemplates; ++i) {
    if (detail::kTemplates[i].first == stem) return detail::kTemplates[i].second;
  }
  throw std::out_of_range("no template named " + std::string{stem});
}

std::string base_info(Role r) { return trim_newlines(template_text(base_stem(r))); }

std::string render_history(const History& history) {
  if (history.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + world::render(history[i].goal) + " (" + world::render(history[i].status) +
           ")";
  }
  return out;
}

std::string render_rollout(const std::vector<world::SubGoal>& rollout) {
  if (rollout.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < rollout.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(i + 1) + ". " + world::render(rollout[i]);
  }
  return out;
}

std::string build_prompt(const PromptContext& ctx) {
  const Role role = ctx.role;
  require(!ctx.base_info.empty(), "base_info", role);
  require(!ctx.task_text.empty(), "task_text", role);
  require(ctx.samples.size() == ctx.k, "samples", role);
  const bool planning = role == Role::ActorGt || role == Role::ActorHind || role == Role::Critic;
  if (planning) require(ctx.pddl_predicted.has_value(), "PDDL_predicted", role);
  if (role == Role::Adapter && ctx.pddl_predicted) {
    throw PromptError("PDDL_predicted", "adapter prompts take no <PDDL_predicted>");
  }
  if (role == Role::Critic) require(ctx.candidate.has_value(), "candidate", role);
  if (role == Role::RelabelComplete) require(ctx.think.has_value(), "think", role);
  for (const auto& s : ctx.samples) {
    if (role == Role::ActorHind || role == Role::RelabelThink || role == Role::RelabelComplete) {
      require(s.think.has_value(), "samples", role);
    }
    if (role == Role::Critic || role == Role::RelabelCritic) require(s.critique.has_value(), "samples", role);
  }

  std::string samples;
  for (std::size_t i = 0; i < ctx.samples.size(); ++i) {
    if (i) samples += "\n";
    samples += render_sample(role, i, ctx.samples[i]);
  }

  std::map<std::string, std::string, std::less<>> slots{
      {"base_info", ctx.base_info},
      {"K", std::to_string(ctx.k)},
      {"samples", samples},
      {"task_text", ctx.task_text},
      {"object_list", object_list_text(ctx.object_list)},
      {"previous_history", render_history(ctx.history)},
      {"history_information", history_summary(ctx.history)},
      {"trajectory", render_rollout(ctx.trajectory)},
      {"reference", render_rollout(ctx.reference)},
  };
  if (ctx.pddl_predicted) slots["PDDL_predicted"] = render_pddl(*ctx.pddl_predicted);
  if (ctx.candidate) slots["candidate"] = *ctx.candidate;
  if (ctx.think) slots["think"] = *ctx.think;
  return fill(template_text(frame_stem(role)), slots);
}

std::string render_pddl(const PddlArgs& p) {
  std::string out = "target object: " + object_word(p.object_target);
  if (p.mrecep_target) out += "; carrier: " + object_word(*p.mrecep_target);
  if (p.parent_target) out += "; destination: " + object_word(*p.parent_target);
  if (p.toggle_target) out += "; toggle: " + object_word(*p.toggle_target);
  out += "; state: " + std::string{world::name(p.object_state)};
  out += "; sliced: " + std::string{p.object_sliced ? "yes" : "no"};
  out += "; two objects: " + std::string{p.two_object ? "yes" : "no"};
  return out;
}

std::string rename_task(const PddlArgs& p) {
  using world::lexicon::article;
  using world::lexicon::preposition;
  const std::string obj = object_word(p.object_target);
  const ObjectClass parent = p.parent_target.value_or(ObjectClass::CounterTop);
  const std::string dest = std::string{preposition(parent)} + " the " + object_word(parent);
  switch (p.task_type) {
    case TaskType::Examine:
      return "Pick up one " + obj + " and examine it under the " +
             object_word(p.toggle_target.value_or(ObjectClass::DeskLamp));
    case TaskType::PickTwo:
      return "Pick up two " + world::lexicon::plural(obj) + " and put them " + dest;
    case TaskType::Stack: {
      const std::string carrier = object_word(p.mrecep_target.value_or(ObjectClass::Plate));
      return "Put " + std::string{article(obj)} + " " + obj + " on " + std::string{article(carrier)} + " " + carrier +
             " and put the " + carrier + " " + dest;
    }
    default: {
      // With adjectives the object reads as a phrase: "one cooled potato".
      std::string head = obj;
      if (p.object_state != world::ObjectState::None || p.object_sliced) {
        head = world::lexicon::phrase(p.object_target);
        if (p.object_sliced) head = "sliced " + head;
        if (p.object_state != world::ObjectState::None) {
          head = std::string{world::lexicon::state_adjective(p.object_state)} + " " + head;
        }
      }
      return "Pick up one " + head + " and put it " + dest;
    }
  }
}

std::string history_summary(const History& history) {
  std::optional<ObjectClass> held;
  std::map<ObjectClass, bool> open;
  for (const auto& h : history) {
    if (!h.status.ok()) continue;
    switch (h.goal.verb) {
      case world::Verb::PickupObject: held = h.goal.arg; break;
      case world::Verb::PutObject: held.reset(); break;
      case world::Verb::OpenObject: open[h.goal.arg] = true; break;
      case world::Verb::CloseObject: open[h.goal.arg] = false; break;
      default: break;
    }
  }
  std::string out = "holding " + (held ? object_word(*held) : std::string{"nothing"});
  if (open.empty()) return out + "; no containers opened";
  for (const auto& [cls, is_open] : open) out += "; " + object_word(cls) + (is_open ? " is open" : " is closed");
  return out;
}

std::string belief_summary(const world::LatentState& s) {
  std::string out = "holding " + (s.inventory ? object_word(s.objects[*s.inventory].cls) : std::string{"nothing"});
  std::set<ObjectClass> open, on;
  for (const auto& o : s.objects) {
    if (world::is_openable(o.cls) && o.is_open) open.insert(o.cls);
    if (world::is_toggleable(o.cls) && o.is_on) on.insert(o.cls);
  }
  if (open.empty()) out += "; no containers opened";
  for (auto c : open) out += "; " + object_word(c) + " is open";
  for (auto c : on) out += "; " + object_word(c) + " is on";
  return out;
}

}  // namespace hsp::prompts
