#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsp/retrieval.hpp"
#include "hsp/world.hpp"

namespace hsp::prompts {

enum class Role : std::uint8_t { ActorGt, ActorHind, Critic, Adapter, RelabelThink, RelabelComplete, RelabelCritic };

std::string_view name(Role r);  // "actor_gt", ...

struct HistoryItem {
  world::SubGoal goal;
  world::Status status;

  bool operator==(const HistoryItem&) const = default;
};
using History = std::vector<HistoryItem>;

/// Raised when a context lacks a slot its role needs (or carries one it must not).
class PromptError : public std::invalid_argument {
 public:
  PromptError(std::string slot, const std::string& message)
      : std::invalid_argument(message), slot_(std::move(slot)) {}
  const std::string& slot() const { return slot_; }

 private:
  std::string slot_;
};

struct PromptContext {
  Role role = Role::ActorGt;
  std::string base_info;
  std::vector<retrieval::SampleRecord> samples;
  std::string task_text;
  std::vector<world::ObjectClass> object_list;
  std::optional<world::PddlArgs> pddl_predicted;
  History history;
  std::size_t k = 0;
  /// Critic only: the rendered rollout under judgement.
  std::optional<std::string> candidate;
  /// Relabel roles: the trajectory being reviewed.
  std::vector<world::SubGoal> trajectory;
  /// Relabel roles: the ground-truth rollout of the same task.
  std::vector<world::SubGoal> reference;
  /// RelabelComplete only.
  std::optional<std::string> think;
};

/// Raw template file contents by file stem, e.g. "frame_actor".
std::string_view template_text(std::string_view stem);
/// Role description shipped with the repository.
std::string base_info(Role r);

std::string build_prompt(const PromptContext& ctx);

/// Canonical task description derived from the arguments alone.
std::string rename_task(const world::PddlArgs& pddl);

/// "holding Pan; Fridge is open" from successful actions only.
std::string history_summary(const History& history);

/// Summary of a (believed) latent state in history_summary's conventions,
/// plus devices that are switched on.
std::string belief_summary(const world::LatentState& s);

/// "target object: Apple; destination: Fridge; state: heated; sliced: no; two objects: no".
std::string render_pddl(const world::PddlArgs& pddl);

/// Numbered list, "1. PickupObject Pan (ok)"; "none" when empty.
std::string render_history(const History& history);
std::string render_rollout(const std::vector<world::SubGoal>& rollout);

struct Match {
  world::SubGoal goal;
  double similarity = 0.0;
  bool weak = false;  // similarity < 0.5
};

/// Maps free text onto the most similar legal sub-goal. `legal` must be
/// non-empty; ties go to the earlier legal entry.
Match canonicalize(std::string_view raw, const std::vector<world::SubGoal>& legal);

inline constexpr double kWeakMatch = 0.5;

}  // namespace hsp::prompts
