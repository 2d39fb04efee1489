#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsp/serialize.hpp"
#include "hsp/world.hpp"

namespace hsp::retrieval {

enum class SampleKind : std::uint8_t { Gt, HindActor, HindCritic, Adapter };

std::string_view name(SampleKind k);  // "gt", "hind_actor", "hind_critic", "adapter"
std::optional<SampleKind> parse_kind(std::string_view text);

struct SampleRecord {
  std::string id;
  SampleKind kind = SampleKind::Gt;
  std::string task_text;
  world::PddlArgs pddl;
  std::vector<world::SubGoal> rollout;
  std::optional<std::string> think;
  std::optional<std::string> critique;
  std::string source_task_id;

  bool operator==(const SampleRecord&) const = default;
};

/// First violated record invariant, if any.
std::optional<std::string> validate(const SampleRecord& r);

Json to_json(const SampleRecord& r);
SampleRecord record_from_json(const Json& j);

inline constexpr std::size_t kEmbeddingDim = 256;
using Embedding = std::array<double, kEmbeddingDim>;
using Embedder = std::function<Embedding(std::string_view)>;

/// FNV-1a, 64 bit.
std::uint64_t stable_hash(std::string_view token);

/// Hashed bag of words: lower-case, split on non-alphanumerics, count each
/// token in bucket hash % 256, L2-normalize. Token-free text maps to e0.
Embedding embed(std::string_view text);

double distance(const Embedding& a, const Embedding& b);

/// Records plus one embedding each. Append-only; ids are unique.
class SamplePool {
 public:
  explicit SamplePool(Embedder embedder = embed) : embedder_(std::move(embedder)) {}

  /// Throws std::invalid_argument on an invalid record or a duplicate id.
  void add(SampleRecord r);
  void merge(const SamplePool& other);

  const std::vector<SampleRecord>& records() const { return records_; }
  const Embedding& embedding(std::size_t i) const { return embeddings_[i]; }
  std::size_t size() const { return records_.size(); }
  const Embedder& embedder() const { return embedder_; }
  bool contains(const std::string& id) const { return ids_.contains(id); }

  /// One JSON record per line; embeddings are recomputed on load.
  void save_jsonl(const std::filesystem::path& path) const;
  static SamplePool load_jsonl(const std::filesystem::path& path, Embedder embedder = embed);

 private:
  Embedder embedder_;
  std::vector<SampleRecord> records_;
  std::vector<Embedding> embeddings_;
  std::set<std::string> ids_;
};

struct Query {
  std::string text;
  std::size_t k = 0;
  std::set<SampleKind> kinds;            // empty = every kind
  std::set<std::string> exclude_sources; // source_task_ids to skip
};

/// The k records nearest to embed(query.text) in Euclidean distance; ties by
/// ascending id.
std::vector<SampleRecord> knn_retrieve(const SamplePool& pool, const Query& query);

}  // namespace hsp::retrieval
