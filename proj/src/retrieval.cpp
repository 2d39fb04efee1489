#include "hsp/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace hsp::retrieval {

namespace {
constexpr std::array<std::string_view, 4> kKindNames{"gt", "hind_actor", "hind_critic", "adapter"};
}

std::string_view name(SampleKind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<SampleKind> parse_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<SampleKind>(i);
  }
  return std::nullopt;
}

std::optional<std::string> validate(const SampleRecord& r) {
  if (r.id.empty()) return "empty id";
  if (r.kind == SampleKind::HindActor && (!r.think || r.think->empty())) return "hind_actor record without think";
  if (r.kind == SampleKind::HindCritic && (!r.critique || r.critique->empty())) {
    return "hind_critic record without critique";
  }
  if ((r.kind == SampleKind::Gt || r.kind == SampleKind::HindActor) && r.rollout.empty()) {
    return std::string{name(r.kind)} + " record with empty rollout";
  }
  return std::nullopt;
}

Json to_json(const SampleRecord& r) {
  Json j;
  j["id"] = r.id;
  j["kind"] = name(r.kind);
  j["task_text"] = r.task_text;
  j["pddl"] = world::to_json(r.pddl);
  j["rollout"] = world::to_json(r.rollout);
  j["think"] = r.think ? Json(*r.think) : Json(nullptr);
  j["critique"] = r.critique ? Json(*r.critique) : Json(nullptr);
  j["source_task_id"] = r.source_task_id;
  return j;
}

SampleRecord record_from_json(const Json& j) {
  try {
    SampleRecord r;
    r.id = j.at("id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    auto k = parse_kind(kind);
    if (!k) throw ParseError("invalid sample kind '" + kind + "'");
    r.kind = *k;
    r.task_text = j.at("task_text").get<std::string>();
    r.pddl = world::pddl_from_json(j.at("pddl"));
    r.rollout = world::subgoals_from_json(j.at("rollout"));
    if (j.contains("think") && !j.at("think").is_null()) r.think = j.at("think").get<std::string>();
    if (j.contains("critique") && !j.at("critique").is_null()) r.critique = j.at("critique").get<std::string>();
    r.source_task_id = j.at("source_task_id").get<std::string>();
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string{"sample record: "} + e.what());
  }
}

std::uint64_t stable_hash(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Embedding embed(std::string_view text) {
  Embedding v{};
  std::string token;
  bool any = false;
  auto flush = [&] {
    if (token.empty()) return;
    v[stable_hash(token) % kEmbeddingDim] += 1.0;
    any = true;
    token.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  if (!any) {
    v[0] = 1.0;
    return v;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double distance(const Embedding& a, const Embedding& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

void SamplePool::add(SampleRecord r) {
  if (auto err = validate(r)) throw std::invalid_argument("sample " + r.id + ": " + *err);
  if (ids_.contains(r.id)) throw std::invalid_argument("duplicate sample id " + r.id);
  embeddings_.push_back(embedder_(r.task_text));
  ids_.insert(r.id);
  records_.push_back(std::move(r));
}

void SamplePool::merge(const SamplePool& other) {
  for (const auto& r : other.records()) add(r);
}

void SamplePool::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pool file " + path.string());
  for (const auto& r : records_) out << to_json(r).dump() << '\n';
}

SamplePool SamplePool::load_jsonl(const std::filesystem::path& path, Embedder embedder) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read pool file " + path.string());
  SamplePool pool(std::move(embedder));
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      pool.add(record_from_json(Json::parse(line)));
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pool;
}

std::vector<SampleRecord> knn_retrieve(const SamplePool& pool, const Query& query) {
  if (query.k == 0) return {};
  const Embedding q = pool.embedder()(query.text);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& r = pool.records()[i];
    if (!query.kinds.empty() && !query.kinds.contains(r.kind)) continue;
    if (query.exclude_sources.contains(r.source_task_id)) continue;
    scored.emplace_back(distance(q, pool.embedding(i)), i);
  }
  auto before = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return pool.records()[a.second].id < pool.records()[b.second].id;
  };
  const std::size_t n = std::min(query.k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(), before);
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool.records()[scored[i].second]);
  return out;
}

}  // namespace hsp::retrieval
