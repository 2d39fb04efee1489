#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "hsp/retrieval.hpp"
#include "hsp/rng.hpp"

using namespace hsp;
using namespace hsp::retrieval;

namespace {

SampleRecord record(std::string id, SampleKind kind, std::string text, std::string source) {
  SampleRecord r;
  r.id = std::move(id);
  r.kind = kind;
  r.task_text = std::move(text);
  r.pddl = {.task_type = world::TaskType::Pick, .object_target = world::ObjectClass::Mug,
            .parent_target = world::ObjectClass::Shelf};
  r.rollout = {{world::Verb::PickupObject, world::ObjectClass::Mug}, {world::Verb::PutObject, world::ObjectClass::Shelf}};
  if (kind == SampleKind::HindActor) r.think = "I should put the mug on the shelf";
  if (kind == SampleKind::HindCritic) r.critique = "bad";
  r.source_task_id = std::move(source);
  return r;
}

/// Bucket counts straight from the definition, for an independent cosine.
std::map<std::uint64_t, double> buckets(const std::vector<std::string>& tokens) {
  std::map<std::uint64_t, double> out;
  for (const auto& t : tokens) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : t) h = (h ^ c) * 1099511628211ULL;
    out[h % 256] += 1.0;
  }
  return out;
}

double cosine(const std::map<std::uint64_t, double>& a, const std::map<std::uint64_t, double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (auto [k, v] : a) {
    na += v * v;
    if (auto it = b.find(k); it != b.end()) dot += v * it->second;
  }
  for (auto [k, v] : b) nb += v * v;
  return dot / std::sqrt(na * nb);
}

double dot(const Embedding& a, const Embedding& b) {
  double s = 0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("stable hash matches FNV-1a test vectors") {
  CHECK(stable_hash("") == 0xcbf29ce484222325ULL);
  CHECK(stable_hash("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(stable_hash("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("embedding basics") {
  const Embedding e = embed("Put a Mug on the table");
  CHECK(e == embed("Put a Mug on the table"));
  CHECK(e == embed("put a mug, on the TABLE!"));
  double norm = 0;
  for (double x : e) norm += x * x;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);

  Embedding e0{};
  e0[0] = 1.0;
  CHECK(embed("") == e0);
  CHECK(embed("  ,;! ") == e0);
}

TEST_CASE("mug/cup closer than mug/apple") {
  const auto mug = buckets({"put", "a", "mug", "on", "the", "table"});
  const auto cup = buckets({"put", "a", "cup", "on", "the", "table"});
  const auto apple = buckets({"slice", "an", "apple"});
  const double c_cup = cosine(mug, cup);
  const double c_apple = cosine(mug, apple);
  CHECK(c_cup > c_apple);
  // The library's embeddings reproduce the independently computed cosines.
  const auto m = embed("put a mug on the table");
  CHECK(dot(m, embed("put a cup on the table")) == doctest::Approx(c_cup).epsilon(1e-12));
  CHECK(dot(m, embed("slice an apple")) == doctest::Approx(c_apple).epsilon(1e-12));
}

TEST_CASE("knn examples") {
  SamplePool pool;
  pool.add(record("b", SampleKind::Gt, "put a mug on the shelf", "s1"));
  pool.add(record("a", SampleKind::Gt, "wash a pan", "s2"));
  pool.add(record("c", SampleKind::HindActor, "put a mug on the shelf", "s3"));

  auto hits = knn_retrieve(pool, {.text = "wash a pan", .k = 1});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id == "a");
  CHECK(distance(embed("wash a pan"), pool.embedding(1)) == 0.0);

  CHECK(knn_retrieve(pool, {.text = "wash a pan", .k = 0}).empty());
  CHECK(knn_retrieve(pool, {.text = "x", .k = 99}).size() == 3);

  // Equal distances fall back to id order.
  hits = knn_retrieve(pool, {.text = "put a mug on the shelf", .k = 2});
  CHECK(hits[0].id == "b");
  CHECK(hits[1].id == "c");

  hits = knn_retrieve(pool, {.text = "put a mug on the shelf", .k = 3, .kinds = {SampleKind::HindActor}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id == "c");

  hits = knn_retrieve(pool, {.text = "put a mug on the shelf", .k = 3, .exclude_sources = {"s1", "s3"}});
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].id == "a");
}

TEST_CASE("pool rejects invalid and duplicate records") {
  SamplePool pool;
  pool.add(record("a", SampleKind::Gt, "t", "s"));
  CHECK_THROWS_AS(pool.add(record("a", SampleKind::Gt, "t", "s")), std::invalid_argument);
  auto bad = record("b", SampleKind::HindActor, "t", "s");
  bad.think.reset();
  CHECK_THROWS_AS(pool.add(bad), std::invalid_argument);
  auto empty = record("c", SampleKind::Gt, "t", "s");
  empty.rollout.clear();
  CHECK_THROWS_AS(pool.add(empty), std::invalid_argument);
  auto critic = record("d", SampleKind::HindCritic, "t", "s");
  critic.rollout.clear();
  CHECK_NOTHROW(pool.add(critic));
}

TEST_CASE("pool JSONL round trip") {
  SamplePool pool;
  pool.add(record("r1", SampleKind::Gt, "put a mug on the shelf", "Pick-1"));
  pool.add(record("r2", SampleKind::HindActor, "wash a pan", "Clean-2"));
  pool.add(record("r3", SampleKind::HindCritic, "wash a pan", "Clean-2"));
  const auto path = std::filesystem::temp_directory_path() / "hsp_pool_roundtrip.jsonl";
  pool.save_jsonl(path);
  const SamplePool back = SamplePool::load_jsonl(path);
  CHECK(back.records() == pool.records());
  for (std::size_t i = 0; i < pool.size(); ++i) CHECK(back.embedding(i) == pool.embedding(i));
  std::filesystem::remove(path);
}

TEST_CASE("knn agrees with a brute-force scan on random pools") {
  const std::vector<std::string> vocab{"put", "a", "mug", "cup", "on", "the", "table", "wash", "pan",
                                       "heat", "apple", "fridge", "two", "candles", "cabinet", "lamp"};
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    SamplePool pool;
    const std::size_t n = rng.uniform(501);
    for (std::size_t i = 0; i < n; ++i) {
      std::string text;
      const std::size_t len = rng.uniform(6);  // zero-length texts allowed
      for (std::size_t w = 0; w < len; ++w) text += vocab[rng.uniform(vocab.size())] + " ";
      const auto kind = static_cast<SampleKind>(rng.uniform(4));
      pool.add(record("r" + std::to_string(rng.next() % 100000) + "_" + std::to_string(i), kind, text,
                      "s" + std::to_string(rng.uniform(20))));
    }
    Query q;
    for (std::size_t w = 0; w < 1 + rng.uniform(4); ++w) q.text += vocab[rng.uniform(vocab.size())] + " ";
    q.k = rng.uniform(12);
    if (rng.chance(0.5)) q.kinds = {static_cast<SampleKind>(rng.uniform(4)), static_cast<SampleKind>(rng.uniform(4))};
    if (rng.chance(0.5)) q.exclude_sources = {"s" + std::to_string(rng.uniform(20))};

    // Brute force: score everything that passes the filters, full sort.
    const Embedding qe = embed(q.text);
    std::vector<std::tuple<double, std::string, std::size_t>> all;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const auto& r = pool.records()[i];
      if (!q.kinds.empty() && !q.kinds.contains(r.kind)) continue;
      if (q.exclude_sources.contains(r.source_task_id)) continue;
      double s = 0;
      const Embedding re = embed(r.task_text);
      for (std::size_t d = 0; d < kEmbeddingDim; ++d) s += (qe[d] - re[d]) * (qe[d] - re[d]);
      all.emplace_back(std::sqrt(s), r.id, i);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::string> expected;
    for (std::size_t i = 0; i < std::min(q.k, all.size()); ++i) expected.push_back(std::get<1>(all[i]));

    std::vector<std::string> got;
    for (const auto& r : knn_retrieve(pool, q)) {
      got.push_back(r.id);
      CHECK_FALSE(q.exclude_sources.contains(r.source_task_id));
    }
    CHECK(got == expected);
    CHECK(knn_retrieve(pool, q) == knn_retrieve(pool, q));
  }
}

TEST_CASE("distance symmetry and non-negativity") {
  Rng rng(5);
  const std::vector<std::string> vocab{"put", "mug", "table", "wash", "pan", "heat", "apple", "x1", "y2"};
  for (int i = 0; i < 10000; ++i) {
    std::string a, b;
    for (std::size_t w = 0; w < rng.uniform(5); ++w) a += vocab[rng.uniform(vocab.size())] + " ";
    for (std::size_t w = 0; w < rng.uniform(5); ++w) b += vocab[rng.uniform(vocab.size())] + " ";
    const auto ea = embed(a), eb = embed(b);
    CHECK(distance(ea, eb) == distance(eb, ea));
    CHECK(distance(ea, eb) >= 0.0);
    CHECK(distance(ea, ea) == 0.0);
  }
}
