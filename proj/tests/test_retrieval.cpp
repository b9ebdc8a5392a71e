#include <random>

#include <gtest/gtest.h>

#include "biasalert/embedding.hpp"
#include "biasalert/error.hpp"
#include "biasalert/retrieval.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace biasalert {
namespace {

const LocalHashEmbedder kLocal;

void expect_buckets(const Embedding& v, std::vector<std::pair<std::size_t, double>> expected) {
  ASSERT_EQ(v.size(), LocalHashEmbedder::kDimension);
  std::vector<std::pair<std::size_t, double>> nonzero;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0f) nonzero.emplace_back(i, v[i]);
  }
  ASSERT_EQ(nonzero.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(nonzero[i].first, expected[i].first);
    EXPECT_NEAR(nonzero[i].second, expected[i].second, 1e-6);
  }
}

TEST(LocalEmbedder, MatchesPythonOracle) {
  const double fifth = 0.44721359549995793;
  expect_buckets(kLocal.embed_one("women can't handle drugs"),
                 {{17, fifth}, {51, fifth}, {163, fifth}, {197, fifth}, {212, fifth}});
  expect_buckets(kLocal.embed_one("aaa aaa"), {{162, 1.0}});
  expect_buckets(kLocal.embed_one("black people are dangerous"), {{14, 0.5}, {77, 0.5}, {211, 0.5}, {228, 0.5}});
}

TEST(LocalEmbedder, CaseAndPunctuationInsensitive) {
  EXPECT_EQ(kLocal.embed_one("Black PEOPLE, are dangerous!"), kLocal.embed_one("black people are dangerous"));
}

TEST(LocalEmbedder, UnitNormOrZero) {
  for (const char* text : {"a", "the quick brown fox", "x x x y", "", "!!!"}) {
    const auto v = kLocal.embed_one(text);
    const double norm = std::sqrt(dot(v, v));
    if (is_zero(v)) {
      EXPECT_EQ(norm, 0.0);
    } else {
      EXPECT_NEAR(norm, 1.0, 1e-6) << text;
    }
  }
}

TEST(Embedding, Primitives) {
  EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
  EXPECT_EQ(tokenize("Can't  stop-Now"), (std::vector<std::string>{"can", "t", "stop", "now"}));
  std::vector<float> zero(4, 0.0f);
  l2_normalize(zero);
  EXPECT_TRUE(is_zero(zero));
}

TEST(Retrieval, TopKMatchesExhaustiveScanProperty) {
  std::mt19937 rng(11);
  const std::vector<std::string> vocab{"black", "people", "women", "are", "lazy", "poor", "dangerous",
                                       "muslims", "math", "bad", "at", "girls", "the", "old"};
  const auto sentence = [&](int max_words) {
    std::string s;
    const int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_words));
    for (int i = 0; i < n; ++i) s += (i ? " " : "") + vocab[rng() % vocab.size()];
    return s;
  };
  for (int round = 0; round < 60; ++round) {
    std::vector<RawRecord> records(1 + rng() % 60);
    for (auto& r : records) r = {sentence(5), std::string(to_string(kAllBiasTypes[rng() % 7]))};
    const auto kb = ingest(records).kb;
    const auto index = build_index(kb, kLocal);
    for (int q = 0; q < 10; ++q) {
      const std::string text = sentence(6);
      const std::size_t k = 1 + rng() % 8;
      const auto got = query(index, kb, kLocal, text, k);
      const auto want = oracle::exhaustive_topk(kb, kLocal, text, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].entry.id, want[i].first);
        EXPECT_NEAR(got[i].score, want[i].second, 1e-9);
        EXPECT_EQ(got[i].rank, i + 1);
      }
      if (k > 1) {
        const auto shorter = query(index, kb, kLocal, text, k - 1);
        EXPECT_TRUE(std::equal(shorter.begin(), shorter.end(), got.begin()));
      }
    }
  }
}

TEST(Retrieval, TiesBrokenByAscendingId) {
  const auto kb = testing::make_kb({{"people are lazy", "social"}, {"lazy are people", "race"}, {"are lazy people", "gender"}});
  const auto index = build_index(kb, kLocal);
  const auto refs = query(index, kb, kLocal, "lazy people are", 3);
  ASSERT_EQ(refs.size(), 3u);
  EXPECT_EQ(refs[0].entry.id, 0u);
  EXPECT_EQ(refs[1].entry.id, 1u);
  EXPECT_EQ(refs[2].entry.id, 2u);
}

TEST(Retrieval, FewerEntriesThanK) {
  const auto kb = testing::make_kb({{"a b", "race"}, {"c d", "gender"}});
  const auto index = build_index(kb, kLocal);
  EXPECT_EQ(query(index, kb, kLocal, "a c", 5).size(), 2u);
}

TEST(Retrieval, ZeroQueryReturnsNothing) {
  const auto kb = testing::fixture_kb();
  const auto index = build_index(kb, kLocal);
  EXPECT_TRUE(query(index, kb, kLocal, "... !!! ???", 5).empty());
}

TEST(Retrieval, EmptyKnowledgeBase) {
  const KnowledgeBase kb;
  const auto index = build_index(kb, kLocal);
  EXPECT_TRUE(query(index, kb, kLocal, "anything", 5).empty());
}

TEST(Retrieval, KZeroRejected) {
  const auto kb = testing::fixture_kb();
  const auto index = build_index(kb, kLocal);
  EXPECT_THROW(query(index, kb, kLocal, "women", 0), InvalidArgument);
}

class OtherEmbedder final : public Embedder {
 public:
  std::string id() const override { return "other"; }
  std::size_t dimension() const override { return 256; }
  std::vector<Embedding> embed(std::span<const std::string> texts) const override {
    return LocalHashEmbedder().embed(texts);
  }
};

TEST(Retrieval, EmbedderMismatchRefused) {
  const auto kb = testing::fixture_kb();
  const auto index = build_index(kb, kLocal);
  EXPECT_THROW(query(index, kb, OtherEmbedder(), "women", 5), EmbedderMismatch);
}

TEST(Retrieval, StaleIndexRefused) {
  const auto kb = testing::fixture_kb();
  const auto index = build_index(kb, kLocal);
  const std::vector<RawRecord> extra{{"new statement here", "culture"}};
  const auto newer = append(kb, extra).kb;
  EXPECT_THROW(query(index, newer, kLocal, "women", 5), IndexMismatch);
}

class BadEmbedder final : public Embedder {
 public:
  std::string id() const override { return "bad"; }
  std::size_t dimension() const override { return 0; }
  std::vector<Embedding> embed(std::span<const std::string> texts) const override {
    std::vector<Embedding> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back(Embedding(i % 2 ? 3 : 4, 0.5f));
    return out;
  }
};

TEST(Retrieval, InconsistentDimensionAbortsBuild) {
  const auto kb = testing::fixture_kb();
  EXPECT_THROW(build_index(kb, BadEmbedder()), DimensionMismatch);
}

TEST(IndexCache, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const auto kb = testing::fixture_kb();
  const auto index = build_index(kb, kLocal);
  save_index(index, dir / "kb.idx");
  const auto loaded = load_index(dir / "kb.idx");
  EXPECT_EQ(loaded, index);
  EXPECT_EQ(query(loaded, kb, kLocal, "women can't handle drugs", 3),
            query(index, kb, kLocal, "women can't handle drugs", 3));
}

TEST(IndexCache, StaleCacheIsRebuilt) {
  testing::TempDir dir;
  const auto path = dir / "kb.idx";
  const auto kb = testing::fixture_kb();
  load_or_build_index(kb, kLocal, path);
  ASSERT_TRUE(std::filesystem::exists(path));

  const auto other = testing::make_kb({{"one two three", "race"}, {"four five six", "gender"}});
  const auto rebuilt = load_or_build_index(other, kLocal, path);
  EXPECT_EQ(rebuilt.size(), 2u);
  EXPECT_EQ(rebuilt.kb_fingerprint(), kb_fingerprint(other));
  EXPECT_EQ(load_index(path), rebuilt);
}

TEST(IndexCache, SameVersionDifferentContentIsRebuilt) {
  testing::TempDir dir;
  const auto path = dir / "kb.idx";
  const auto a = testing::make_kb({{"one two three", "race"}});
  const auto b = testing::make_kb({{"four five six", "race"}});
  ASSERT_EQ(a.version(), b.version());
  load_or_build_index(a, kLocal, path);
  const auto index = load_or_build_index(b, kLocal, path);
  EXPECT_EQ(index, build_index(b, kLocal));
}

TEST(IndexCache, CorruptCacheIsRebuilt) {
  testing::TempDir dir;
  const auto path = dir / "kb.idx";
  { std::ofstream(path) << "garbage"; }
  const auto kb = testing::fixture_kb();
  EXPECT_EQ(load_or_build_index(kb, kLocal, path), build_index(kb, kLocal));
  EXPECT_THROW(load_index(dir / "missing.idx"), IoError);
}

}  // namespace
}  // namespace biasalert
