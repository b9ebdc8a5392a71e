#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "biasalert/csv.hpp"
#include "biasalert/error.hpp"
#include "biasalert/knowledge_db.hpp"
#include "test_support.hpp"

namespace biasalert {
namespace {

std::size_t count_sum(const KnowledgeBase& kb) {
  const auto counts = kb.counts_by_type();
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

TEST(Ingest, CorpusExampleWithAliasedLabel) {
  const std::vector<RawRecord> records{{"black people are niggers", "racial"}};
  const auto result = ingest(records);
  ASSERT_EQ(result.kb.size(), 1u);
  const BiasEntry& e = result.kb.entries()[0];
  EXPECT_EQ(e.id, 0u);
  EXPECT_EQ(e.statement, "black people are niggers");
  EXPECT_EQ(e.bias_type, BiasType::race);
  EXPECT_EQ(result.kb.version(), 1u);
}

TEST(Ingest, EmptyStatementIsSkippedAndCounted) {
  const std::vector<RawRecord> records{{"", "gender"}, {"   ", "gender"}};
  const auto result = ingest(records);
  EXPECT_TRUE(result.kb.empty());
  EXPECT_EQ(result.report.empty_statement, 2u);
  EXPECT_EQ(result.report.skipped(), 2u);
}

TEST(Ingest, DuplicateDroppedKeepingFirst) {
  const std::vector<RawRecord> records{
      {"Women are  weak", "gender"}, {"poor people are lazy", "social"}, {" women are weak ", "GENDER"}};
  const auto result = ingest(records);
  ASSERT_EQ(result.kb.size(), 2u);
  EXPECT_EQ(result.kb.entries()[0].statement, "Women are weak");
  EXPECT_EQ(result.report.duplicates, 1u);
  EXPECT_EQ(count_sum(result.kb), 2u);
  EXPECT_EQ(result.kb.count(BiasType::gender), 1u);
  EXPECT_EQ(result.kb.count(BiasType::social), 1u);
}

TEST(Ingest, SameStatementDifferentTypeIsKept) {
  const std::vector<RawRecord> records{{"they are bad", "race"}, {"they are bad", "religion"}};
  EXPECT_EQ(ingest(records).kb.size(), 2u);
}

TEST(Ingest, UnknownTypeIsReported) {
  const std::vector<RawRecord> records{{"old people are slow", "age"}, {"girls are bad at math", "gender"}};
  const auto result = ingest(records);
  ASSERT_EQ(result.kb.size(), 1u);
  EXPECT_EQ(result.kb.entries()[0].id, 0u);
  EXPECT_EQ(result.report.unknown_type, 1u);
  ASSERT_EQ(result.report.issues.size(), 1u);
  EXPECT_EQ(result.report.issues[0].kind, IngestIssueKind::unknown_bias_type);
  EXPECT_EQ(result.report.issues[0].record_index, 0u);
  EXPECT_EQ(result.report.issues[0].detail, "age");
}

TEST(Ingest, AcceptedPlusSkippedEqualsInputProperty) {
  std::mt19937 rng(7);
  const std::vector<std::string> labels{"race", "racial", "gender", "age", "", "lgbtq", "culture"};
  const std::vector<std::string> words{"a", "b", "c", "d"};
  for (int round = 0; round < 200; ++round) {
    std::vector<RawRecord> records(rng() % 30);
    for (auto& r : records) {
      const int n = static_cast<int>(rng() % 3);
      for (int i = 0; i < n; ++i) r.statement += (i ? "  " : " ") + words[rng() % words.size()];
      r.type_label = labels[rng() % labels.size()];
    }
    const auto result = ingest(records);
    EXPECT_EQ(result.kb.size() + result.report.skipped(), records.size());
    EXPECT_EQ(result.report.accepted, result.kb.size());
    EXPECT_EQ(count_sum(result.kb), result.kb.size());
    for (std::size_t i = 0; i < result.kb.size(); ++i) EXPECT_EQ(result.kb.entries()[i].id, i);
  }
}

TEST(Append, NovelRecordGetsNextIdAndVersion) {
  const auto base = testing::make_kb({{"a b c", "race"}, {"d e f", "gender"}});
  const std::vector<RawRecord> records{{"g h i", "social"}};
  const auto result = append(base, records);
  EXPECT_EQ(result.kb.size(), 3u);
  EXPECT_EQ(result.kb.version(), 2u);
  EXPECT_EQ(result.kb.entries().back().id, 2u);
  EXPECT_EQ(base.size(), 2u);
  EXPECT_EQ(base.version(), 1u);
}

TEST(Append, DuplicateLeavesEntriesButBumpsVersion) {
  const auto base = testing::make_kb({{"a b c", "race"}, {"d e f", "gender"}});
  const std::vector<RawRecord> records{{"A  B C", "race"}};
  const auto result = append(base, records);
  EXPECT_EQ(result.kb.size(), 2u);
  EXPECT_EQ(result.kb.version(), 2u);
  EXPECT_EQ(result.report.duplicates, 1u);
}

TEST(Append, UnknownTypeChangesOnlyVersion) {
  const auto base = testing::make_kb({{"a b c", "race"}});
  const std::vector<RawRecord> records{{"x y z", "mystery"}};
  const auto result = append(base, records);
  EXPECT_EQ(result.kb.entries(), base.entries());
  EXPECT_EQ(result.kb.version(), 2u);
  EXPECT_EQ(result.report.unknown_type, 1u);
}

TEST(Append, IdsContinueAfterMaximum) {
  const KnowledgeBase base({{4, "a b", BiasType::race}, {9, "c d", BiasType::gender}}, 3);
  const std::vector<RawRecord> records{{"e f", "social"}};
  const auto result = append(base, records);
  EXPECT_EQ(result.kb.entries().back().id, 10u);
  EXPECT_EQ(result.kb.version(), 4u);
}

TEST(KnowledgeBase, RejectsInvalidEntries) {
  EXPECT_THROW(KnowledgeBase({{1, "a", BiasType::race}, {1, "b", BiasType::race}}, 1), InvalidArgument);
  EXPECT_THROW(KnowledgeBase({{1, " a", BiasType::race}}, 1), InvalidArgument);
  EXPECT_THROW(KnowledgeBase({{1, "", BiasType::race}}, 1), InvalidArgument);
  EXPECT_THROW(KnowledgeBase({{1, "a\tb", BiasType::race}}, 1), InvalidArgument);
}

TEST(Persistence, SaveLoadRoundTrip) {
  testing::TempDir dir;
  const auto kb = testing::fixture_kb();
  save(kb, dir / "kb.tsv");
  const auto loaded = load(dir / "kb.tsv");
  EXPECT_EQ(loaded, kb);
  EXPECT_EQ(loaded.version(), kb.version());
  EXPECT_EQ(loaded.counts_by_type(), kb.counts_by_type());
}

TEST(Persistence, FileFormat) {
  const auto kb = testing::make_kb({{"women can't handle drugs", "gender"}});
  std::ostringstream out;
  write_kb(kb, out);
  EXPECT_EQ(out.str(), "#biasalert-kb v1\n#kb_version 1\n0\tgender\twomen can't handle drugs\n");
}

TEST(Persistence, EmptyFileIsEmptyVersionZero) {
  testing::TempDir dir;
  { std::ofstream out(dir / "empty.tsv"); }
  const auto kb = load(dir / "empty.tsv");
  EXPECT_EQ(kb.size(), 0u);
  EXPECT_EQ(kb.version(), 0u);
}

TEST(Persistence, MalformedLineNamesTheLine) {
  std::istringstream in("#biasalert-kb v1\n#kb_version 2\n0\trace\tok\n1 race missing tabs\n");
  try {
    read_kb(in);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Persistence, SchemaErrors) {
  const auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      read_kb(in);
    } catch (const SchemaError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("not a header\n"), 1u);
  EXPECT_EQ(line_of("#biasalert-kb v1\n0\tnonsense\tx\n"), 2u);
  EXPECT_EQ(line_of("#biasalert-kb v1\n0\trace\tx\n0\trace\ty\n"), 3u);
  EXPECT_EQ(line_of("#biasalert-kb v1\n5\trace\tx\n2\trace\ty\n"), 3u);
  EXPECT_EQ(line_of("#biasalert-kb v1\nx\trace\ty\n"), 2u);
  EXPECT_EQ(line_of("#biasalert-kb v1\n0\trace\t\n"), 2u);
  EXPECT_EQ(line_of("#biasalert-kb v1\n#kb_version abc\n"), 2u);
}

TEST(Persistence, LoadMissingFileIsIoError) { EXPECT_THROW(load("/nonexistent/kb.tsv"), IoError); }

TEST(Persistence, IngestIsIdempotentThroughSavedSource) {
  testing::TempDir dir;
  const auto records = read_raw_csv(testing::data_dir() / "kb_fixture.csv");
  const auto first = ingest(records).kb;
  std::ofstream out(dir / "source.csv");
  out << "statement,type_label\n";
  for (const auto& e : first.entries()) out << csv_escape(e.statement) << ',' << to_string(e.bias_type) << '\n';
  out.close();
  const auto second = ingest(read_raw_csv(dir / "source.csv")).kb;
  EXPECT_EQ(first, second);
}

TEST(RawCsv, ColumnMapping) {
  std::istringstream with_header("label,text\nrace,black people are dangerous\n");
  const auto a = read_raw_csv(with_header, {true, "text", "label"});
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].statement, "black people are dangerous");
  EXPECT_EQ(a[0].type_label, "race");

  std::istringstream no_header("x,gender,girls are bad at math\n");
  const auto b = read_raw_csv(no_header, {false, "2", "1"});
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].statement, "girls are bad at math");

  std::istringstream missing("statement\nfoo\n");
  EXPECT_THROW(read_raw_csv(missing), MissingColumn);

  std::istringstream short_row("statement,type_label\nonly one\n");
  EXPECT_THROW(read_raw_csv(short_row), SchemaError);
}

TEST(Persistence, LargeKnowledgeBaseRoundTrip) {
  testing::TempDir dir;
  std::vector<BiasEntry> entries;
  for (std::uint64_t i = 0; i < 41000; ++i) {
    entries.push_back({i, "statement number " + std::to_string(i) + " about group " + std::to_string(i % 97),
                       kAllBiasTypes[i % kAllBiasTypes.size()]});
  }
  const KnowledgeBase kb(std::move(entries), 12);
  save(kb, dir / "big.tsv");
  EXPECT_EQ(load(dir / "big.tsv"), kb);
}

}  // namespace
}  // namespace biasalert
