#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "biasalert/bias_type.hpp"

namespace biasalert {

/// One record of the bias knowledge base: a biased viewpoint and its type.
struct BiasEntry {
  std::uint64_t id = 0;
  std::string statement;
  BiasType bias_type = BiasType::race;

  bool operator==(const BiasEntry&) const = default;
};

/// Unvalidated input record, as read from a raw corpus.
struct RawRecord {
  std::string statement;
  std::string type_label;
};

/// Immutable, id-ordered collection of bias entries.
///
/// Values are never modified after construction; `append` returns a new
/// knowledge base with a higher version, so a published value can be shared
/// across threads without locking.
class KnowledgeBase {
 public:
  using TypeCounts = std::array<std::size_t, kAllBiasTypes.size()>;

  KnowledgeBase() = default;

  /// Throws InvalidArgument unless ids are strictly ascending and every
  /// statement is non-empty, trimmed, and free of tabs and newlines.
  KnowledgeBase(std::vector<BiasEntry> entries, std::uint64_t version);

  const std::vector<BiasEntry>& entries() const noexcept { return entries_; }
  std::uint64_t version() const noexcept { return version_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  std::size_t count(BiasType type) const noexcept {
    return counts_[static_cast<std::size_t>(type)];
  }
  const TypeCounts& counts_by_type() const noexcept { return counts_; }

  /// Binary search by id; nullptr when absent.
  const BiasEntry* find(std::uint64_t id) const noexcept;

  /// Smallest id greater than every existing id.
  std::uint64_t next_id() const noexcept;

  bool operator==(const KnowledgeBase&) const = default;

 private:
  std::vector<BiasEntry> entries_;
  std::uint64_t version_ = 0;
  TypeCounts counts_{};
};

enum class IngestIssueKind {
  unknown_bias_type,
  empty_statement,
  duplicate,
};

std::string_view to_string(IngestIssueKind kind) noexcept;

/// A skipped input record. `record_index` is 0-based within the input stream.
struct IngestIssue {
  std::size_t record_index = 0;
  IngestIssueKind kind = IngestIssueKind::empty_statement;
  std::string detail;
};

struct IngestReport {
  std::size_t input_records = 0;
  std::size_t accepted = 0;
  std::size_t unknown_type = 0;
  std::size_t empty_statement = 0;
  std::size_t duplicates = 0;
  std::vector<IngestIssue> issues;

  std::size_t skipped() const noexcept { return unknown_type + empty_statement + duplicates; }
};

struct IngestResult {
  KnowledgeBase kb;
  IngestReport report;
};

/// Trim and collapse internal whitespace to single spaces.
std::string normalize_statement(std::string_view statement);

/// Deduplication key: lowercased normalized statement plus canonical type.
std::string dedup_key(std::string_view statement, BiasType type);

/// Builds a version-1 knowledge base with sequential ids starting at 0.
/// Records with unresolvable labels, empty statements, or duplicate keys are
/// skipped and reported; the first occurrence of a duplicate wins.
IngestResult ingest(std::span<const RawRecord> records,
                    const AliasMap& aliases = AliasMap::defaults());

/// Returns a new knowledge base (version + 1) holding `kb` plus the novel
/// records, with ids continuing after the current maximum. `kb` is untouched.
IngestResult append(const KnowledgeBase& kb, std::span<const RawRecord> records,
                    const AliasMap& aliases = AliasMap::defaults());

/// Knowledge file: "#biasalert-kb v1" header, "#kb_version <n>", then one
/// `id<TAB>bias_type<TAB>statement` line per entry.
void write_kb(const KnowledgeBase& kb, std::ostream& out);
KnowledgeBase read_kb(std::istream& in);

/// Throws IoError.
void save(const KnowledgeBase& kb, const std::filesystem::path& path);
/// Empty file gives an empty version-0 knowledge base. Throws IoError or
/// SchemaError naming the offending line.
KnowledgeBase load(const std::filesystem::path& path);

/// Column layout of a raw corpus CSV.
struct RawCsvMapping {
  bool has_header = true;
  /// Column name when `has_header`, else a 0-based index.
  std::string statement_column = "statement";
  std::string type_column = "type_label";
};

/// Throws IoError, MissingColumn, or SchemaError (row too short).
std::vector<RawRecord> read_raw_csv(std::istream& in, const RawCsvMapping& mapping = {});
std::vector<RawRecord> read_raw_csv(const std::filesystem::path& path,
                                    const RawCsvMapping& mapping = {});

}  // namespace biasalert
