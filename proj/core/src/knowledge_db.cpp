#include "biasalert/knowledge_db.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "biasalert/csv.hpp"
#include "biasalert/error.hpp"
#include "biasalert/text.hpp"

namespace biasalert {
namespace {

constexpr std::string_view kKbHeader = "#biasalert-kb v1";
constexpr std::string_view kVersionPrefix = "#kb_version ";

bool parse_u64(std::string_view s, std::uint64_t& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Shared by ingest and append; `entries` are already validated.
IngestResult ingest_into(std::vector<BiasEntry> entries, std::uint64_t next_id,
                         std::uint64_t version, std::span<const RawRecord> records,
                         const AliasMap& aliases) {
  std::unordered_set<std::string> seen;
  seen.reserve(entries.size() + records.size());
  for (const auto& e : entries) seen.insert(dedup_key(e.statement, e.bias_type));

  IngestReport report;
  report.input_records = records.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawRecord& record = records[i];
    std::string statement = normalize_statement(record.statement);
    if (statement.empty()) {
      ++report.empty_statement;
      report.issues.push_back({i, IngestIssueKind::empty_statement, {}});
      continue;
    }
    const auto type = aliases.resolve(record.type_label);
    if (!type) {
      ++report.unknown_type;
      report.issues.push_back({i, IngestIssueKind::unknown_bias_type, record.type_label});
      continue;
    }
    if (!seen.insert(dedup_key(statement, *type)).second) {
      ++report.duplicates;
      report.issues.push_back({i, IngestIssueKind::duplicate, statement});
      continue;
    }
    entries.push_back({next_id++, std::move(statement), *type});
    ++report.accepted;
  }
  return {KnowledgeBase(std::move(entries), version), std::move(report)};
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::vector<BiasEntry> entries, std::uint64_t version)
    : entries_(std::move(entries)), version_(version) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const BiasEntry& e = entries_[i];
    if (i > 0 && entries_[i - 1].id >= e.id) {
      throw InvalidArgument("entry ids must be strictly ascending (id " + std::to_string(e.id) +
                            ")");
    }
    if (e.statement.empty() || text::trim(e.statement).size() != e.statement.size()) {
      throw InvalidArgument("entry " + std::to_string(e.id) + " has an empty or untrimmed statement");
    }
    if (e.statement.find_first_of("\t\r\n") != std::string::npos) {
      throw InvalidArgument("entry " + std::to_string(e.id) + " statement contains a tab or newline");
    }
    ++counts_[static_cast<std::size_t>(e.bias_type)];
  }
}

const BiasEntry* KnowledgeBase::find(std::uint64_t id) const noexcept {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                                   [](const BiasEntry& e, std::uint64_t v) { return e.id < v; });
  return it != entries_.end() && it->id == id ? &*it : nullptr;
}

std::uint64_t KnowledgeBase::next_id() const noexcept {
  return entries_.empty() ? 0 : entries_.back().id + 1;
}

std::string_view to_string(IngestIssueKind kind) noexcept {
  switch (kind) {
    case IngestIssueKind::unknown_bias_type: return "unknown_bias_type";
    case IngestIssueKind::empty_statement: return "empty_statement";
    case IngestIssueKind::duplicate: return "duplicate";
  }
  return "unknown";
}

std::string normalize_statement(std::string_view statement) {
  return text::collapse_whitespace(statement);
}

std::string dedup_key(std::string_view statement, BiasType type) {
  std::string key = text::to_lower(normalize_statement(statement));
  key.push_back('\t');
  key.append(to_string(type));
  return key;
}

IngestResult ingest(std::span<const RawRecord> records, const AliasMap& aliases) {
  return ingest_into({}, 0, 1, records, aliases);
}

IngestResult append(const KnowledgeBase& kb, std::span<const RawRecord> records,
                    const AliasMap& aliases) {
  return ingest_into(kb.entries(), kb.next_id(), kb.version() + 1, records, aliases);
}

void write_kb(const KnowledgeBase& kb, std::ostream& out) {
  out << kKbHeader << '\n' << kVersionPrefix << kb.version() << '\n';
  for (const auto& e : kb.entries()) {
    out << e.id << '\t' << to_string(e.bias_type) << '\t' << e.statement << '\n';
  }
}

KnowledgeBase read_kb(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::uint64_t version = 0;
  std::vector<BiasEntry> entries;
  std::unordered_set<std::uint64_t> ids;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kKbHeader) throw SchemaError(1, "expected header '#biasalert-kb v1'");
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (std::string_view(line).starts_with(kVersionPrefix)) {
        if (!parse_u64(std::string_view(line).substr(kVersionPrefix.size()), version)) {
          throw SchemaError(line_no, "bad kb_version");
        }
      }
      continue;
    }

    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw SchemaError(line_no, "expected id<TAB>bias_type<TAB>statement");
    }
    const std::string_view view(line);
    BiasEntry entry;
    if (!parse_u64(view.substr(0, tab1), entry.id)) throw SchemaError(line_no, "bad id");
    const auto type = parse_canonical(view.substr(tab1 + 1, tab2 - tab1 - 1));
    if (!type) throw SchemaError(line_no, "unknown bias type");
    entry.bias_type = *type;
    entry.statement = std::string(view.substr(tab2 + 1));
    if (entry.statement.empty() || text::trim(entry.statement).size() != entry.statement.size() ||
        entry.statement.find('\t') != std::string::npos) {
      throw SchemaError(line_no, "statement must be non-empty, trimmed and tab-free");
    }
    if (!ids.insert(entry.id).second) throw SchemaError(line_no, "duplicate id");
    if (!entries.empty() && entries.back().id > entry.id) {
      throw SchemaError(line_no, "ids must be ascending");
    }
    entries.push_back(std::move(entry));
  }
  if (line_no == 0) return {};
  return KnowledgeBase(std::move(entries), version);
}

void save(const KnowledgeBase& kb, const std::filesystem::path& path) {
  // Write-then-rename: readers never observe a partial file.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    write_kb(kb, out);
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

KnowledgeBase load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_kb(in);
}

std::vector<RawRecord> read_raw_csv(std::istream& in, const RawCsvMapping& mapping) {
  auto rows = read_csv(in);
  std::vector<RawRecord> records;
  if (rows.empty()) return records;

  std::size_t first = 0;
  const std::vector<std::string>* header = nullptr;
  if (mapping.has_header) {
    header = &rows.front().fields;
    first = 1;
  }
  const std::size_t statement_col = resolve_column(header, mapping.statement_column);
  const std::size_t type_col = resolve_column(header, mapping.type_column);
  const std::size_t needed = std::max(statement_col, type_col) + 1;

  records.reserve(rows.size() - first);
  for (std::size_t i = first; i < rows.size(); ++i) {
    auto& fields = rows[i].fields;
    if (fields.size() < needed) {
      throw SchemaError(rows[i].line, "expected at least " + std::to_string(needed) + " columns");
    }
    records.push_back({std::move(fields[statement_col]), std::move(fields[type_col])});
  }
  return records;
}

std::vector<RawRecord> read_raw_csv(const std::filesystem::path& path, const RawCsvMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_raw_csv(in, mapping);
}

}  // namespace biasalert
