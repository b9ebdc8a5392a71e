#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace biasalert {

/// One parsed CSV record and the 1-based line it started on.
struct CsvRow {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// RFC 4180 reader: comma separated, double-quoted fields may contain commas,
/// newlines and doubled quotes. A trailing '\r' before each newline is ignored
/// and blank lines are skipped.
std::vector<CsvRow> read_csv(std::istream& in);

/// Resolves a column reference against a header row. With a header it is a
/// column name (exact match); without one it is a 0-based index.
/// Throws MissingColumn.
std::size_t resolve_column(const std::vector<std::string>* header, std::string_view column);

/// Quotes a field when it holds a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

}  // namespace biasalert
