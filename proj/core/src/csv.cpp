#include "biasalert/csv.hpp"

#include <algorithm>
#include <charconv>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"

namespace biasalert {

std::vector<CsvRow> read_csv(std::istream& in) {
  std::vector<CsvRow> rows;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    CsvRow row;
    row.line = line_no;
    std::string field;
    bool in_quotes = false;
    bool any_content = false;

    for (;;) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        any_content = true;
        if (in_quotes) {
          if (c == '"') {
            if (i + 1 < line.size() && line[i + 1] == '"') {
              field.push_back('"');
              ++i;
            } else {
              in_quotes = false;
            }
          } else {
            field.push_back(c);
          }
        } else if (c == '"') {
          in_quotes = true;
        } else if (c == ',') {
          row.fields.push_back(std::move(field));
          field.clear();
        } else {
          field.push_back(c);
        }
      }
      if (!in_quotes) break;
      // Quoted field spans a newline.
      if (!std::getline(in, line)) {
        throw SchemaError(row.line, "unterminated quoted field");
      }
      ++line_no;
      field.push_back('\n');
    }

    if (!any_content) continue;
    row.fields.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t resolve_column(const std::vector<std::string>* header, std::string_view column) {
  if (header != nullptr) {
    const auto it = std::find_if(header->begin(), header->end(), [&](const std::string& name) {
      return text::trim(name) == column;
    });
    if (it == header->end()) throw MissingColumn("missing column '" + std::string(column) + "'");
    return static_cast<std::size_t>(it - header->begin());
  }
  std::size_t index = 0;
  const auto* first = column.data();
  const auto* last = column.data() + column.size();
  const auto [ptr, ec] = std::from_chars(first, last, index);
  if (ec != std::errc{} || ptr != last || column.empty()) {
    throw MissingColumn("column '" + std::string(column) + "' is not an index (file has no header)");
  }
  return index;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace biasalert
