#include "biasalert/templates.hpp"

#include <fstream>
#include <sstream>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"

namespace biasalert {

namespace detail {
std::string_view builtin_template_text();
}

namespace {

constexpr std::string_view kHeaderPrefix = "#biasalert-templates ";

bool is_section_header(std::string_view line, std::string& name) {
  if (line.size() < 3 || line.front() != '[' || line.back() != ']') return false;
  const auto inner = line.substr(1, line.size() - 2);
  for (const char c : inner) {
    if (!((c >= 'a' && c <= 'z') || c == '_')) return false;
  }
  name = std::string(inner);
  return true;
}

std::string rstrip(std::string_view line) {
  while (!line.empty() && text::is_space(line.back())) line.remove_suffix(1);
  return std::string(line);
}

std::string finish_body(std::vector<std::string>& lines) {
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::size_t first = 0;
  while (first < lines.size() && lines[first].empty()) ++first;
  std::string body;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (i > first) body.push_back('\n');
    body += lines[i];
  }
  lines.clear();
  return body;
}

}  // namespace

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set = parse(detail::builtin_template_text());
  return set;
}

TemplateSet TemplateSet::parse(std::string_view source) {
  TemplateSet set;
  std::istringstream in{std::string(source)};
  std::string raw;
  std::size_t line_no = 0;
  std::string current;
  std::vector<std::string> lines;

  const auto flush = [&] {
    if (current.empty()) return;
    set.sections_[current] = finish_body(lines);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = rstrip(raw);
    std::string name;
    if (is_section_header(line, name)) {
      flush();
      if (set.sections_.count(name) != 0) throw SchemaError(line_no, "duplicate section [" + name + "]");
      current = std::move(name);
      continue;
    }
    if (current.empty()) {
      if (line_no == 1) {
        if (!std::string_view(line).starts_with(kHeaderPrefix)) {
          throw SchemaError(1, "expected '#biasalert-templates <version>' header");
        }
        set.version_ = std::string(text::trim(std::string_view(line).substr(kHeaderPrefix.size())));
        continue;
      }
      if (line.empty() || line.front() == '#') continue;
      throw SchemaError(line_no, "text outside of a section");
    }
    lines.push_back(std::move(line));
  }
  flush();

  for (const auto required : kRequiredSections) {
    if (set.sections_.find(required) == set.sections_.end()) {
      throw SchemaError(line_no, "missing section [" + std::string(required) + "]");
    }
  }
  std::istringstream quotes(set.sections_.find("quote_chars")->second);
  for (std::string q; std::getline(quotes, q);) {
    if (!q.empty()) set.quote_chars_.push_back(q);
  }
  return set;
}

TemplateSet TemplateSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open template file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const std::string& TemplateSet::section(std::string_view name) const {
  const auto it = sections_.find(name);
  if (it == sections_.end()) throw InvalidArgument("no template section [" + std::string(name) + "]");
  return it->second;
}

std::string substitute(std::string_view templ, const Substitutions& values) {
  std::string out;
  out.reserve(templ.size() + 64);
  std::size_t i = 0;
  while (i < templ.size()) {
    if (templ[i] == '{') {
      const auto close = templ.find('}', i + 1);
      if (close != std::string_view::npos) {
        const auto name = templ.substr(i + 1, close - i - 1);
        bool replaced = false;
        for (const auto& [key, value] : values) {
          if (key == name) {
            out.append(value);
            replaced = true;
            break;
          }
        }
        if (replaced) {
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(templ[i++]);
  }
  return out;
}

}  // namespace biasalert
