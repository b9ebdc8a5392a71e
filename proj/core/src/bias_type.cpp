#include "biasalert/bias_type.hpp"

#include <fstream>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"

namespace biasalert {
namespace {

// Lowercase, collapse whitespace, drop one trailing word "bias".
std::string normalize_label(std::string_view label) {
  std::string s = text::collapse_whitespace(text::to_lower(label));
  if (s.size() > 4 && text::ends_with_word(s, "bias")) {
    s.resize(s.size() - 4);
    s = text::collapse_whitespace(s);
  }
  return s;
}

}  // namespace

std::string_view to_string(BiasType type) noexcept {
  switch (type) {
    case BiasType::orientation: return "orientation";
    case BiasType::gender: return "gender";
    case BiasType::social: return "social";
    case BiasType::race: return "race";
    case BiasType::religion: return "religion";
    case BiasType::disabled: return "disabled";
    case BiasType::culture: return "culture";
  }
  return "unknown";
}

std::optional<BiasType> parse_canonical(std::string_view token) {
  const std::string lowered = text::to_lower(text::trim(token));
  for (BiasType t : kAllBiasTypes) {
    if (to_string(t) == lowered) return t;
  }
  return std::nullopt;
}

AliasMap AliasMap::defaults() {
  AliasMap map;
  map.add("racial", BiasType::race);
  map.add("queerness", BiasType::orientation);
  map.add("lgbtq", BiasType::orientation);
  map.add("cultural", BiasType::culture);
  map.add("disability", BiasType::disabled);
  return map;
}

AliasMap AliasMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open alias map " + path.string());
  AliasMap map = defaults();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw SchemaError(line_no, "expected 'alias = type'");
    const auto canonical = parse_canonical(body.substr(eq + 1));
    if (!canonical) {
      throw SchemaError(line_no, "unknown bias type '" +
                                     std::string(text::trim(body.substr(eq + 1))) + "'");
    }
    const auto alias = text::trim(body.substr(0, eq));
    if (alias.empty()) throw SchemaError(line_no, "empty alias");
    map.add(alias, *canonical);
  }
  return map;
}

void AliasMap::add(std::string_view alias, BiasType type) {
  std::string key = normalize_label(alias);
  if (key.empty()) throw InvalidArgument("empty alias");
  aliases_[std::move(key)] = type;
}

std::optional<BiasType> AliasMap::resolve(std::string_view label) const {
  const std::string key = normalize_label(label);
  if (key.empty()) return std::nullopt;
  if (auto canonical = parse_canonical(key)) return canonical;
  if (auto it = aliases_.find(key); it != aliases_.end()) return it->second;
  return std::nullopt;
}

}  // namespace biasalert
