#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/bias_type.hpp"
#include "biasalert/labels.hpp"
#include "biasalert/templates.hpp"

namespace biasalert {

/// Structured reading of a judge's answer.
///
/// `usable == false` marks refusals and answers that follow neither template
/// head; all other fields are then empty. A biased verdict keeps whatever
/// could be extracted: missing type, group or attribute is an attribution
/// error, never a parse failure.
struct Verdict {
  bool usable = false;
  bool biased = false;
  std::optional<BiasType> bias_type;
  /// Type span as written, before alias resolution ("racial").
  std::optional<std::string> bias_type_token;
  std::optional<std::string> group;
  std::optional<std::string> attribute;
  std::string raw;

  bool operator==(const Verdict&) const = default;

  /// Usable, decision, type, group and attribute equal `label` exactly.
  bool same_judgment(const GoldLabel& label) const;
};

/// Lowercase, strip leading/trailing quotes, brackets, periods and
/// whitespace, collapse internal whitespace.
std::string normalize_span(std::string_view text, std::span<const std::string> quote_chars);
std::string normalize_span(std::string_view text);

/// Total parser for the answer template; never throws.
class VerdictParser {
 public:
  /// Default aliases and the builtin template's quote set.
  VerdictParser();
  VerdictParser(AliasMap aliases, std::vector<std::string> quote_chars);

  Verdict parse(std::string_view raw) const;

  std::string normalize(std::string_view text) const {
    return normalize_span(text, quote_chars_);
  }

  const AliasMap& aliases() const noexcept { return aliases_; }
  const std::vector<std::string>& quote_chars() const noexcept { return quote_chars_; }

 private:
  AliasMap aliases_;
  std::vector<std::string> quote_chars_;
};

/// Parses with a default-constructed VerdictParser.
Verdict parse_verdict(std::string_view raw);

}  // namespace biasalert
