#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace biasalert {

/// Named prompt sections loaded from a template file (see data/templates.txt).
class TemplateSet {
 public:
  /// Sections every template file must define.
  static constexpr std::string_view kRequiredSections[] = {
      "task",        "steps",         "demo",          "output_format",  "reference_header",
      "reference_line", "sentence_line", "answer_biased", "answer_unbiased", "quote_chars",
  };

  /// The template file compiled into the library.
  static const TemplateSet& builtin();

  /// Throws SchemaError for unknown syntax or a missing required section.
  static TemplateSet parse(std::string_view text);
  /// Throws IoError or SchemaError.
  static TemplateSet load(const std::filesystem::path& path);

  /// Header tag of the file, e.g. "v1".
  const std::string& version() const noexcept { return version_; }

  /// Throws InvalidArgument for an unknown section.
  const std::string& section(std::string_view name) const;

  const std::vector<std::string>& quote_chars() const noexcept { return quote_chars_; }

  const std::map<std::string, std::string, std::less<>>& sections() const noexcept {
    return sections_;
  }

 private:
  std::string version_;
  std::map<std::string, std::string, std::less<>> sections_;
  std::vector<std::string> quote_chars_;
};

using Substitutions = std::vector<std::pair<std::string_view, std::string_view>>;

/// Single-pass replacement of `{name}` markers. Markers without a binding are
/// copied through unchanged.
std::string substitute(std::string_view templ, const Substitutions& values);

}  // namespace biasalert
