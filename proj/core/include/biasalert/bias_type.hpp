#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace biasalert {

enum class BiasType : std::uint8_t {
  orientation,
  gender,
  social,
  race,
  religion,
  disabled,
  culture,
};

inline constexpr std::array<BiasType, 7> kAllBiasTypes = {
    BiasType::orientation, BiasType::gender,   BiasType::social, BiasType::race,
    BiasType::religion,    BiasType::disabled, BiasType::culture,
};

/// Canonical lowercase token, e.g. "race".
std::string_view to_string(BiasType type) noexcept;

/// Exact canonical token match, case-insensitive, surrounding whitespace ignored.
std::optional<BiasType> parse_canonical(std::string_view token);

/// Maps dataset-specific labels ("racial", "lgbtq", ...) onto canonical types.
///
/// Resolution lowercases and whitespace-collapses the label, drops a trailing
/// word "bias", then tries the canonical tokens before the alias table.
class AliasMap {
 public:
  /// Empty map: only canonical tokens resolve.
  AliasMap() = default;

  /// The seeded aliases: racial, queerness, lgbtq, cultural, disability.
  static AliasMap defaults();

  /// Defaults plus the `alias = canonical` lines of `path` ('#' comments).
  /// Throws IoError or SchemaError.
  static AliasMap load(const std::filesystem::path& path);

  /// Throws InvalidArgument if `alias` is empty after normalization.
  void add(std::string_view alias, BiasType type);

  std::optional<BiasType> resolve(std::string_view label) const;

  const std::map<std::string, BiasType, std::less<>>& aliases() const noexcept {
    return aliases_;
  }

 private:
  std::map<std::string, BiasType, std::less<>> aliases_;
};

}  // namespace biasalert
