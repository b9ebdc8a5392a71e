#pragma once

#include <string>
#include <string_view>
#include <vector>

// ASCII-only helpers. Non-ASCII bytes pass through untouched, so UTF-8 input
// keeps its byte sequences.
namespace biasalert::text {

bool is_space(char c) noexcept;

std::string to_lower(std::string_view s);

std::string_view trim(std::string_view s) noexcept;

/// Trim, then replace each run of whitespace with a single space.
std::string collapse_whitespace(std::string_view s);

/// Split on runs of whitespace; no empty tokens.
std::vector<std::string> split_whitespace(std::string_view s);

bool ends_with_word(std::string_view s, std::string_view word) noexcept;

}  // namespace biasalert::text
