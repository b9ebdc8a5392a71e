#pragma once

// nlohmann::json conversions shared by the library, the CLI and the tests.
// Not installed: the public headers stay free of third-party types.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "biasalert/detector.hpp"
#include "biasalert/eval_harness.hpp"
#include "biasalert/labels.hpp"
#include "biasalert/retrieval.hpp"
#include "biasalert/verdict.hpp"

namespace biasalert::json_io {

using nlohmann::json;

json to_json(const BiasEntry& entry);
json to_json(const Reference& reference);
json to_json(const Verdict& verdict);
json to_json(const GoldLabel& label);
json to_json(const LabeledExample& example);
json to_json(const PromptConfig& config);
json to_json(const PromptBundle& prompt);
json to_json(const DetectionResult& result);
json to_json(const MetricsReport& report);
json to_json(const IngestReport& report);

/// Parses one JSON-lines record; SchemaError carries `line`.
json parse_line(std::string_view text, std::size_t line);

/// Optional string member; null or absent gives nullopt. SchemaError when
/// present with another type.
std::optional<std::string> optional_string(const json& object, std::string_view key,
                                           std::size_t line);
std::string required_string(const json& object, std::string_view key, std::size_t line);

GoldLabel gold_from_json(const json& gold, const AliasMap& aliases, std::size_t line);

json optional_to_json(const std::optional<std::string>& value);
json optional_to_json(const std::optional<double>& value);

}  // namespace biasalert::json_io
