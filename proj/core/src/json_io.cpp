#include "json_io.hpp"

#include "biasalert/error.hpp"

namespace biasalert::json_io {

json optional_to_json(const std::optional<std::string>& value) {
  return value ? json(*value) : json(nullptr);
}

json optional_to_json(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

json to_json(const BiasEntry& entry) {
  return {{"id", entry.id}, {"bias_type", to_string(entry.bias_type)}, {"statement", entry.statement}};
}

json to_json(const Reference& reference) {
  return {{"rank", reference.rank},
          {"score", reference.score},
          {"id", reference.entry.id},
          {"bias_type", to_string(reference.entry.bias_type)},
          {"statement", reference.entry.statement}};
}

json to_json(const Verdict& verdict) {
  json out{{"usable", verdict.usable}, {"biased", verdict.biased}};
  out["bias_type"] = verdict.bias_type ? json(to_string(*verdict.bias_type)) : json(nullptr);
  out["bias_type_token"] = optional_to_json(verdict.bias_type_token);
  out["group"] = optional_to_json(verdict.group);
  out["attribute"] = optional_to_json(verdict.attribute);
  out["raw"] = verdict.raw;
  return out;
}

json to_json(const GoldLabel& label) {
  json out{{"biased", label.biased}};
  out["bias_type"] = label.bias_type ? json(to_string(*label.bias_type)) : json(nullptr);
  out["group"] = optional_to_json(label.group);
  out["attribute"] = optional_to_json(label.attribute);
  return out;
}

json to_json(const LabeledExample& example) {
  return {{"id", example.id}, {"text", example.text}, {"gold", to_json(example.gold)}};
}

json to_json(const PromptConfig& config) {
  return {{"use_retrieval", config.use_retrieval},
          {"use_steps", config.use_steps},
          {"use_demo", config.use_demo},
          {"k", config.k}};
}

json to_json(const PromptBundle& prompt) {
  json messages = json::array();
  for (const auto& m : prompt.messages()) messages.push_back({{"role", m.role}, {"content", m.content}});
  return {{"config", to_json(prompt.config)}, {"messages", std::move(messages)}};
}

json to_json(const DetectionResult& result) {
  json refs = json::array();
  for (const auto& r : result.references) refs.push_back(to_json(r));
  return {{"verdict", to_json(result.verdict)},
          {"references", std::move(refs)},
          {"prompt", to_json(result.prompt)},
          {"completion", result.completion},
          {"latency_ms", result.latency_ms}};
}

json to_json(const MetricsReport& report) {
  json per_type = json::object();
  for (const auto& [type, breakdown] : report.per_type) {
    per_type[std::string(to_string(type))] = {{"n", breakdown.n}, {"acc", breakdown.acc}};
  }
  return {{"n", report.n},
          {"acc", report.acc},
          {"f1", report.f1},
          {"cs", optional_to_json(report.cs)},
          {"as", optional_to_json(report.as)},
          {"over_safety", report.over_safety},
          {"overall", report.overall},
          {"cs_support", report.cs_support},
          {"as_support", report.as_support},
          {"per_type", std::move(per_type)},
          {"confusion",
           {{"tp", report.confusion.tp},
            {"fp", report.confusion.fp},
            {"tn", report.confusion.tn},
            {"fn", report.confusion.fn},
            {"unusable", report.confusion.unusable}}}};
}

json to_json(const IngestReport& report) {
  json issues = json::array();
  for (const auto& issue : report.issues) {
    issues.push_back({{"record", issue.record_index},
                      {"kind", to_string(issue.kind)},
                      {"detail", issue.detail}});
  }
  return {{"input_records", report.input_records},
          {"accepted", report.accepted},
          {"unknown_type", report.unknown_type},
          {"empty_statement", report.empty_statement},
          {"duplicates", report.duplicates},
          {"issues", std::move(issues)}};
}

json parse_line(std::string_view text, std::size_t line) {
  auto doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw SchemaError(line, "invalid JSON");
  if (!doc.is_object()) throw SchemaError(line, "expected a JSON object");
  return doc;
}

std::optional<std::string> optional_string(const json& object, std::string_view key,
                                           std::size_t line) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw SchemaError(line, "'" + std::string(key) + "' must be a string");
  return it->get<std::string>();
}

std::string required_string(const json& object, std::string_view key, std::size_t line) {
  auto value = optional_string(object, key, line);
  if (!value) throw SchemaError(line, "missing '" + std::string(key) + "'");
  return *value;
}

GoldLabel gold_from_json(const json& gold, const AliasMap& aliases, std::size_t line) {
  if (!gold.is_object()) throw SchemaError(line, "'gold' must be an object");
  const auto biased = gold.find("biased");
  if (biased == gold.end() || !biased->is_boolean()) {
    throw SchemaError(line, "'gold.biased' must be a boolean");
  }
  GoldLabel label;
  label.biased = biased->get<bool>();
  if (!label.biased) return label;
  if (const auto type = optional_string(gold, "bias_type", line)) {
    label.bias_type = aliases.resolve(*type);
    if (!label.bias_type) throw SchemaError(line, "unknown bias type '" + *type + "'");
  } else {
    throw SchemaError(line, "biased gold needs 'bias_type'");
  }
  label.group = optional_string(gold, "group", line);
  label.attribute = optional_string(gold, "attribute", line);
  return label;
}

}  // namespace biasalert::json_io
