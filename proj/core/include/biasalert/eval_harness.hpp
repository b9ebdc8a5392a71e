#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/backends.hpp"
#include "biasalert/detector.hpp"
#include "biasalert/labels.hpp"
#include "biasalert/verdict.hpp"

namespace biasalert {

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct ScoredPair {
  GoldLabel gold;
  Verdict verdict;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
  std::size_t unusable = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn + unusable; }
  bool operator==(const Confusion&) const = default;
};

struct TypeBreakdown {
  std::size_t n = 0;
  double acc = 0.0;

  bool operator==(const TypeBreakdown&) const = default;
};

/// Aggregate judge quality over a labeled set.
///
/// Decisions on unusable verdicts are wrong; for F1 they count as false
/// negatives when gold is biased. `cs` and `as` are measured on items both
/// predicted and gold biased, and are nullopt on an empty subset. Items whose
/// gold lacks a group or attribute are left out of `as` and need no
/// attribution for `overall`.
struct MetricsReport {
  std::size_t n = 0;
  double acc = 0.0;
  double f1 = 0.0;
  std::optional<double> cs;
  std::optional<double> as;
  double over_safety = 0.0;  // fraction of usable verdicts
  double overall = 0.0;
  std::size_t cs_support = 0;
  std::size_t as_support = 0;
  std::map<BiasType, TypeBreakdown> per_type;  // gold-biased items by gold type
  Confusion confusion;

  bool operator==(const MetricsReport&) const = default;
};

/// Either string contains the other after normalize_span, and both are set.
bool attribution_matches(const std::optional<std::string>& gold,
                         const std::optional<std::string>& predicted);

/// Per-item correctness used by compute_metrics and the audit log.
struct ItemScore {
  bool decision_correct = false;
  std::optional<bool> type_correct;         // set on predicted & gold biased
  std::optional<bool> attribution_correct;  // set when also gold-attributed
  bool overall_correct = false;
};

ItemScore score_item(const GoldLabel& gold, const Verdict& verdict);

/// Throws EmptyInput.
MetricsReport compute_metrics(std::span<const ScoredPair> pairs);

// ---------------------------------------------------------------------------
// Labeled evaluation
// ---------------------------------------------------------------------------

/// JSON lines {"id", "text", "gold": {"biased", "bias_type", "group",
/// "attribute"}}. Throws IoError or SchemaError with the line number.
std::vector<LabeledExample> read_labeled(std::istream& in, const AliasMap& aliases = AliasMap::defaults());
std::vector<LabeledExample> load_labeled(const std::filesystem::path& path,
                                         const AliasMap& aliases = AliasMap::defaults());
void write_labeled(std::span<const LabeledExample> examples, std::ostream& out);
void save_labeled(std::span<const LabeledExample> examples, const std::filesystem::path& path);

struct ItemLog {
  std::string id;
  Verdict verdict;
  ItemScore score;
  std::size_t reference_count = 0;
  ItemErrorKind error_kind = ItemErrorKind::none;  // judge errors, distinct from refusals
  std::string error;
};

struct LabeledEvaluation {
  MetricsReport metrics;
  std::vector<ItemLog> items;
  std::size_t backend_errors = 0;
  double mean_latency_ms = 0.0;
};

/// Runs detect_batch and scores every example. Judge failures become
/// unusable verdicts flagged with their error. Throws EmptyInput.
LabeledEvaluation evaluate_labeled(std::span<const LabeledExample> examples,
                                   const DetectorContext& context,
                                   std::size_t max_concurrency = 4);

/// CSV: id,usable,biased,bias_type,group,attribute,decision_correct,
/// type_correct,attribution_correct,overall_correct,references,error_kind,error
void write_items_csv(std::span<const ItemLog> items, std::ostream& out);

/// Deterministic metrics document (no timestamps or latencies).
std::string metrics_to_json(const MetricsReport& report, int indent = 2);

// ---------------------------------------------------------------------------
// Generation tasks
// ---------------------------------------------------------------------------

enum class TaskKind { completion, qa };

struct GenerationTask {
  std::string id;
  std::string prompt;
  TaskKind task_kind = TaskKind::completion;

  bool operator==(const GenerationTask&) const = default;
};

/// JSON lines {"id", "prompt", "task_kind": "completion"|"qa"}.
std::vector<GenerationTask> read_generation_tasks(std::istream& in);
std::vector<GenerationTask> load_generation_tasks(const std::filesystem::path& path);

struct GenerationItem {
  std::string id;
  TaskKind task_kind = TaskKind::completion;
  std::optional<std::string> response;  // absent on generation failure
  std::optional<Verdict> verdict;       // absent on generation or judge failure
  std::string error;
};

/// Bias level of one model on one task set.
struct BiasLevelReport {
  std::string model;
  std::size_t tasks = 0;
  std::size_t generation_failures = 0;  // excluded from the denominator
  std::size_t judge_failures = 0;       // excluded from the denominator
  std::size_t judged = 0;
  std::size_t biased = 0;
  std::size_t unbiased = 0;
  std::size_t unusable = 0;
  double bias_level = 0.0;  // biased / judged
  std::map<TaskKind, double> bias_level_by_kind;
  std::vector<GenerationItem> items;
};

BiasLevelReport evaluate_generation(std::span<const GenerationTask> tasks,
                                    const GenerationBackend& generator,
                                    const DetectorContext& context,
                                    std::size_t max_concurrency = 4);

std::string bias_level_to_json(const BiasLevelReport& report, int indent = 2);

// ---------------------------------------------------------------------------
// Import
// ---------------------------------------------------------------------------

/// Where the fields of a labeled CSV live. Names when `has_header`, else
/// 0-based indices. Empty optional columns are not read.
struct LabeledColumnMapping {
  bool has_header = true;
  std::string id_column;  // empty: "row-<line>"
  std::string text_column = "text";
  std::string biased_column = "biased";
  std::string type_column;
  std::string group_column;
  std::string attribute_column;
};

struct ImportIssue {
  std::size_t line = 0;
  std::string message;
};

struct ImportResult {
  std::vector<LabeledExample> examples;
  std::vector<ImportIssue> issues;
};

/// Accepts flags 1/0, true/false, yes/no, biased/unbiased (any case). Rows
/// with bad flags, empty text, or unresolvable types are skipped and
/// reported. Throws MissingColumn when a mapped column is absent.
ImportResult import_labeled(std::istream& csv, const LabeledColumnMapping& mapping,
                            const AliasMap& aliases = AliasMap::defaults());
ImportResult import_labeled(const std::filesystem::path& path, const LabeledColumnMapping& mapping,
                            const AliasMap& aliases = AliasMap::defaults());

/// Throws InvalidArgument for an unrecognized flag.
bool parse_flag(std::string_view value);

}  // namespace biasalert
