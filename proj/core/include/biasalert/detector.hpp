#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/backends.hpp"
#include "biasalert/embedding.hpp"
#include "biasalert/knowledge_db.hpp"
#include "biasalert/prompting.hpp"
#include "biasalert/retrieval.hpp"
#include "biasalert/templates.hpp"
#include "biasalert/verdict.hpp"

namespace biasalert {

/// Immutable bundle of everything one detection needs. Shared by pointer and
/// replaced wholesale when the knowledge base changes.
struct DetectorContext {
  std::shared_ptr<const KnowledgeBase> kb;
  std::shared_ptr<const RetrievalIndex> index;
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const TemplateSet> templates;
  std::shared_ptr<const VerdictParser> parser;
  std::shared_ptr<const ChatBackend> judge;
  PromptConfig prompt;

  /// Throws InvalidArgument for null members, IndexMismatch when the index
  /// was built from another knowledge base version or another embedder.
  void validate() const;
};

/// Inputs for (re)building a context around a knowledge base.
struct DetectorSetup {
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const TemplateSet> templates;
  AliasMap aliases = AliasMap::defaults();
  JudgeFactory judge = mock_judge_factory();
  PromptConfig prompt;
  std::filesystem::path index_cache;  // empty: always build in memory
};

/// Builds (or loads from cache) the index, the parser and the judge.
std::shared_ptr<const DetectorContext> build_context(std::shared_ptr<const KnowledgeBase> kb,
                                                     const DetectorSetup& setup);

struct DetectionResult {
  Verdict verdict;
  std::vector<Reference> references;
  PromptBundle prompt;
  std::string completion;
  /// retrieve -> prompt -> complete -> parse, wall clock.
  double latency_ms = 0.0;
};

/// Throws EmptyInput, BackendUnavailable, or retrieval errors. A judge
/// failure is never turned into a verdict.
DetectionResult detect(std::string_view text, const DetectorContext& context);
DetectionResult detect(std::string_view text, const DetectorContext& context,
                       const PromptConfig& prompt);

enum class ItemErrorKind {
  none,
  backend_unavailable,
  invalid_input,
  other,
};

std::string_view to_string(ItemErrorKind kind) noexcept;

struct BatchItem {
  std::optional<DetectionResult> result;
  ItemErrorKind error_kind = ItemErrorKind::none;
  std::string error;

  bool ok() const noexcept { return result.has_value(); }
};

/// detect() over every text with at most `max_concurrency` judge calls in
/// flight. Output order matches input order and per-item failures are
/// recorded in place.
std::vector<BatchItem> detect_batch(std::span<const std::string> texts,
                                    const DetectorContext& context,
                                    std::size_t max_concurrency = 4);

}  // namespace biasalert
