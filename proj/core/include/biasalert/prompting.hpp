#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/labels.hpp"
#include "biasalert/retrieval.hpp"
#include "biasalert/templates.hpp"

namespace biasalert {

/// Ablation switches: retrieval augmentation, step-by-step instructions, and
/// the in-context demonstration.
struct PromptConfig {
  bool use_retrieval = true;
  bool use_steps = true;
  bool use_demo = true;
  std::size_t k = kDefaultTopK;

  /// Throws InvalidArgument when retrieval is on with k == 0.
  void validate() const;

  bool operator==(const PromptConfig&) const = default;
};

struct ChatMessage {
  std::string role;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

/// Everything sent to the judge for one sentence.
struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::string sentence;
  PromptConfig config;
  std::vector<Reference> references;

  /// Two-message chat: system instructions, then references and sentence.
  std::vector<ChatMessage> messages() const;
};

/// system_text: task definition, then steps (if enabled), then the
/// demonstration (if enabled), then the answer format. The answer format is
/// the TEMPLATE the last step refers to and goes with the steps toggle.
/// user_text: the REFERENCE block (if retrieval is enabled), then the SENTENCE
/// line. Blocks are separated by one blank line. Throws EmptyInput.
PromptBundle build_prompt(std::string_view sentence, std::span<const Reference> references,
                          const PromptConfig& config,
                          const TemplateSet& templates = TemplateSet::builtin());

/// Renders the answer the judge is trained to produce for `label`.
/// Throws MissingAttribution for a biased label without type, group, or
/// attribute.
std::string render_gold_answer(const GoldLabel& label,
                               const TemplateSet& templates = TemplateSet::builtin());

struct TrainingRecord {
  std::string instruction;
  std::string input;
  std::string output;

  bool operator==(const TrainingRecord&) const = default;
};

struct TrainingFailure {
  std::string example_id;
  std::string reason;
};

struct TrainingData {
  std::vector<TrainingRecord> records;
  std::vector<TrainingFailure> failures;
};

/// One instruction-tuning record per example, retrieval performed against
/// `index`. Examples that fail (e.g. MissingAttribution) are reported and
/// skipped. Index/embedder mismatches abort with an exception.
TrainingData build_training_records(std::span<const LabeledExample> examples,
                                    const KnowledgeBase& kb, const RetrievalIndex& index,
                                    const Embedder& embedder, const PromptConfig& config,
                                    const TemplateSet& templates = TemplateSet::builtin());

/// JSON lines: {"instruction": ..., "input": ..., "output": ...}.
void write_training_records(std::span<const TrainingRecord> records, std::ostream& out);
std::vector<TrainingRecord> read_training_records(std::istream& in);

}  // namespace biasalert
