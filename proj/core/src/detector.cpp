#include "biasalert/detector.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"

namespace biasalert {

void DetectorContext::validate() const {
  if (!kb || !index || !embedder || !templates || !parser || !judge) {
    throw InvalidArgument("detector context is incomplete");
  }
  if (index->kb_version() != kb->version() || index->size() != kb->size()) {
    throw IndexMismatch("index does not belong to knowledge base version " + std::to_string(kb->version()));
  }
  if (index->embedder_id() != embedder->id()) {
    throw IndexMismatch("index built with '" + index->embedder_id() + "', context embedder is '" +
                        embedder->id() + "'");
  }
  prompt.validate();
}

std::shared_ptr<const DetectorContext> build_context(std::shared_ptr<const KnowledgeBase> kb,
                                                     const DetectorSetup& setup) {
  if (!kb) throw InvalidArgument("build_context needs a knowledge base");
  auto ctx = std::make_shared<DetectorContext>();
  ctx->embedder = setup.embedder ? setup.embedder : std::make_shared<const LocalHashEmbedder>();
  ctx->templates = setup.templates ? setup.templates
                                   : std::make_shared<const TemplateSet>(TemplateSet::builtin());
  ctx->index = std::make_shared<const RetrievalIndex>(
      load_or_build_index(*kb, *ctx->embedder, setup.index_cache));
  ctx->parser = std::make_shared<const VerdictParser>(setup.aliases, ctx->templates->quote_chars());
  if (!setup.judge) throw InvalidArgument("detector setup has no judge");
  ctx->judge = setup.judge(kb, *ctx->templates);
  ctx->kb = std::move(kb);
  ctx->prompt = setup.prompt;
  ctx->validate();
  return ctx;
}

DetectionResult detect(std::string_view text, const DetectorContext& context) {
  return detect(text, context, context.prompt);
}

DetectionResult detect(std::string_view text, const DetectorContext& context, const PromptConfig& prompt) {
  const auto start = std::chrono::steady_clock::now();
  if (text::trim(text).empty()) throw EmptyInput("text is empty");
  prompt.validate();

  DetectionResult result;
  if (prompt.use_retrieval) {
    result.references = query(*context.index, *context.kb, *context.embedder, text, prompt.k);
  }
  result.prompt = build_prompt(text, result.references, prompt, *context.templates);
  result.completion = context.judge->complete(result.prompt);
  result.verdict = context.parser->parse(result.completion);
  result.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::string_view to_string(ItemErrorKind kind) noexcept {
  switch (kind) {
    case ItemErrorKind::none: return "none";
    case ItemErrorKind::backend_unavailable: return "backend_unavailable";
    case ItemErrorKind::invalid_input: return "invalid_input";
    case ItemErrorKind::other: return "other";
  }
  return "other";
}

std::vector<BatchItem> detect_batch(std::span<const std::string> texts, const DetectorContext& context,
                                    std::size_t max_concurrency) {
  std::vector<BatchItem> items(texts.size());
  const auto run = [&](std::size_t i) {
    BatchItem& item = items[i];
    try {
      item.result = detect(texts[i], context);
    } catch (const BackendUnavailable& e) {
      item.error_kind = ItemErrorKind::backend_unavailable;
      item.error = e.what();
    } catch (const EmptyInput& e) {
      item.error_kind = ItemErrorKind::invalid_input;
      item.error = e.what();
    } catch (const std::exception& e) {
      item.error_kind = ItemErrorKind::other;
      item.error = e.what();
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(max_concurrency, 1), texts.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) run(i);
    return items;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < texts.size(); i = next++) run(i);
    });
  }
  pool.clear();
  return items;
}

}  // namespace biasalert
