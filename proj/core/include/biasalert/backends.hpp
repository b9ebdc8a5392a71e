#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/http.hpp"
#include "biasalert/knowledge_db.hpp"
#include "biasalert/prompting.hpp"
#include "biasalert/templates.hpp"

namespace biasalert {

/// The judge: turns an assembled prompt into the model's raw answer.
/// Implementations are thread-safe; failures throw BackendUnavailable.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const PromptBundle& prompt) const = 0;
  virtual std::string name() const = 0;
};

/// A prompt for a model under test (or behind the gateway).
struct GenerationRequest {
  std::string id;
  std::string prompt;
};

/// Produces the text a monitored model returns for a prompt.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string generate(const GenerationRequest& request) const = 0;
  virtual std::string name() const = 0;
};

struct RemoteChatConfig {
  /// Endpoint URL. A bare base URL ("http://host:8000") gets
  /// "/v1/chat/completions" appended.
  std::string url;
  std::string model;
  double temperature = 0.0;
  int max_tokens = 256;
  HttpRequestOptions http;

  /// Reads <prefix>_URL, <prefix>_MODEL, <prefix>_KEY and <prefix>_KEY_HEADER.
  /// A key without a header name is sent as "Authorization: Bearer <key>".
  /// Unset variables keep the current values.
  void apply_env(std::string_view prefix);

  std::string endpoint() const;
};

/// {"model", "messages": [{"role", "content"}...], "temperature", "max_tokens"}
std::string chat_request_body(const RemoteChatConfig& config,
                              std::span<const ChatMessage> messages);

/// Extracts choices[0].message.content. Throws BackendUnavailable on a
/// malformed body.
std::string parse_chat_response(std::string_view body);

/// One chat-completions round trip with retries.
std::string chat_complete(const RemoteChatConfig& config, std::span<const ChatMessage> messages);

/// Judge served over the chat-completions wire contract.
class RemoteChatBackend final : public ChatBackend {
 public:
  explicit RemoteChatBackend(RemoteChatConfig config) : config_(std::move(config)) {}
  std::string complete(const PromptBundle& prompt) const override;
  std::string name() const override { return "remote:" + config_.model; }
  const RemoteChatConfig& config() const noexcept { return config_; }

 private:
  RemoteChatConfig config_;
};

/// Deterministic stand-in judge.
///
/// If some knowledge-base statement, normalized, occurs as a substring of the
/// normalized sentence, answers biased with that entry's type; the group is
/// the statement's first two tokens and the attribute the rest. The lowest id
/// wins. Otherwise answers unbiased. Statements shorter than three tokens
/// split as (first, rest), and a single token serves as both.
std::string mock_complete(const PromptBundle& prompt, const KnowledgeBase& kb,
                          const TemplateSet& templates = TemplateSet::builtin());

class MockRuleBackend final : public ChatBackend {
 public:
  MockRuleBackend(std::shared_ptr<const KnowledgeBase> kb,
                  const TemplateSet& templates = TemplateSet::builtin());
  std::string complete(const PromptBundle& prompt) const override;
  std::string name() const override { return "mock-rule"; }

 private:
  struct Pattern {
    std::string needle;
    std::string group;
    std::string attribute;
    BiasType type;
  };
  std::shared_ptr<const KnowledgeBase> kb_;
  TemplateSet templates_;
  std::vector<Pattern> patterns_;  // ascending entry id
};

/// Model under test reached over chat completions; the prompt is sent as a
/// single user message.
class RemoteGenerationBackend final : public GenerationBackend {
 public:
  explicit RemoteGenerationBackend(RemoteChatConfig config) : config_(std::move(config)) {}
  std::string generate(const GenerationRequest& request) const override;
  std::string name() const override { return config_.model; }

 private:
  RemoteChatConfig config_;
};

/// Serves canned responses keyed by request id; unknown ids fail with
/// BackendUnavailable.
class ReplayGenerationBackend final : public GenerationBackend {
 public:
  explicit ReplayGenerationBackend(std::map<std::string, std::string> responses,
                                   std::string name = "replay")
      : responses_(std::move(responses)), name_(std::move(name)) {}

  /// JSON lines {"id", "response"}. Throws IoError or SchemaError.
  static ReplayGenerationBackend load(const std::filesystem::path& path);

  std::string generate(const GenerationRequest& request) const override;
  std::string name() const override { return name_; }
  std::size_t size() const noexcept { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
  std::string name_;
};

/// Creates a judge bound to a particular knowledge base (the mock judge reads
/// it; remote judges ignore it).
using JudgeFactory = std::function<std::shared_ptr<const ChatBackend>(
    const std::shared_ptr<const KnowledgeBase>&, const TemplateSet&)>;

JudgeFactory mock_judge_factory();
JudgeFactory remote_judge_factory(RemoteChatConfig config);

}  // namespace biasalert
