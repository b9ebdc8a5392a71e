#include "biasalert/backends.hpp"

#include <cstdlib>
#include <fstream>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"
#include "json_io.hpp"

namespace biasalert {
namespace {

const char* env(const std::string& name) {
  const char* value = std::getenv(name.c_str());
  return value != nullptr && *value != '\0' ? value : nullptr;
}

std::string normalized(std::string_view s) { return text::to_lower(text::collapse_whitespace(s)); }

struct Split {
  std::string group;
  std::string attribute;
};

Split split_statement(std::string_view normalized_statement) {
  const auto tokens = text::split_whitespace(normalized_statement);
  const std::size_t head = tokens.size() >= 3 ? 2 : 1;
  Split out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string& dst = i < head ? out.group : out.attribute;
    if (!dst.empty()) dst.push_back(' ');
    dst += tokens[i];
  }
  if (out.attribute.empty()) out.attribute = out.group;
  return out;
}

std::string render_match(BiasType type, const Split& split, const TemplateSet& templates) {
  return render_gold_answer(GoldLabel::make_biased(type, split.group, split.attribute), templates);
}

}  // namespace

void RemoteChatConfig::apply_env(std::string_view prefix) {
  const std::string p(prefix);
  if (const char* v = env(p + "_URL")) url = v;
  if (const char* v = env(p + "_MODEL")) model = v;
  const char* key = env(p + "_KEY");
  const char* header = env(p + "_KEY_HEADER");
  if (key != nullptr) {
    if (header != nullptr) {
      http.auth.header_name = header;
      http.auth.header_value = key;
    } else {
      http.auth.header_name = "Authorization";
      http.auth.header_value = std::string("Bearer ") + key;
    }
  }
}

std::string RemoteChatConfig::endpoint() const {
  const auto target = HttpUrl::parse(url);
  if (target.path == "/") return target.scheme_host_port + "/v1/chat/completions";
  return url;
}

std::string chat_request_body(const RemoteChatConfig& config, std::span<const ChatMessage> messages) {
  json_io::json list = json_io::json::array();
  for (const auto& m : messages) list.push_back({{"role", m.role}, {"content", m.content}});
  return json_io::json{{"model", config.model},
                       {"messages", std::move(list)},
                       {"temperature", config.temperature},
                       {"max_tokens", config.max_tokens}}
      .dump();
}

std::string parse_chat_response(std::string_view body) {
  const auto doc = json_io::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw BackendUnavailable("chat response is not JSON");
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) {
    throw BackendUnavailable("chat response has no choices");
  }
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) {
    throw BackendUnavailable("chat response choice has no message");
  }
  const auto& content = first["message"].find("content");
  if (content == first["message"].end() || !content->is_string()) {
    throw BackendUnavailable("chat response message has no content");
  }
  return content->get<std::string>();
}

std::string chat_complete(const RemoteChatConfig& config, std::span<const ChatMessage> messages) {
  const std::string body = post_json(config.endpoint(), chat_request_body(config, messages), config.http);
  return parse_chat_response(body);
}

std::string RemoteChatBackend::complete(const PromptBundle& prompt) const {
  const auto messages = prompt.messages();
  return chat_complete(config_, messages);
}

std::string mock_complete(const PromptBundle& prompt, const KnowledgeBase& kb, const TemplateSet& templates) {
  const std::string sentence = normalized(prompt.sentence);
  for (const auto& entry : kb.entries()) {
    const std::string needle = normalized(entry.statement);
    if (!needle.empty() && sentence.find(needle) != std::string::npos) {
      return render_match(entry.bias_type, split_statement(needle), templates);
    }
  }
  return templates.section("answer_unbiased");
}

MockRuleBackend::MockRuleBackend(std::shared_ptr<const KnowledgeBase> kb, const TemplateSet& templates)
    : kb_(std::move(kb)), templates_(templates) {
  if (!kb_) throw InvalidArgument("mock judge needs a knowledge base");
  patterns_.reserve(kb_->size());
  for (const auto& entry : kb_->entries()) {
    std::string needle = normalized(entry.statement);
    auto split = split_statement(needle);
    patterns_.push_back({std::move(needle), std::move(split.group), std::move(split.attribute), entry.bias_type});
  }
}

std::string MockRuleBackend::complete(const PromptBundle& prompt) const {
  const std::string sentence = normalized(prompt.sentence);
  for (const auto& p : patterns_) {
    if (sentence.find(p.needle) != std::string::npos) {
      return render_match(p.type, {p.group, p.attribute}, templates_);
    }
  }
  return templates_.section("answer_unbiased");
}

std::string RemoteGenerationBackend::generate(const GenerationRequest& request) const {
  const ChatMessage message{"user", request.prompt};
  return chat_complete(config_, std::span<const ChatMessage>(&message, 1));
}

ReplayGenerationBackend ReplayGenerationBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open replay file " + path.string());
  std::map<std::string, std::string> responses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto doc = json_io::parse_line(line, line_no);
    auto id = json_io::required_string(doc, "id", line_no);
    auto response = json_io::required_string(doc, "response", line_no);
    if (!responses.emplace(std::move(id), std::move(response)).second) {
      throw SchemaError(line_no, "duplicate id");
    }
  }
  return ReplayGenerationBackend(std::move(responses), "replay:" + path.stem().string());
}

std::string ReplayGenerationBackend::generate(const GenerationRequest& request) const {
  const auto it = responses_.find(request.id);
  if (it == responses_.end()) throw BackendUnavailable("no replay response for id '" + request.id + "'");
  return it->second;
}

JudgeFactory mock_judge_factory() {
  return [](const std::shared_ptr<const KnowledgeBase>& kb, const TemplateSet& templates) {
    return std::make_shared<const MockRuleBackend>(kb, templates);
  };
}

JudgeFactory remote_judge_factory(RemoteChatConfig config) {
  return [config = std::move(config)](const std::shared_ptr<const KnowledgeBase>&, const TemplateSet&) {
    return std::make_shared<const RemoteChatBackend>(config);
  };
}

}  // namespace biasalert
