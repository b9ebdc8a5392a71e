#include "biasalert/embedding.hpp"

#include <cmath>
#include <mutex>

#include "json_io.hpp"
#include "biasalert/error.hpp"

namespace biasalert {

Embedding Embedder::embed_one(std::string_view text) const {
  const std::string owned(text);
  auto vectors = embed(std::span<const std::string>(&owned, 1));
  return std::move(vectors.front());
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001B3ULL;
  }
  return hash;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (const unsigned char c : text) {
    const bool digit = c >= '0' && c <= '9';
    const bool lower = c >= 'a' && c <= 'z';
    const bool upper = c >= 'A' && c <= 'Z';
    if (digit || lower || upper) {
      current.push_back(upper ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

void l2_normalize(std::span<float> v) noexcept {
  double sum_sq = 0.0;
  for (const float x : v) sum_sq += static_cast<double>(x) * x;
  if (sum_sq <= 0.0) return;
  const double inv = 1.0 / std::sqrt(sum_sq);
  for (float& x : v) x = static_cast<float>(x * inv);
}

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double sum = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * b[i];
  return sum;
}

bool is_zero(std::span<const float> v) noexcept {
  for (const float x : v) {
    if (x != 0.0f) return false;
  }
  return true;
}

std::vector<Embedding> LocalHashEmbedder::embed(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    Embedding v(kDimension, 0.0f);
    for (const auto& token : tokenize(text)) v[fnv1a64(token) % kDimension] += 1.0f;
    l2_normalize(v);
    out.push_back(std::move(v));
  }
  return out;
}

struct RemoteEmbedder::State {
  mutable std::mutex mutex;
  std::size_t dimension = 0;
};

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config)
    : config_(std::move(config)), state_(std::make_unique<State>()) {}

RemoteEmbedder::~RemoteEmbedder() = default;

std::size_t RemoteEmbedder::dimension() const {
  std::lock_guard lock(state_->mutex);
  return state_->dimension;
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  HttpRequestOptions options{config_.auth, config_.retry, config_.timeout_ms};
  const std::string body = post_json(config_.url, embeddings_request_body(texts, config_.model), options);
  auto vectors = parse_embeddings_response(body, texts.size());

  std::lock_guard lock(state_->mutex);
  const std::size_t dim = vectors.front().size();
  if (state_->dimension != 0 && state_->dimension != dim) {
    throw DimensionMismatch("embedder returned dimension " + std::to_string(dim) +
                            ", earlier calls returned " + std::to_string(state_->dimension));
  }
  state_->dimension = dim;
  for (auto& v : vectors) l2_normalize(v);
  return vectors;
}

std::string embeddings_request_body(std::span<const std::string> texts, std::string_view model) {
  nlohmann::json body;
  body["input"] = std::vector<std::string>(texts.begin(), texts.end());
  body["model"] = model;
  return body.dump();
}

std::vector<Embedding> parse_embeddings_response(std::string_view body, std::size_t expected_count) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || !doc.contains("data") || !doc["data"].is_array()) {
    throw InvalidArgument("embeddings response lacks a data array");
  }
  const auto& data = doc["data"];
  if (data.size() != expected_count) {
    throw DimensionMismatch("expected " + std::to_string(expected_count) + " embeddings, got " +
                            std::to_string(data.size()));
  }
  std::vector<Embedding> out;
  out.reserve(data.size());
  for (const auto& item : data) {
    if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array()) {
      throw InvalidArgument("embeddings response item lacks an embedding array");
    }
    Embedding v;
    v.reserve(item["embedding"].size());
    for (const auto& x : item["embedding"]) {
      if (!x.is_number()) throw InvalidArgument("non-numeric embedding component");
      v.push_back(x.get<float>());
    }
    if (v.empty() || (!out.empty() && v.size() != out.front().size())) {
      throw DimensionMismatch("inconsistent embedding dimensions in one response");
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace biasalert
