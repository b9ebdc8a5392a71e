#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/http.hpp"

namespace biasalert {

using Embedding = std::vector<float>;

/// Produces L2-normalized text embeddings. Implementations are thread-safe.
class Embedder {
 public:
  virtual ~Embedder() = default;

  /// Stable tag recorded in indexes; queries against an index built with a
  /// different tag are refused.
  virtual std::string id() const = 0;

  /// Vector length, or 0 while unknown (remote embedders before first call).
  virtual std::size_t dimension() const = 0;

  virtual std::vector<Embedding> embed(std::span<const std::string> texts) const = 0;

  Embedding embed_one(std::string_view text) const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Lowercase, split on any non-alphanumeric byte, drop empty tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Scales to unit L2 norm; the zero vector is left as is.
void l2_normalize(std::span<float> v) noexcept;

double dot(std::span<const float> a, std::span<const float> b) noexcept;

bool is_zero(std::span<const float> v) noexcept;

/// Hashing bag-of-tokens embedder: each token's FNV-1a hash modulo 256 picks a
/// bucket, bucket counts are L2-normalized. Pure and platform independent.
class LocalHashEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kDimension = 256;

  std::string id() const override { return "local-fnv1a-256"; }
  std::size_t dimension() const override { return kDimension; }
  std::vector<Embedding> embed(std::span<const std::string> texts) const override;
};

struct RemoteEmbedderConfig {
  std::string url;  // full endpoint, e.g. http://host:8080/v1/embeddings
  std::string model;
  HttpAuth auth;
  RetryPolicy retry;
  int timeout_ms = 10000;
};

/// Client for the de-facto embeddings API:
/// POST {"input": [...], "model": m} -> {"data": [{"embedding": [...]}, ...]}.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  ~RemoteEmbedder() override;

  std::string id() const override { return "remote:" + config_.model; }
  std::size_t dimension() const override;

  /// Throws BackendUnavailable, or DimensionMismatch when the response holds
  /// the wrong number of vectors or vectors of inconsistent length.
  std::vector<Embedding> embed(std::span<const std::string> texts) const override;

 private:
  RemoteEmbedderConfig config_;
  struct State;
  std::unique_ptr<State> state_;
};

/// Request body for the embeddings wire contract.
std::string embeddings_request_body(std::span<const std::string> texts, std::string_view model);

/// Decodes an embeddings response. Throws DimensionMismatch or InvalidArgument.
std::vector<Embedding> parse_embeddings_response(std::string_view body, std::size_t expected_count);

}  // namespace biasalert
