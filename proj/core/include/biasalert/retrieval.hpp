#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/embedding.hpp"
#include "biasalert/knowledge_db.hpp"

namespace biasalert {

inline constexpr std::size_t kDefaultTopK = 5;

/// A retrieved knowledge entry. Ranks are 1-based.
struct Reference {
  BiasEntry entry;
  double score = 0.0;
  std::size_t rank = 0;

  bool operator==(const Reference&) const = default;
};

/// Exact-scan cosine index over a knowledge base, one vector per entry in
/// entry order. Immutable once built.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;

  /// `vectors` is row-major, `count * dimension` floats.
  /// Throws DimensionMismatch if the sizes disagree.
  RetrievalIndex(std::uint64_t kb_version, std::string embedder_id, std::size_t dimension,
                 std::vector<float> vectors, std::uint64_t kb_fingerprint = 0);

  std::uint64_t kb_version() const noexcept { return kb_version_; }
  const std::string& embedder_id() const noexcept { return embedder_id_; }
  /// kb_fingerprint() of the knowledge base the index was built from.
  std::uint64_t kb_fingerprint() const noexcept { return kb_fingerprint_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return dimension_ == 0 ? 0 : data_.size() / dimension_; }

  std::span<const float> vector(std::size_t row) const noexcept {
    return {data_.data() + row * dimension_, dimension_};
  }

  /// False for all-zero rows, which never match.
  bool live(std::size_t row) const noexcept { return live_[row] != 0; }

  bool operator==(const RetrievalIndex& other) const noexcept {
    return kb_version_ == other.kb_version_ && embedder_id_ == other.embedder_id_ &&
           kb_fingerprint_ == other.kb_fingerprint_ && dimension_ == other.dimension_ &&
           data_ == other.data_;
  }

 private:
  std::uint64_t kb_version_ = 0;
  std::string embedder_id_;
  std::uint64_t kb_fingerprint_ = 0;
  std::size_t dimension_ = 0;
  std::vector<float> data_;
  std::vector<unsigned char> live_;
};

/// FNV-1a over every entry's id, type and statement.
std::uint64_t kb_fingerprint(const KnowledgeBase& kb) noexcept;

/// Embeds every entry. All-or-nothing: embedder errors propagate and no
/// index is returned.
RetrievalIndex build_index(const KnowledgeBase& kb, const Embedder& embedder,
                           std::size_t batch_size = 512);

/// Top-k entries by cosine similarity to `text`, ties broken by ascending id.
/// Returns fewer than k when the knowledge base is smaller, and nothing for a
/// zero query vector. Throws EmbedderMismatch, IndexMismatch, InvalidArgument
/// (k == 0), or embedder errors.
std::vector<Reference> query(const RetrievalIndex& index, const KnowledgeBase& kb,
                             const Embedder& embedder, std::string_view text,
                             std::size_t k = kDefaultTopK);

/// Same ranking for an already-embedded, normalized query.
std::vector<Reference> query_vector(const RetrievalIndex& index, const KnowledgeBase& kb,
                                    std::span<const float> query, std::size_t k = kDefaultTopK);

/// Binary cache: magic "BAIX", format version byte, kb_version, kb
/// fingerprint, embedder id, dimension, row count, then raw little-endian
/// floats.
void save_index(const RetrievalIndex& index, const std::filesystem::path& path);
RetrievalIndex load_index(const std::filesystem::path& path);

/// Loads the cache when it matches (kb version, fingerprint, embedder id); otherwise
/// builds and, when `cache_path` is non-empty, rewrites the cache.
RetrievalIndex load_or_build_index(const KnowledgeBase& kb, const Embedder& embedder,
                                   const std::filesystem::path& cache_path);

}  // namespace biasalert
