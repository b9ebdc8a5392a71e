#include "biasalert/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include "biasalert/error.hpp"

namespace biasalert {
namespace {

constexpr char kMagic[4] = {'B', 'A', 'I', 'X'};
constexpr std::uint8_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "index cache layout assumes a little-endian host");

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated index cache");
  return value;
}

}  // namespace

RetrievalIndex::RetrievalIndex(std::uint64_t kb_version, std::string embedder_id,
                               std::size_t dimension, std::vector<float> vectors,
                               std::uint64_t kb_fingerprint)
    : kb_version_(kb_version),
      embedder_id_(std::move(embedder_id)),
      kb_fingerprint_(kb_fingerprint),
      dimension_(dimension),
      data_(std::move(vectors)) {
  if (dimension_ == 0 ? !data_.empty() : data_.size() % dimension_ != 0) {
    throw DimensionMismatch("index data is not a whole number of rows");
  }
  live_.resize(size());
  for (std::size_t row = 0; row < live_.size(); ++row) live_[row] = is_zero(vector(row)) ? 0 : 1;
}

std::uint64_t kb_fingerprint(const KnowledgeBase& kb) noexcept {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  const auto mix = [&hash](std::string_view bytes) {
    for (const unsigned char c : bytes) {
      hash ^= c;
      hash *= 0x100000001B3ULL;
    }
  };
  for (const auto& e : kb.entries()) {
    mix(std::to_string(e.id));
    mix("\t");
    mix(to_string(e.bias_type));
    mix("\t");
    mix(e.statement);
    mix("\n");
  }
  return hash;
}

RetrievalIndex build_index(const KnowledgeBase& kb, const Embedder& embedder,
                           std::size_t batch_size) {
  batch_size = std::max<std::size_t>(batch_size, 1);
  std::vector<float> data;
  std::size_t dimension = embedder.dimension();
  if (dimension != 0) data.reserve(kb.size() * dimension);

  std::vector<std::string> batch;
  for (std::size_t start = 0; start < kb.size(); start += batch_size) {
    const std::size_t stop = std::min(kb.size(), start + batch_size);
    batch.clear();
    for (std::size_t i = start; i < stop; ++i) batch.push_back(kb.entries()[i].statement);
    const auto vectors = embedder.embed(batch);
    if (vectors.size() != batch.size()) {
      throw DimensionMismatch("embedder returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(batch.size()) + " texts");
    }
    for (const auto& v : vectors) {
      if (dimension == 0) dimension = v.size();
      if (v.size() != dimension) throw DimensionMismatch("embedder changed dimension mid-build");
      data.insert(data.end(), v.begin(), v.end());
    }
  }
  return RetrievalIndex(kb.version(), embedder.id(), dimension, std::move(data), kb_fingerprint(kb));
}

std::vector<Reference> query_vector(const RetrievalIndex& index, const KnowledgeBase& kb,
                                    std::span<const float> query, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (index.kb_version() != kb.version() || index.size() != kb.size()) {
    throw IndexMismatch("index was built for kb version " + std::to_string(index.kb_version()) +
                        ", knowledge base is version " + std::to_string(kb.version()));
  }
  if (is_zero(query) || kb.empty()) return {};
  if (query.size() != index.dimension()) {
    throw DimensionMismatch("query dimension " + std::to_string(query.size()) +
                            " does not match index dimension " + std::to_string(index.dimension()));
  }

  struct Scored {
    double score;
    std::size_t row;
  };
  std::vector<Scored> scored;
  scored.reserve(index.size());
  for (std::size_t row = 0; row < index.size(); ++row) {
    if (index.live(row)) scored.push_back({dot(query, index.vector(row)), row});
  }

  const auto& entries = kb.entries();
  const auto better = [&](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return entries[a.row].id < entries[b.row].id;
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    better);

  std::vector<Reference> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    out.push_back({entries[scored[i].row], scored[i].score, i + 1});
  }
  return out;
}

std::vector<Reference> query(const RetrievalIndex& index, const KnowledgeBase& kb,
                             const Embedder& embedder, std::string_view text, std::size_t k) {
  if (embedder.id() != index.embedder_id()) {
    throw EmbedderMismatch("index built with '" + index.embedder_id() + "', query uses '" +
                           embedder.id() + "'");
  }
  if (k == 0) throw InvalidArgument("k must be at least 1");
  const Embedding q = embedder.embed_one(text);
  return query_vector(index, kb, q, k);
}

void save_index(const RetrievalIndex& index, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kFormatVersion);
    write_pod(out, static_cast<std::uint64_t>(index.kb_version()));
    write_pod(out, static_cast<std::uint64_t>(index.kb_fingerprint()));
    write_pod(out, static_cast<std::uint32_t>(index.embedder_id().size()));
    out.write(index.embedder_id().data(), static_cast<std::streamsize>(index.embedder_id().size()));
    write_pod(out, static_cast<std::uint32_t>(index.dimension()));
    write_pod(out, static_cast<std::uint64_t>(index.size()));
    for (std::size_t row = 0; row < index.size(); ++row) {
      const auto v = index.vector(row);
      out.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

RetrievalIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw IoError(path.string() + " is not an index cache");
  }
  if (read_pod<std::uint8_t>(in) != kFormatVersion) {
    throw IoError(path.string() + ": unsupported index cache format version");
  }
  const auto kb_version = read_pod<std::uint64_t>(in);
  const auto fingerprint = read_pod<std::uint64_t>(in);
  const auto id_len = read_pod<std::uint32_t>(in);
  std::string embedder_id(id_len, '\0');
  in.read(embedder_id.data(), id_len);
  const auto dimension = read_pod<std::uint32_t>(in);
  const auto rows = read_pod<std::uint64_t>(in);
  std::vector<float> data(static_cast<std::size_t>(rows) * dimension);
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw IoError("truncated index cache " + path.string());
  return RetrievalIndex(kb_version, std::move(embedder_id), dimension, std::move(data), fingerprint);
}

RetrievalIndex load_or_build_index(const KnowledgeBase& kb, const Embedder& embedder,
                                   const std::filesystem::path& cache_path) {
  if (!cache_path.empty() && std::filesystem::exists(cache_path)) {
    try {
      auto cached = load_index(cache_path);
      if (cached.kb_version() == kb.version() && cached.embedder_id() == embedder.id() &&
          cached.size() == kb.size() && cached.kb_fingerprint() == kb_fingerprint(kb)) {
        return cached;
      }
    } catch (const IoError&) {
      // Stale or corrupt cache; rebuilt below.
    }
  }
  auto index = build_index(kb, embedder);
  if (!cache_path.empty()) save_index(index, cache_path);
  return index;
}

}  // namespace biasalert
