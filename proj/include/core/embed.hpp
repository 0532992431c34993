#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace core {

class LineService;

using Vector = std::vector<float>;
// One state per whitespace token of the input text.
using TokenStates = std::vector<Vector>;

inline constexpr std::size_t kDefaultEmbeddingDim = 64;

// Questions, documents and per-token states share one vector space of
// dimension dim(). Implementations are read-only after construction and safe
// to share across threads.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dim() const = 0;
  // `id` lets precomputed providers look vectors up; text-based providers
  // ignore it.
  virtual Vector embed_question(std::string_view id, std::string_view text) const = 0;
  virtual Vector embed_doc(std::string_view id, std::string_view text) const = 0;
  virtual TokenStates token_states(std::string_view text) const = 0;
};

// Hash-seeded unit vector for a token: component k is 2u-1 with u drawn from
// splitmix64(fnv1a64(lowercase(token)) ^ k); the result is L2-normalized.
Vector reference_token_vector(std::string_view token, std::size_t dim);

// (h_i + h_j) / 2 for an inclusive token span; not renormalized.
Vector entity_embedding(const TokenStates& states, std::size_t i, std::size_t j);

// Context-free reference provider. Each whitespace token is keyed by its
// punctuation-stripped lowercase form (raw form if that is empty); documents
// and questions embed as the L2-normalized mean of their token vectors.
class ReferenceProvider final : public EmbeddingProvider {
 public:
  explicit ReferenceProvider(std::size_t dim = kDefaultEmbeddingDim);
  std::size_t dim() const override { return dim_; }
  Vector embed_question(std::string_view id, std::string_view text) const override;
  Vector embed_doc(std::string_view id, std::string_view text) const override;
  TokenStates token_states(std::string_view text) const override;

 private:
  std::size_t dim_;
};

// Precomputed vectors keyed by id (CVEC file). Token states are unavailable.
class VectorFileProvider final : public EmbeddingProvider {
 public:
  explicit VectorFileProvider(const std::filesystem::path& path);
  VectorFileProvider(std::size_t dim, std::unordered_map<std::string, Vector> vectors);

  std::size_t dim() const override { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  Vector embed_question(std::string_view id, std::string_view text) const override;
  Vector embed_doc(std::string_view id, std::string_view text) const override;
  TokenStates token_states(std::string_view text) const override;

 private:
  const Vector& lookup(std::string_view id) const;

  std::size_t dim_ = 0;
  std::unordered_map<std::string, Vector> vectors_;
};

// Delegates to an external process speaking line-delimited JSON:
//   {"op":"embed_doc","text":...}      -> {"values":[...]}
//   {"op":"embed_question","text":...} -> {"values":[...]}
//   {"op":"token_states","text":...}   -> {"states":[[...],...]}
class ExternalProvider final : public EmbeddingProvider {
 public:
  ExternalProvider(std::shared_ptr<LineService> service, std::size_t dim);
  std::size_t dim() const override { return dim_; }
  Vector embed_question(std::string_view id, std::string_view text) const override;
  Vector embed_doc(std::string_view id, std::string_view text) const override;
  TokenStates token_states(std::string_view text) const override;

 private:
  Vector fetch(const char* op, std::string_view text) const;

  std::shared_ptr<LineService> service_;
  std::size_t dim_;
};

struct NamedVector {
  std::string id;
  Vector values;
};

// CVEC: magic, version u32, dim u32, count u64, then per record a
// u16-length-prefixed UTF-8 id followed by dim little-endian f32.
void write_vector_file(const std::filesystem::path& path, std::size_t dim, const std::vector<NamedVector>& records);
std::vector<NamedVector> read_vector_file(const std::filesystem::path& path, std::size_t* dim_out = nullptr);

}  // namespace core
