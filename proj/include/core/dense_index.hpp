#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/embed.hpp"

namespace core {

enum class DocKind : std::uint8_t { TableChunk = 0, Passage = 1 };

std::string_view to_string(DocKind kind);

struct IndexedDoc {
  std::string id;
  std::string text;
  DocKind kind = DocKind::Passage;
};

struct SearchHit {
  std::string doc_id;
  double sim = 0.0;
  int rank = 0;  // 0-based
  DocKind kind = DocKind::Passage;
};

// Exact maximum-inner-product index. Rows are stored row-major as f32;
// similarities are accumulated in f64. Immutable once built; concurrent
// searches are safe.
class DenseIndex {
 public:
  DenseIndex() = default;
  explicit DenseIndex(std::size_t dim) : dim_(dim) {}

  void add(std::string id, DocKind kind, std::span<const float> values);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<DocKind>& kinds() const { return kinds_; }
  std::span<const float> matrix() const { return matrix_; }
  std::span<const float> row(std::size_t i) const;

  // Top-k by inner product, ties broken by ascending id. When `kind` is set
  // only rows of that kind compete.
  std::vector<SearchHit> search(std::span<const float> query, std::size_t k, const DocKind* kind = nullptr) const;
  // Same contract, single-threaded scan.
  std::vector<SearchHit> search_serial(std::span<const float> query, std::size_t k,
                                       const DocKind* kind = nullptr) const;

  // CIDX: magic, version u32, dim u32, count u64, kinds[count] u8, ids
  // (u16-length-prefixed), then row-major little-endian f32.
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static DenseIndex load(const std::filesystem::path& path);
  static DenseIndex deserialize(const std::string& bytes);

 private:
  std::vector<SearchHit> collect(std::span<const double> scores, std::size_t k, const DocKind* kind) const;
  void check_query(std::span<const float> query) const;

  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<DocKind> kinds_;
  std::vector<float> matrix_;
};

// Embeds every doc with provider.embed_doc in input order.
DenseIndex build_index(const EmbeddingProvider& provider, std::span<const IndexedDoc> docs);

std::vector<SearchHit> search_topk(const DenseIndex& index, std::span<const float> query, std::size_t k);

enum class Scope { TablesOnly, Joint };

Scope parse_scope(std::string_view s);
std::string_view to_string(Scope scope);

inline constexpr std::size_t kDefaultFirstHopK = 100;

// First-hop retrieval: tables-only restricts the candidates to table chunks
// before taking the top k1; joint searches everything.
std::vector<SearchHit> retrieve_first_hop(const DenseIndex& index, std::span<const float> question_vec,
                                          std::size_t k1 = kDefaultFirstHopK, Scope scope = Scope::TablesOnly);

}  // namespace core
