#include "core/dense_index.hpp"

#include <fstream>
#include <sstream>

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/kernels.hpp"

namespace core {

namespace {

constexpr std::uint32_t kIndexVersion = 1;

void write_index(std::ostream& out, const DenseIndex& index) {
  binio::write_magic(out, "CIDX");
  binio::write_u32(out, kIndexVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(index.dim()));
  binio::write_u64(out, index.size());
  for (auto kind : index.kinds()) binio::write_u8(out, static_cast<std::uint8_t>(kind));
  for (const auto& id : index.ids()) binio::write_short_string(out, id);
  for (float x : index.matrix()) binio::write_f32(out, x);
}

DenseIndex read_index(std::istream& in, const std::string& what) {
  binio::expect_magic(in, "CIDX", what);
  if (binio::read_u32(in) != kIndexVersion) throw ValidationError(what + ": unsupported CIDX version");
  const std::size_t dim = binio::read_u32(in);
  const auto count = static_cast<std::size_t>(binio::read_u64(in));
  std::vector<DocKind> kinds(count);
  for (auto& k : kinds) {
    auto v = binio::read_u8(in);
    if (v > 1) throw ValidationError(what + ": bad kind tag");
    k = static_cast<DocKind>(v);
  }
  std::vector<std::string> ids(count);
  for (auto& id : ids) id = binio::read_short_string(in);
  DenseIndex index(dim);
  std::vector<float> row(dim);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& x : row) x = binio::read_f32(in);
    index.add(std::move(ids[i]), kinds[i], row);
  }
  return index;
}

}  // namespace

std::string_view to_string(DocKind kind) {
  return kind == DocKind::TableChunk ? "table-chunk" : "passage";
}

void DenseIndex::add(std::string id, DocKind kind, std::span<const float> values) {
  if (values.size() != dim_) {
    throw ValidationError("index: vector for " + id + " has dim " + std::to_string(values.size()) + ", expected " +
                          std::to_string(dim_));
  }
  ids_.push_back(std::move(id));
  kinds_.push_back(kind);
  matrix_.insert(matrix_.end(), values.begin(), values.end());
}

std::span<const float> DenseIndex::row(std::size_t i) const {
  return std::span<const float>(matrix_).subspan(i * dim_, dim_);
}

void DenseIndex::check_query(std::span<const float> query) const {
  if (query.size() != dim_) {
    throw ValidationError("query dim " + std::to_string(query.size()) + " != index dim " + std::to_string(dim_));
  }
}

std::vector<SearchHit> DenseIndex::collect(std::span<const double> scores, std::size_t k, const DocKind* kind) const {
  std::vector<std::size_t> candidates;
  if (kind) {
    for (std::size_t i = 0; i < kinds_.size(); ++i) {
      if (kinds_[i] == *kind) candidates.push_back(i);
    }
  }
  auto top = kernels::top_k(scores, ids_, k, kind ? &candidates : nullptr);
  std::vector<SearchHit> hits;
  hits.reserve(top.size());
  for (std::size_t r = 0; r < top.size(); ++r) {
    hits.push_back({ids_[top[r]], scores[top[r]], static_cast<int>(r), kinds_[top[r]]});
  }
  return hits;
}

std::vector<SearchHit> DenseIndex::search(std::span<const float> query, std::size_t k, const DocKind* kind) const {
  check_query(query);
  if (k == 0) throw ValidationError("search: k must be >= 1");
  std::vector<double> scores(size());
  kernels::inner_products(matrix_, dim_, query, scores);
  return collect(scores, k, kind);
}

std::vector<SearchHit> DenseIndex::search_serial(std::span<const float> query, std::size_t k,
                                                 const DocKind* kind) const {
  check_query(query);
  if (k == 0) throw ValidationError("search: k must be >= 1");
  std::vector<double> scores(size());
  kernels::inner_products_serial(matrix_, dim_, query, scores);
  return collect(scores, k, kind);
}

void DenseIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_index(out, *this);
}

std::string DenseIndex::serialize() const {
  std::ostringstream out(std::ios::binary);
  write_index(out, *this);
  return out.str();
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_index(in, path.string());
}

DenseIndex DenseIndex::deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_index(in, "index bytes");
}

DenseIndex build_index(const EmbeddingProvider& provider, std::span<const IndexedDoc> docs) {
  DenseIndex index(provider.dim());
  for (const auto& doc : docs) index.add(doc.id, doc.kind, provider.embed_doc(doc.id, doc.text));
  return index;
}

std::vector<SearchHit> search_topk(const DenseIndex& index, std::span<const float> query, std::size_t k) {
  return index.search(query, k);
}

Scope parse_scope(std::string_view s) {
  if (s == "tables-only") return Scope::TablesOnly;
  if (s == "joint") return Scope::Joint;
  throw ValidationError("unknown scope: " + std::string(s) + " (expected tables-only|joint)");
}

std::string_view to_string(Scope scope) { return scope == Scope::TablesOnly ? "tables-only" : "joint"; }

std::vector<SearchHit> retrieve_first_hop(const DenseIndex& index, std::span<const float> question_vec,
                                          std::size_t k1, Scope scope) {
  if (scope == Scope::TablesOnly) {
    const DocKind kind = DocKind::TableChunk;
    return index.search(question_vec, k1, &kind);
  }
  return index.search(question_vec, k1);
}

}  // namespace core
