#include "core/embed.hpp"

#include <cmath>
#include <fstream>

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/service.hpp"
#include "core/text.hpp"

namespace core {

namespace {

constexpr std::uint32_t kVectorFileVersion = 1;

std::vector<double> token_vector_f64(std::string_view key, std::size_t dim) {
  const std::uint64_t h = text::fnv1a64(text::to_lower(key));
  std::vector<double> v(dim);
  double norm2 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    // Top 53 bits so u stays in [0, 1) after conversion to double.
    double u = static_cast<double>(text::splitmix64(h ^ k) >> 11) * 0x1.0p-53;
    v[k] = 2.0 * u - 1.0;
    norm2 += v[k] * v[k];
  }
  const double norm = std::sqrt(norm2);
  for (auto& x : v) x /= norm;
  return v;
}

std::string embedding_key(std::string_view token) {
  auto key = text::term_key(token);
  return key.empty() ? text::to_lower(token) : key;
}

Vector to_f32(const std::vector<double>& v) {
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

void check_finite(const Vector& v, std::string_view what) {
  for (float x : v) {
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": non-finite component");
  }
}

}  // namespace

Vector reference_token_vector(std::string_view token, std::size_t dim) {
  if (token.empty()) throw ValidationError("reference_token_vector: empty token");
  if (dim == 0) throw ValidationError("reference_token_vector: dim must be >= 1");
  return to_f32(token_vector_f64(token, dim));
}

Vector entity_embedding(const TokenStates& states, std::size_t i, std::size_t j) {
  if (i > j || j >= states.size()) {
    throw ValidationError("entity_embedding: span [" + std::to_string(i) + ", " + std::to_string(j) +
                          "] out of range for " + std::to_string(states.size()) + " tokens");
  }
  const auto& a = states[i];
  const auto& b = states[j];
  if (a.size() != b.size()) throw ValidationError("entity_embedding: ragged token states");
  Vector out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = static_cast<float>((static_cast<double>(a[k]) + static_cast<double>(b[k])) / 2.0);
  }
  return out;
}

ReferenceProvider::ReferenceProvider(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ValidationError("embedding dim must be >= 1");
}

Vector ReferenceProvider::embed_doc(std::string_view, std::string_view text) const {
  auto tokens = text::tokenize(text);
  if (tokens.empty()) throw ValidationError("embed: empty text");
  std::vector<double> mean(dim_, 0.0);
  for (auto tok : tokens) {
    auto v = token_vector_f64(embedding_key(tok), dim_);
    for (std::size_t k = 0; k < dim_; ++k) mean[k] += v[k];
  }
  double norm2 = 0.0;
  for (auto& x : mean) {
    x /= static_cast<double>(tokens.size());
    norm2 += x * x;
  }
  // Opposite token vectors can cancel exactly; leave the zero vector as is.
  if (norm2 > 0.0) {
    const double norm = std::sqrt(norm2);
    for (auto& x : mean) x /= norm;
  }
  return to_f32(mean);
}

Vector ReferenceProvider::embed_question(std::string_view id, std::string_view text) const {
  return embed_doc(id, text);
}

TokenStates ReferenceProvider::token_states(std::string_view text) const {
  TokenStates states;
  for (auto tok : text::tokenize(text)) states.push_back(to_f32(token_vector_f64(embedding_key(tok), dim_)));
  return states;
}

VectorFileProvider::VectorFileProvider(const std::filesystem::path& path) {
  for (auto& rec : read_vector_file(path, &dim_)) vectors_.emplace(std::move(rec.id), std::move(rec.values));
}

VectorFileProvider::VectorFileProvider(std::size_t dim, std::unordered_map<std::string, Vector> vectors)
    : dim_(dim), vectors_(std::move(vectors)) {
  for (const auto& [id, v] : vectors_) {
    if (v.size() != dim_) throw ValidationError("vector " + id + ": dim mismatch");
  }
}

const Vector& VectorFileProvider::lookup(std::string_view id) const {
  auto it = vectors_.find(std::string(id));
  if (it == vectors_.end()) throw ValidationError("no precomputed vector for id: " + std::string(id));
  return it->second;
}

Vector VectorFileProvider::embed_question(std::string_view id, std::string_view) const { return lookup(id); }
Vector VectorFileProvider::embed_doc(std::string_view id, std::string_view) const { return lookup(id); }

TokenStates VectorFileProvider::token_states(std::string_view) const {
  throw ValidationError("vectors-file provider has no token states; use the reference or external provider");
}

ExternalProvider::ExternalProvider(std::shared_ptr<LineService> service, std::size_t dim)
    : service_(std::move(service)), dim_(dim) {}

Vector ExternalProvider::fetch(const char* op, std::string_view text) const {
  auto reply = service_->request({{"op", op}, {"text", std::string(text)}});
  auto v = reply.at("values").get<Vector>();
  if (v.size() != dim_) throw ValidationError(std::string(op) + ": service returned wrong dim");
  check_finite(v, op);
  return v;
}

Vector ExternalProvider::embed_doc(std::string_view, std::string_view text) const { return fetch("embed_doc", text); }

Vector ExternalProvider::embed_question(std::string_view, std::string_view text) const {
  return fetch("embed_question", text);
}

TokenStates ExternalProvider::token_states(std::string_view text) const {
  auto reply = service_->request({{"op", "token_states"}, {"text", std::string(text)}});
  auto states = reply.at("states").get<TokenStates>();
  if (states.size() != text::count_tokens(text)) {
    throw ValidationError("token_states: service returned wrong token count");
  }
  for (const auto& s : states) {
    if (s.size() != dim_) throw ValidationError("token_states: service returned wrong dim");
    check_finite(s, "token_states");
  }
  return states;
}

void write_vector_file(const std::filesystem::path& path, std::size_t dim, const std::vector<NamedVector>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  binio::write_magic(out, "CVEC");
  binio::write_u32(out, kVectorFileVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(dim));
  binio::write_u64(out, records.size());
  for (const auto& rec : records) {
    if (rec.values.size() != dim) throw ValidationError("vector " + rec.id + ": dim mismatch");
    binio::write_short_string(out, rec.id);
    for (float x : rec.values) binio::write_f32(out, x);
  }
}

std::vector<NamedVector> read_vector_file(const std::filesystem::path& path, std::size_t* dim_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  binio::expect_magic(in, "CVEC", path.string());
  auto version = binio::read_u32(in);
  if (version != kVectorFileVersion) throw ValidationError(path.string() + ": unsupported CVEC version");
  auto dim = binio::read_u32(in);
  auto count = binio::read_u64(in);
  std::vector<NamedVector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedVector rec;
    rec.id = binio::read_short_string(in);
    rec.values.resize(dim);
    for (auto& x : rec.values) x = binio::read_f32(in);
    out.push_back(std::move(rec));
  }
  if (dim_out) *dim_out = dim;
  return out;
}

}  // namespace core
