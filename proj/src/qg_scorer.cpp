#include "core/qg_scorer.hpp"

#include <cmath>
#include <mutex>
#include <unordered_set>

#include "core/error.hpp"
#include "core/service.hpp"
#include "core/text.hpp"

namespace core {

namespace {

// Indices of first occurrences of doc ids missing from the cache.
std::vector<std::size_t> distinct_misses(std::string_view qid, std::span<const ScoreRequest> docs,
                                         const ScoreCache& cache) {
  std::vector<std::size_t> misses;
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!seen.insert(docs[i].doc_id).second) continue;
    if (!cache.find(qid, docs[i].doc_id)) misses.push_back(i);
  }
  return misses;
}

std::vector<double> gather(std::string_view qid, std::span<const ScoreRequest> docs, const ScoreCache& cache) {
  std::vector<double> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(*cache.find(qid, d.doc_id));
  return out;
}

}  // namespace

std::string format_prompt(std::string_view doc) {
  const std::string suffix = "\n" + std::string(kQgInstruction);
  if (doc.size() >= suffix.size() && doc.substr(doc.size() - suffix.size()) == suffix) {
    throw ValidationError("format_prompt: document is already a formatted prompt");
  }
  return std::string(doc) + suffix;
}

double reference_score(std::string_view question, std::string_view doc) {
  const auto q = text::terms(question);
  if (q.empty()) throw ValidationError("reference_score: empty question");
  const auto d = text::terms(doc);
  std::unordered_map<std::string_view, std::size_t> counts;
  for (const auto& t : d) ++counts[t];
  std::unordered_set<std::string_view> vocab;
  for (const auto& t : d) vocab.insert(t);
  for (const auto& t : q) vocab.insert(t);
  const double denom = static_cast<double>(d.size() + vocab.size());
  double sum = 0.0;
  for (const auto& t : q) {
    auto it = counts.find(t);
    const double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    sum += std::log((c + 1.0) / denom);
  }
  return sum / static_cast<double>(q.size());
}

double ExternalQgScorer::score(std::string_view question, std::string_view doc) const {
  auto reply = service_->request(
      {{"op", "qg_score"}, {"question", std::string(question)}, {"doc", format_prompt(doc)}});
  double s = reply.at("score").get<double>();
  if (!std::isfinite(s)) throw ValidationError("qg_score: service returned a non-finite score");
  return s;
}

std::string ScoreCache::key(std::string_view qid, std::string_view doc_id) {
  std::string k;
  k.reserve(qid.size() + doc_id.size() + 1);
  k += qid;
  k += '\x1f';
  k += doc_id;
  return k;
}

std::optional<double> ScoreCache::find(std::string_view qid, std::string_view doc_id) const {
  std::shared_lock lock(mu_);
  auto it = map_.find(key(qid, doc_id));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

double ScoreCache::insert(std::string_view qid, std::string_view doc_id, double value) {
  std::unique_lock lock(mu_);
  return map_.try_emplace(key(qid, doc_id), value).first->second;
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return map_.size();
}

std::vector<double> batch_score(std::string_view qid, std::string_view question, std::span<const ScoreRequest> docs,
                                const QgScorer& scorer, ScoreCache& cache) {
  const auto misses = distinct_misses(qid, docs, cache);
  const auto n = static_cast<std::ptrdiff_t>(misses.size());
  std::vector<std::string> errors(misses.size());
  std::vector<char> io_failure(misses.size(), 0);
#pragma omp parallel for schedule(dynamic) if (n > 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& doc = docs[misses[static_cast<std::size_t>(i)]];
    try {
      cache.insert(qid, doc.doc_id, scorer.score(question, doc.text));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = doc.doc_id + ": " + e.what();
      io_failure[static_cast<std::size_t>(i)] = dynamic_cast<const IoError*>(&e) != nullptr;
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i].empty()) continue;
    if (io_failure[i]) throw IoError("qg scoring failed for " + errors[i]);
    throw ValidationError("qg scoring failed for " + errors[i]);
  }
  return gather(qid, docs, cache);
}

std::vector<double> batch_score_serial(std::string_view qid, std::string_view question,
                                       std::span<const ScoreRequest> docs, const QgScorer& scorer,
                                       ScoreCache& cache) {
  for (auto i : distinct_misses(qid, docs, cache)) {
    try {
      cache.insert(qid, docs[i].doc_id, scorer.score(question, docs[i].text));
    } catch (const IoError& e) {
      throw IoError("qg scoring failed for " + docs[i].doc_id + ": " + e.what());
    } catch (const std::exception& e) {
      throw ValidationError("qg scoring failed for " + docs[i].doc_id + ": " + e.what());
    }
  }
  return gather(qid, docs, cache);
}

}  // namespace core
