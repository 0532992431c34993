#include "core/bm25.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/text.hpp"

namespace core {

Bm25Index::Bm25Index(const std::vector<std::vector<std::string>>& docs, Bm25Params params) : params_(params) {
  std::size_t total = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& t : docs[d]) ++tf[t];
    for (auto& [term, count] : tf) postings_[term].push_back({d, count});
    doc_lengths_.push_back(docs[d].size());
    total += docs[d].size();
  }
  // Documents were visited in ordinal order, so every list is already sorted.
  avgdl_ = docs.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(docs.size());
}

std::size_t Bm25Index::doc_freq(std::string_view term) const {
  auto it = postings_.find(std::string(term));
  return it == postings_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(std::string_view term) const {
  const auto n = static_cast<double>(num_docs());
  const auto df = static_cast<double>(doc_freq(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

double Bm25Index::term_weight(double idf, std::size_t tf, std::size_t dl) const {
  const double ratio = avgdl_ > 0.0 ? static_cast<double>(dl) / avgdl_ : 1.0;
  const double f = static_cast<double>(tf);
  return idf * f * (params_.k1 + 1.0) / (f + params_.k1 * (1.0 - params_.b + params_.b * ratio));
}

double Bm25Index::score(const std::vector<std::string>& query, std::size_t doc) const {
  if (doc >= num_docs()) throw ValidationError("bm25: doc ordinal out of range");
  double s = 0.0;
  for (const auto& term : query) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& list = it->second;
    auto pos = std::lower_bound(list.begin(), list.end(), doc,
                                [](const Posting& p, std::size_t d) { return p.doc < d; });
    if (pos == list.end() || pos->doc != doc) continue;
    s += term_weight(idf(term), pos->tf, doc_lengths_[doc]);
  }
  return s;
}

std::vector<Bm25Hit> Bm25Index::rank(const std::vector<std::string>& query) const {
  std::vector<double> acc(num_docs(), 0.0);
  for (const auto& term : query) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) acc[p.doc] += term_weight(w, p.tf, doc_lengths_[p.doc]);
  }
  std::vector<Bm25Hit> hits;
  for (std::size_t d = 0; d < acc.size(); ++d) {
    if (acc[d] > 0.0) hits.push_back({d, acc[d]});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Bm25Hit& a, const Bm25Hit& b) { return a.score > b.score; });
  return hits;
}

NegativeStrategy parse_negative_strategy(std::string_view s) {
  if (s == "title") return NegativeStrategy::Title;
  if (s == "title+first-sentence") return NegativeStrategy::TitleFirstSentence;
  throw ValidationError("unknown negative-mining strategy: " + std::string(s) +
                        " (expected title|title+first-sentence)");
}

NegativeMiner::NegativeMiner(const CorpusStore& store, NegativeStrategy strategy, Bm25Params params)
    : store_(store), strategy_(strategy) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(store.passages().size());
  for (const auto& p : store.passages()) {
    std::string field = p.title;
    if (strategy_ == NegativeStrategy::TitleFirstSentence) {
      field += " ";
      field += text::first_sentence(p.text);
    }
    docs.push_back(text::terms(field));
  }
  index_ = Bm25Index(docs, params);
}

std::vector<std::string> NegativeMiner::query_terms(std::string_view mention, std::string_view table_title) const {
  auto q = text::terms(mention);
  if (strategy_ == NegativeStrategy::TitleFirstSentence) {
    auto t = text::terms(table_title);
    q.insert(q.end(), t.begin(), t.end());
  }
  return q;
}

std::vector<std::string> NegativeMiner::mine(std::string_view mention, std::string_view table_title,
                                             std::string_view gold_passage_id, std::size_t n) const {
  std::vector<std::string> out;
  for (const auto& hit : index_.rank(query_terms(mention, table_title))) {
    if (out.size() == n) break;
    const auto& id = store_.passages()[hit.doc].id;
    if (id == gold_passage_id) continue;
    out.push_back(id);
  }
  return out;
}

}  // namespace core
