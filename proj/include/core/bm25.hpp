#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/corpus.hpp"

namespace core {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

struct Posting {
  std::size_t doc = 0;
  std::size_t tf = 0;
};

struct Bm25Hit {
  std::size_t doc = 0;
  double score = 0.0;
};

// Okapi BM25 with the Lucene idf, ln((N - df + 0.5) / (df + 0.5) + 1), so
// every term contributes a non-negative amount.
class Bm25Index {
 public:
  Bm25Index() = default;
  // One term list per document, in ordinal order.
  explicit Bm25Index(const std::vector<std::vector<std::string>>& docs, Bm25Params params = {});

  std::size_t num_docs() const { return doc_lengths_.size(); }
  double avgdl() const { return avgdl_; }
  const Bm25Params& params() const { return params_; }
  std::size_t doc_freq(std::string_view term) const;
  double idf(std::string_view term) const;

  double score(const std::vector<std::string>& query, std::size_t doc) const;
  // Documents with a positive score, by score desc then ordinal asc.
  std::vector<Bm25Hit> rank(const std::vector<std::string>& query) const;

 private:
  double term_weight(double idf, std::size_t tf, std::size_t dl) const;

  Bm25Params params_;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::size_t> doc_lengths_;
  double avgdl_ = 0.0;
};

enum class NegativeStrategy { Title, TitleFirstSentence };

NegativeStrategy parse_negative_strategy(std::string_view s);

// Hard-negative mining over the passage corpus. Strategy Title queries with
// the mention against passage titles; TitleFirstSentence queries with the
// mention plus the table title against title + first sentence.
class NegativeMiner {
 public:
  NegativeMiner(const CorpusStore& store, NegativeStrategy strategy, Bm25Params params = {});

  std::vector<std::string> query_terms(std::string_view mention, std::string_view table_title) const;
  // Top-n passage ids by BM25, excluding the gold passage.
  std::vector<std::string> mine(std::string_view mention, std::string_view table_title,
                                std::string_view gold_passage_id, std::size_t n) const;
  const Bm25Index& index() const { return index_; }

 private:
  const CorpusStore& store_;
  NegativeStrategy strategy_;
  Bm25Index index_;
};

}  // namespace core
