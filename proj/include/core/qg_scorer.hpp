#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace core {

class LineService;

inline constexpr std::string_view kQgInstruction = "Please write a question based on this passage.";

// doc + "\n" + instruction. Throws ValidationError if `doc` already carries
// the instruction suffix.
std::string format_prompt(std::string_view doc);

// Question-generation relevance: mean log-likelihood of the question tokens
// given a document. Higher is more relevant. Implementations are pure and
// thread-safe.
class QgScorer {
 public:
  virtual ~QgScorer() = default;
  virtual double score(std::string_view question, std::string_view doc) const = 0;
};

// Laplace-smoothed unigram model over the document's terms:
// P(w) = (count(w) + 1) / (|doc| + V), V = |vocab(doc) U vocab(question)|.
double reference_score(std::string_view question, std::string_view doc);

class ReferenceQgScorer final : public QgScorer {
 public:
  double score(std::string_view question, std::string_view doc) const override {
    return reference_score(question, doc);
  }
};

// {"op":"qg_score","question":...,"doc":<format_prompt(doc)>} -> {"score":...}
class ExternalQgScorer final : public QgScorer {
 public:
  explicit ExternalQgScorer(std::shared_ptr<LineService> service) : service_(std::move(service)) {}
  double score(std::string_view question, std::string_view doc) const override;

 private:
  std::shared_ptr<LineService> service_;
};

// Wraps another scorer and counts underlying calls.
class CountingScorer final : public QgScorer {
 public:
  explicit CountingScorer(const QgScorer& inner) : inner_(inner) {}
  double score(std::string_view question, std::string_view doc) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.score(question, doc);
  }
  std::size_t calls() const { return calls_.load(); }

 private:
  const QgScorer& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

// (question id, doc id) -> score. Insert-or-get is safe under concurrency;
// the first stored value wins and later lookups return it bit for bit.
class ScoreCache {
 public:
  std::optional<double> find(std::string_view qid, std::string_view doc_id) const;
  double insert(std::string_view qid, std::string_view doc_id, double value);
  std::size_t size() const;

 private:
  static std::string key(std::string_view qid, std::string_view doc_id);

  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, double> map_;
};

struct ScoreRequest {
  std::string doc_id;
  std::string text;
};

// One underlying call per distinct (qid, doc_id) not yet cached; misses are
// scored in parallel.
std::vector<double> batch_score(std::string_view qid, std::string_view question, std::span<const ScoreRequest> docs,
                                const QgScorer& scorer, ScoreCache& cache);
// Same contract, single-threaded.
std::vector<double> batch_score_serial(std::string_view qid, std::string_view question,
                                       std::span<const ScoreRequest> docs, const QgScorer& scorer, ScoreCache& cache);

}  // namespace core
