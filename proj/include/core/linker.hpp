#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/corpus.hpp"
#include "core/dense_index.hpp"
#include "core/embed.hpp"

namespace core {

// Two-class linear mention tagger. Row 0 scores "not a mention", row 1
// scores "mention"; weights are row-major 2 x dim.
struct LinearTagger {
  std::size_t dim = 0;
  std::vector<double> weights;

  LinearTagger() = default;
  explicit LinearTagger(std::size_t d) : dim(d), weights(2 * d, 0.0) {}

  double& at(std::size_t cls, std::size_t k) { return weights[cls * dim + k]; }
  double at(std::size_t cls, std::size_t k) const { return weights[cls * dim + k]; }
};

// P(mention) per token: softmax over the two logits W h.
std::vector<double> tag_probs(const TokenStates& states, const LinearTagger& tagger);

struct BceResult {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as LinearTagger::weights
};

// Mean token-level cross-entropy -(1/N) sum(y ln P1 + (1-y) ln P0) and its
// gradient with respect to the tagger weights. Labels must be 0 or 1.
BceResult bce_loss_and_grad(const TokenStates& states, std::span<const int> labels, const LinearTagger& tagger);

struct TaggerExample {
  TokenStates states;
  std::vector<int> labels;
};

struct TaggerTraining {
  std::size_t epochs = 200;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

// Plain SGD, one step per example, example order reshuffled each epoch from
// the "tagger" stream of `seed`.
LinearTagger train_tagger(const std::vector<TaggerExample>& examples, std::size_t dim, const TaggerTraining& opts);

void save_tagger(const LinearTagger& tagger, const std::filesystem::path& path);
LinearTagger load_tagger(const std::filesystem::path& path);

struct ContrastiveResult {
  double loss = 0.0;
  std::vector<double> grad_entity;
  std::vector<double> grad_positive;
  std::vector<std::vector<double>> grad_negatives;
};

// Negative log-softmax of sim(e, p+) against {p+} plus the negatives, with
// sim the inner product. Gradients for every input vector.
ContrastiveResult contrastive_loss_and_grad(std::span<const double> entity, std::span<const double> positive,
                                            const std::vector<std::vector<double>>& negatives);

// One (mention, positive passage) training pair with its mined hard negatives.
struct LinkPair {
  std::vector<double> entity;
  std::string positive_id;
  std::vector<std::string> hard_negative_ids;
};

struct ContrastiveBatch {
  double mean_loss = 0.0;
  // Negative passage ids used for each pair: one sampled hard negative then
  // the other pairs' positives (in-batch), skipping the pair's own positive.
  std::vector<std::vector<std::string>> negatives;
  std::vector<ContrastiveResult> per_pair;
};

using PassageLookup = std::function<std::vector<double>(const std::string&)>;

// Deterministic given `seed`. Throws when a pair has no hard negatives.
ContrastiveBatch contrastive_batch(const std::vector<LinkPair>& pairs, const PassageLookup& passage_vec,
                                   std::uint64_t seed);

struct MentionSpan {
  std::string chunk_id;
  std::size_t start = 0;  // inclusive token indices
  std::size_t end = 0;
  std::string surface;
};

inline constexpr double kDefaultMentionThreshold = 0.5;

// Maximal runs of tokens with prob > threshold, split at cell boundaries.
// Tokens outside every cell never join a span.
std::vector<MentionSpan> extract_spans(std::span<const double> probs, const std::vector<CellSpan>& cells,
                                       std::string_view chunk_text, std::string_view chunk_id,
                                       double threshold = kDefaultMentionThreshold);

struct LinkEdge {
  MentionSpan mention;
  std::string passage_id;
  double link_score = 0.0;
};

// For each span, query the passage index with the span's entity embedding
// and keep the top_m passages.
std::vector<LinkEdge> link_mentions(const TokenStates& states, const std::vector<MentionSpan>& spans,
                                    const DenseIndex& passage_index, std::size_t top_m = 1);

// chunk_id -> edges, ordered by mention start then link score desc.
using EvidenceGraph = std::map<std::string, std::vector<LinkEdge>>;

struct LinkerConfig {
  double threshold = kDefaultMentionThreshold;
  std::size_t top_m = 1;
};

// Tags, extracts and links every chunk of the corpus. Chunks are processed in
// parallel; the result does not depend on the thread count.
EvidenceGraph build_evidence_graph(const CorpusStore& store, const EmbeddingProvider& provider,
                                   const LinearTagger& tagger, const DenseIndex& passage_index,
                                   const LinkerConfig& config = {});

// Distant supervision: a token is labelled a mention when it lies in a cell
// whose normalized text equals the normalized title of some passage.
std::vector<int> title_match_labels(const TableChunk& chunk, const CorpusStore& store);

// Trains a tagger on every chunk of the corpus using title_match_labels.
LinearTagger train_tagger_on_titles(const CorpusStore& store, const EmbeddingProvider& provider,
                                    const TaggerTraining& opts);

void save_links(const EvidenceGraph& graph, const std::filesystem::path& path);
EvidenceGraph load_links(const std::filesystem::path& path);

struct LinkEval {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t correct = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

// Micro-averaged over (chunk, passage) pairs. Predictions are restricted to
// chunks that carry gold links.
LinkEval eval_links(const EvidenceGraph& predicted, const std::vector<GoldLink>& gold);

}  // namespace core
