#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/chainer.hpp"
#include "core/corpus.hpp"
#include "core/dense_index.hpp"
#include "core/embed.hpp"
#include "core/linker.hpp"
#include "core/metrics.hpp"
#include "core/qg_scorer.hpp"
#include "core/router.hpp"

namespace core {

class LineService;

struct Question {
  std::string qid;
  std::string question;
};

// Any JSONL with "qid" and "question" fields (gold.jsonl qualifies).
std::vector<Question> read_questions(const std::filesystem::path& path);

struct ProviderConfig {
  std::string kind = "reference";  // reference | vectors-file | external
  std::size_t dim = kDefaultEmbeddingDim;
  std::filesystem::path vectors_file;
  std::string service_command;
};

struct ScorerConfig {
  std::string kind = "reference";  // reference | external
  std::string service_command;
};

// Builds providers/scorers; external ones share one service process when the
// commands match.
class Backends {
 public:
  Backends(const ProviderConfig& provider, const ScorerConfig& scorer);
  const EmbeddingProvider& provider() const { return *provider_; }
  const QgScorer& scorer() const { return *scorer_; }

 private:
  std::shared_ptr<LineService> provider_service_;
  std::shared_ptr<LineService> scorer_service_;
  std::unique_ptr<EmbeddingProvider> provider_;
  std::unique_ptr<QgScorer> scorer_;
};

// Index documents for every chunk (kind TableChunk) and/or passage.
std::vector<IndexedDoc> index_documents(const CorpusStore& store, bool chunks, bool passages);

struct ChainRecord {
  std::string qid;
  std::size_t rank = 0;  // 1-based
  double total = 0.0;
  ScoreBreakdown breakdown;
  std::string hop1_id;
  std::optional<std::string> hop2_id;
  std::string reader_text;
};

nlohmann::json to_json(const ChainRecord& r);
ChainRecord chain_record_from_json(const nlohmann::json& j);

struct QuestionResult {
  std::string qid;
  std::vector<SearchHit> hits;
  std::vector<ChainRecord> chains;
  std::optional<QuestionType> route;
  std::string error;  // non-empty when the question was aborted
};

struct PipelineInputs {
  const CorpusStore* store = nullptr;
  const EmbeddingProvider* provider = nullptr;
  const DenseIndex* first_hop_index = nullptr;
  const EvidenceGraph* graph = nullptr;  // null: no link expansion
  const QgScorer* scorer = nullptr;
  const LinearClassifier* router = nullptr;  // null: always multi-hop
};

// retrieve -> (route) -> graph lookup -> rank -> assemble -> serialize.
QuestionResult answer_question(const PipelineInputs& in, const Question& q, const ChainerParams& params,
                               ScoreCache& cache);

// Questions run in parallel; the output order and content do not depend on
// the thread count. A failing question is recorded and skipped.
std::vector<QuestionResult> run_pipeline(const PipelineInputs& in, const std::vector<Question>& questions,
                                         const ChainerParams& params, ScoreCache& cache);

void write_chains(const std::filesystem::path& path, const std::vector<QuestionResult>& results);
void write_hits(const std::filesystem::path& path, const std::vector<QuestionResult>& results);
std::vector<ChainRecord> read_chains(const std::filesystem::path& path);

// What the evaluator needs per question.
struct QuestionRun {
  std::vector<std::string> ranked_chunks;
  std::vector<std::string> reader_texts;
};

std::map<std::string, QuestionRun> runs_from_results(const std::vector<QuestionResult>& results);
// Ranked chunks are the distinct table-chunk hop-1 ids in chain order.
std::map<std::string, QuestionRun> runs_from_chains(const std::vector<ChainRecord>& chains,
                                                    const CorpusStore* store = nullptr);

// R@k over ranked chunks and AR@k over reader texts, one row per gold
// question (missing runs score 0).
MetricReport evaluate_runs(const std::string& name, const std::map<std::string, QuestionRun>& runs,
                           const std::vector<GoldAnnotation>& gold, const std::vector<std::size_t>& r_ks,
                           const std::vector<std::size_t>& ar_ks);

struct Prediction {
  std::string qid;
  std::string prediction;
};

std::vector<Prediction> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds);
MetricReport evaluate_answers(const std::string& name, const std::vector<Prediction>& preds,
                              const std::vector<GoldAnnotation>& gold);

// Baseline reader for smoke tests: the n-gram (n <= 3) found in the most of
// the top chains, ignoring question words and stopwords; ties go to the
// higher-ranked chain, then the longer n-gram.
std::string overlap_reader(const std::string& question, const std::vector<std::string>& reader_texts,
                           std::size_t top = 10);

nlohmann::json params_json(const ChainerParams& p);

struct TuneResult {
  double alpha = 0.0;
  double beta = 0.0;
  double metric = 0.0;
};

// Integer grid search over alpha x beta maximizing mean AR@k on `gold`.
// Ties keep the smaller alpha, then the smaller beta.
TuneResult tune_alpha_beta(const PipelineInputs& in, const std::vector<Question>& questions,
                           const std::vector<GoldAnnotation>& gold, ChainerParams params,
                           std::pair<int, int> alpha_range, std::pair<int, int> beta_range, std::size_t k,
                           ScoreCache& cache);

struct RouteExample {
  std::string question;
  QuestionType label = QuestionType::MultiHop;
};

// JSONL with "question" and "label" ("single-hop" | "multi-hop").
std::vector<RouteExample> read_route_examples(const std::filesystem::path& path);

LinearClassifier train_router(const EmbeddingProvider& provider, const std::vector<RouteExample>& examples,
                              const LogisticTraining& opts);

// Fraction of examples routed to their label.
double route_accuracy(const LinearClassifier& clf, const EmbeddingProvider& provider,
                      const std::vector<RouteExample>& examples);

// The demo's context-free token vectors need more room than the default for
// the linear tagger to separate mention tokens.
inline constexpr std::size_t kDemoEmbeddingDim = 256;

struct DemoOptions {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  Profile profile = Profile::OttQa;
  std::size_t dim = kDemoEmbeddingDim;
  TaggerTraining tagger;
};

struct DemoReport {
  std::vector<MetricReport> main;       // retriever-only, linker+chainer, classifier-routed
  std::vector<MetricReport> ablations;  // one per chainer mode
  LinkEval linker;
  double router_accuracy = 0.0;
  std::string text;  // printable summary
};

// End to end on a corpus directory holding passages.jsonl, tables.jsonl,
// gold.jsonl and optionally route_train.jsonl / route_dev.jsonl. Writes every artifact plus
// chains.jsonl, report.json and report.txt under out_dir.
DemoReport run_demo(const DemoOptions& opts);

}  // namespace core
