#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/corpus.hpp"
#include "core/dense_index.hpp"
#include "core/linker.hpp"
#include "core/qg_scorer.hpp"

namespace core {

enum class Ablation {
  Full,
  NoQgsHop1,      // drop the hop-1 question-generation term
  NoQgsAll,       // no question-generation terms; retrieval order
  NoChainer,      // hop-1 docs and linked passages emitted independently
  RetrieverOnly,  // first-hop hits only, no link expansion
};

enum class Profile { OttQa, Nq };

// LogProb: s_r = ln softmax(sims)[i], higher is better. PaperLiteral: the
// negated value, kept for auditing the printed sign.
enum class SrSign { LogProb, PaperLiteral };

enum class SingletonPassageWeight { Alpha, Beta };

Ablation parse_ablation(std::string_view s);
std::string_view to_string(Ablation a);
Profile parse_profile(std::string_view s);
std::string_view to_string(Profile p);
SrSign parse_sr_sign(std::string_view s);
std::string_view to_string(SrSign s);
SingletonPassageWeight parse_singleton_passage_weight(std::string_view s);
std::string_view to_string(SingletonPassageWeight w);

inline constexpr std::size_t kDefaultChainBudget = 50;
inline constexpr std::size_t kDefaultMaxReaderTokens = 500;

struct ChainerParams {
  Profile profile = Profile::OttQa;
  double alpha = 16.0;
  double beta = 9.0;
  std::size_t K = kDefaultChainBudget;
  std::size_t k1 = kDefaultFirstHopK;
  Scope scope = Scope::TablesOnly;
  Ablation ablation = Ablation::Full;
  SrSign sr_sign = SrSign::LogProb;
  // Singletons use singleton_scale * alpha (tables) and singleton_scale *
  // alpha-or-beta (passages).
  double singleton_scale = 2.0;
  SingletonPassageWeight singleton_passage_weight = SingletonPassageWeight::Alpha;
  std::size_t max_len = kDefaultMaxReaderTokens;

  // ottqa: alpha 16, beta 9, tables-only. nq: alpha 10, beta 12, joint.
  // Both: K 50, k1 100.
  static ChainerParams for_profile(Profile profile);
  void validate() const;
};

// Retriever term over the first-hop set `sims`.
double s_r(std::span<const double> sims, std::size_t idx, SrSign sign = SrSign::LogProb);

// Coefficients applied to the hop-1 and hop-2 question-generation scores.
struct Coefficients {
  double hop1 = 0.0;
  double hop2 = 0.0;
};

Coefficients chain_coefficients(const ChainerParams& params);
Coefficients singleton_coefficients(const ChainerParams& params, DocKind kind);

// s_r + a*s_t + b*s_p under the ablation's coefficients.
double chain_score(double s_r, double s_t, double s_p, const ChainerParams& params);
// s_r + c*s_doc with the singleton coefficient for `kind`.
double singleton_score(double s_r, double s_doc, const ChainerParams& params, DocKind kind);

struct ScoreBreakdown {
  double s_r = 0.0;
  double s_t0_hop1 = 0.0;
  double s_t0_hop2 = 0.0;
  double hop1_coef = 0.0;
  double hop2_coef = 0.0;

  double total() const { return s_r + hop1_coef * s_t0_hop1 + hop2_coef * s_t0_hop2; }
};

struct CandidateChain {
  std::string hop1_id;
  DocKind hop1_kind = DocKind::TableChunk;
  int hop1_rank = 0;
  std::optional<LinkEdge> hop2;
  ScoreBreakdown breakdown;
  double total = 0.0;

  std::string_view hop2_id() const { return hop2 ? std::string_view(hop2->passage_id) : std::string_view(); }
};

// Text handed to the scorer and the reader for a first-hop document.
std::string hop1_text(const CorpusStore& store, std::string_view id, DocKind kind);

// Orders chains by total desc, then (hop1 id, hop2 id) asc; singletons sort
// before chains of the same hop-1 doc on ties.
bool chain_before(const CandidateChain& a, const CandidateChain& b);

// One candidate per (hop-1 doc, distinct linked passage) plus one singleton
// per hop-1 doc without links. `graph` may be null (no expansion). Linker
// scores never enter the total.
std::vector<CandidateChain> rank_chains(std::string_view qid, std::string_view question,
                                        const std::vector<SearchHit>& first_hop, const EvidenceGraph* graph,
                                        const CorpusStore& store, const QgScorer& scorer, ScoreCache& cache,
                                        const ChainerParams& params);

struct ChainEntry {
  std::string hop1_id;
  std::optional<std::string> hop2_id;
  std::string text;
  double total = 0.0;
  ScoreBreakdown breakdown;
};

// "<table title> || <header> || <row of the mention>".
std::string mention_row_text(const CorpusStore& store, const LinkEdge& edge);

// Walks the sorted chains, emitting each hop-1 doc once and each linked
// passage once (prefixed with its table's header and mention row, except under
// NoChainer), until K entries.
std::vector<ChainEntry> assemble_topk(const std::vector<CandidateChain>& sorted, std::size_t K,
                                      const CorpusStore& store, Ablation ablation = Ablation::Full);

struct ReaderChain {
  std::string text;
  std::size_t token_count = 0;
  std::string hop1_id;
  std::optional<std::string> hop2_id;
};

// "question: <q> || <entry text>", cut after max_len whitespace tokens.
ReaderChain serialize_chain(std::string_view question, const ChainEntry& entry,
                            std::size_t max_len = kDefaultMaxReaderTokens);

}  // namespace core
