#include "core/chainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "core/error.hpp"
#include "core/text.hpp"

namespace core {

Ablation parse_ablation(std::string_view s) {
  if (s == "full") return Ablation::Full;
  if (s == "no-qgs-hop1") return Ablation::NoQgsHop1;
  if (s == "no-qgs-all") return Ablation::NoQgsAll;
  if (s == "no-chainer") return Ablation::NoChainer;
  if (s == "retriever-only") return Ablation::RetrieverOnly;
  throw ValidationError("unknown ablation: " + std::string(s) +
                        " (expected full|no-qgs-hop1|no-qgs-all|no-chainer|retriever-only)");
}

std::string_view to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoQgsHop1: return "no-qgs-hop1";
    case Ablation::NoQgsAll: return "no-qgs-all";
    case Ablation::NoChainer: return "no-chainer";
    case Ablation::RetrieverOnly: return "retriever-only";
  }
  return "full";
}

Profile parse_profile(std::string_view s) {
  if (s == "ottqa") return Profile::OttQa;
  if (s == "nq") return Profile::Nq;
  throw ValidationError("unknown profile: " + std::string(s) + " (expected ottqa|nq)");
}

std::string_view to_string(Profile p) { return p == Profile::OttQa ? "ottqa" : "nq"; }

SrSign parse_sr_sign(std::string_view s) {
  if (s == "log-prob") return SrSign::LogProb;
  if (s == "paper-literal") return SrSign::PaperLiteral;
  throw ValidationError("unknown sr sign: " + std::string(s) + " (expected log-prob|paper-literal)");
}

std::string_view to_string(SrSign s) { return s == SrSign::LogProb ? "log-prob" : "paper-literal"; }

SingletonPassageWeight parse_singleton_passage_weight(std::string_view s) {
  if (s == "alpha") return SingletonPassageWeight::Alpha;
  if (s == "beta") return SingletonPassageWeight::Beta;
  throw ValidationError("unknown singleton passage weight: " + std::string(s) + " (expected alpha|beta)");
}

std::string_view to_string(SingletonPassageWeight w) {
  return w == SingletonPassageWeight::Alpha ? "alpha" : "beta";
}

ChainerParams ChainerParams::for_profile(Profile profile) {
  ChainerParams p;
  p.profile = profile;
  if (profile == Profile::Nq) {
    p.alpha = 10.0;
    p.beta = 12.0;
    p.scope = Scope::Joint;
  }
  return p;
}

void ChainerParams::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw ValidationError("alpha and beta must be > 0");
  if (K < 1) throw ValidationError("K must be >= 1");
  if (k1 < 1) throw ValidationError("k1 must be >= 1");
  if (max_len < 1) throw ValidationError("max_len must be >= 1");
  if (!std::isfinite(singleton_scale)) throw ValidationError("singleton scale must be finite");
}

double s_r(std::span<const double> sims, std::size_t idx, SrSign sign) {
  if (sims.empty()) throw ValidationError("s_r: empty first-hop set");
  if (idx >= sims.size()) throw ValidationError("s_r: index out of range");
  const double m = *std::max_element(sims.begin(), sims.end());
  double z = 0.0;
  for (double s : sims) z += std::exp(s - m);
  const double log_prob = sims[idx] - m - std::log(z);
  return sign == SrSign::LogProb ? log_prob : -log_prob;
}

Coefficients chain_coefficients(const ChainerParams& params) {
  switch (params.ablation) {
    case Ablation::Full: return {params.alpha, params.beta};
    case Ablation::NoQgsHop1: return {0.0, params.beta};
    default: return {0.0, 0.0};
  }
}

Coefficients singleton_coefficients(const ChainerParams& params, DocKind kind) {
  if (params.ablation != Ablation::Full) return {0.0, 0.0};
  double base = params.alpha;
  if (kind == DocKind::Passage && params.singleton_passage_weight == SingletonPassageWeight::Beta) {
    base = params.beta;
  }
  return {params.singleton_scale * base, 0.0};
}

double chain_score(double s_r, double s_t, double s_p, const ChainerParams& params) {
  auto c = chain_coefficients(params);
  return s_r + c.hop1 * s_t + c.hop2 * s_p;
}

double singleton_score(double s_r, double s_doc, const ChainerParams& params, DocKind kind) {
  return s_r + singleton_coefficients(params, kind).hop1 * s_doc;
}

std::string hop1_text(const CorpusStore& store, std::string_view id, DocKind kind) {
  if (kind == DocKind::TableChunk) return store.chunk(id).text;
  return passage_text(store.passage(id));
}

bool chain_before(const CandidateChain& a, const CandidateChain& b) {
  if (a.total != b.total) return a.total > b.total;
  if (a.hop1_id != b.hop1_id) return a.hop1_id < b.hop1_id;
  return a.hop2_id() < b.hop2_id();
}

std::vector<CandidateChain> rank_chains(std::string_view qid, std::string_view question,
                                        const std::vector<SearchHit>& first_hop, const EvidenceGraph* graph,
                                        const CorpusStore& store, const QgScorer& scorer, ScoreCache& cache,
                                        const ChainerParams& params) {
  std::vector<double> sims;
  sims.reserve(first_hop.size());
  for (const auto& h : first_hop) sims.push_back(h.sim);

  std::vector<CandidateChain> out;
  for (std::size_t i = 0; i < first_hop.size(); ++i) {
    const auto& hit = first_hop[i];
    const double sr = s_r(sims, i, params.sr_sign);
    const std::vector<LinkEdge>* edges = nullptr;
    if (graph && params.ablation != Ablation::RetrieverOnly && hit.kind == DocKind::TableChunk) {
      auto it = graph->find(hit.doc_id);
      if (it != graph->end() && !it->second.empty()) edges = &it->second;
    }
    if (!edges) {
      CandidateChain c;
      c.hop1_id = hit.doc_id;
      c.hop1_kind = hit.kind;
      c.hop1_rank = hit.rank;
      c.breakdown.s_r = sr;
      c.breakdown.hop1_coef = singleton_coefficients(params, hit.kind).hop1;
      out.push_back(std::move(c));
      continue;
    }
    const auto coefs = chain_coefficients(params);
    std::unordered_set<std::string_view> seen;
    for (const auto& e : *edges) {
      if (!seen.insert(e.passage_id).second) continue;
      if (!store.find_passage(e.passage_id)) {
        throw ValidationError("link from " + hit.doc_id + " references unknown passage " + e.passage_id);
      }
      CandidateChain c;
      c.hop1_id = hit.doc_id;
      c.hop1_kind = hit.kind;
      c.hop1_rank = hit.rank;
      c.hop2 = e;
      c.breakdown.s_r = sr;
      c.breakdown.hop1_coef = coefs.hop1;
      c.breakdown.hop2_coef = coefs.hop2;
      out.push_back(std::move(c));
    }
  }

  // Score only the documents whose coefficient is non-zero; each distinct
  // (question, doc) goes to the scorer once.
  std::vector<ScoreRequest> requests;
  std::unordered_set<std::string> requested;
  auto want = [&](const std::string& id, DocKind kind) {
    if (requested.insert(id).second) requests.push_back({id, hop1_text(store, id, kind)});
  };
  for (const auto& c : out) {
    if (c.breakdown.hop1_coef != 0.0) want(c.hop1_id, c.hop1_kind);
    if (c.hop2 && c.breakdown.hop2_coef != 0.0) want(c.hop2->passage_id, DocKind::Passage);
  }
  std::vector<double> scores;
  try {
    scores = batch_score(qid, question, requests, scorer, cache);
  } catch (const IoError& e) {
    throw IoError("question " + std::string(qid) + ": " + e.what());
  } catch (const std::exception& e) {
    throw ValidationError("question " + std::string(qid) + ": " + e.what());
  }
  std::unordered_map<std::string_view, double> by_id;
  for (std::size_t i = 0; i < requests.size(); ++i) by_id.emplace(requests[i].doc_id, scores[i]);

  for (auto& c : out) {
    if (c.breakdown.hop1_coef != 0.0) c.breakdown.s_t0_hop1 = by_id.at(c.hop1_id);
    if (c.hop2 && c.breakdown.hop2_coef != 0.0) c.breakdown.s_t0_hop2 = by_id.at(c.hop2->passage_id);
    c.total = c.breakdown.total();
  }
  std::sort(out.begin(), out.end(), chain_before);
  return out;
}

std::string mention_row_text(const CorpusStore& store, const LinkEdge& edge) {
  const auto& chunk = store.chunk(edge.mention.chunk_id);
  const auto& table = store.table(chunk.table_id);
  const auto* cell = cell_at_token(chunk.cell_map, edge.mention.start);
  Table view;
  view.id = table.id;
  view.title = table.title;
  view.header = table.header;
  if (cell && cell->row != kHeaderRow) view.rows.push_back(table.rows[static_cast<std::size_t>(cell->row)]);
  return flatten_table(view).text;
}

std::vector<ChainEntry> assemble_topk(const std::vector<CandidateChain>& sorted, std::size_t K,
                                      const CorpusStore& store, Ablation ablation) {
  std::vector<ChainEntry> out;
  std::set<std::string> seen_hop1;
  std::set<std::string> seen_hop2;
  for (const auto& c : sorted) {
    if (out.size() >= K) break;
    if (seen_hop1.insert(c.hop1_id).second) {
      out.push_back({c.hop1_id, std::nullopt, hop1_text(store, c.hop1_id, c.hop1_kind), c.total, c.breakdown});
      if (out.size() >= K) break;
    }
    if (!c.hop2 || ablation == Ablation::RetrieverOnly) continue;
    if (!seen_hop2.insert(c.hop2->passage_id).second) continue;
    std::string text = passage_text(store.passage(c.hop2->passage_id));
    if (ablation != Ablation::NoChainer) {
      text = mention_row_text(store, *c.hop2) + std::string(kSegmentSeparator) + text;
    }
    out.push_back({c.hop1_id, c.hop2->passage_id, std::move(text), c.total, c.breakdown});
  }
  return out;
}

ReaderChain serialize_chain(std::string_view question, const ChainEntry& entry, std::size_t max_len) {
  std::string full = "question: ";
  full += question;
  full += kSegmentSeparator;
  full += entry.text;
  auto spans = text::token_spans(full);
  ReaderChain out;
  out.hop1_id = entry.hop1_id;
  out.hop2_id = entry.hop2_id;
  if (spans.size() <= max_len) {
    out.text = std::move(full);
    out.token_count = spans.size();
  } else {
    out.text = full.substr(0, spans[max_len - 1].end);
    out.token_count = max_len;
  }
  return out;
}

}  // namespace core
