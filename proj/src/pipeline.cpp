#include "core/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "core/error.hpp"
#include "core/service.hpp"
#include "core/text.hpp"

namespace core {

using nlohmann::json;

namespace {

template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

json breakdown_json(const ScoreBreakdown& b) {
  return {{"s_r", b.s_r},
          {"s_t0_hop1", b.s_t0_hop1},
          {"s_t0_hop2", b.s_t0_hop2},
          {"hop1_coef", b.hop1_coef},
          {"hop2_coef", b.hop2_coef}};
}

// The entry part of a serialized chain, without the "question: q || " prefix.
std::string_view entry_part(std::string_view reader_text) {
  auto pos = reader_text.find(kSegmentSeparator);
  return pos == std::string_view::npos ? reader_text : reader_text.substr(pos + kSegmentSeparator.size());
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",    "an",   "the",  "of",   "in",   "on",   "at",   "to",    "for",  "and",  "or",   "is",
      "was",  "are",  "were", "be",   "by",   "with", "as",   "from",  "that", "this", "it",   "its",
      "his",  "her",  "he",   "she",  "they", "their", "who", "what",  "which", "when", "where", "how",
      "did",  "does", "do",   "has",  "have", "had",  "not",  "after", "also", "born"};
  return words;
}

}  // namespace

std::vector<Question> read_questions(const std::filesystem::path& path) {
  std::vector<Question> out;
  for_each_jsonl(path, [&](const json& rec) {
    out.push_back({rec.at("qid").get<std::string>(), rec.at("question").get<std::string>()});
  });
  return out;
}

Backends::Backends(const ProviderConfig& provider, const ScorerConfig& scorer) {
  if (provider.kind == "reference") {
    provider_ = std::make_unique<ReferenceProvider>(provider.dim);
  } else if (provider.kind == "vectors-file") {
    provider_ = std::make_unique<VectorFileProvider>(provider.vectors_file);
  } else if (provider.kind == "external") {
    if (provider.service_command.empty()) throw ValidationError("external provider needs a service command");
    provider_service_ = std::make_shared<LineService>(provider.service_command);
    provider_ = std::make_unique<ExternalProvider>(provider_service_, provider.dim);
  } else {
    throw ValidationError("unknown provider: " + provider.kind + " (expected reference|vectors-file|external)");
  }
  if (scorer.kind == "reference") {
    scorer_ = std::make_unique<ReferenceQgScorer>();
  } else if (scorer.kind == "external") {
    if (scorer.service_command.empty()) throw ValidationError("external scorer needs a service command");
    scorer_service_ = scorer.service_command == provider.service_command && provider_service_
                          ? provider_service_
                          : std::make_shared<LineService>(scorer.service_command);
    scorer_ = std::make_unique<ExternalQgScorer>(scorer_service_);
  } else {
    throw ValidationError("unknown scorer: " + scorer.kind + " (expected reference|external)");
  }
}

std::vector<IndexedDoc> index_documents(const CorpusStore& store, bool chunks, bool passages) {
  std::vector<IndexedDoc> docs;
  if (chunks) {
    for (const auto& c : store.chunks()) docs.push_back({c.chunk_id, c.text, DocKind::TableChunk});
  }
  if (passages) {
    for (const auto& p : store.passages()) docs.push_back({p.id, passage_text(p), DocKind::Passage});
  }
  return docs;
}

json to_json(const ChainRecord& r) {
  return {{"qid", r.qid},
          {"rank", r.rank},
          {"total", r.total},
          {"breakdown", breakdown_json(r.breakdown)},
          {"hop1_id", r.hop1_id},
          {"hop2_id", r.hop2_id ? json(*r.hop2_id) : json(nullptr)},
          {"reader_text", r.reader_text}};
}

ChainRecord chain_record_from_json(const json& j) {
  ChainRecord r;
  r.qid = j.at("qid").get<std::string>();
  r.rank = j.at("rank").get<std::size_t>();
  r.total = j.at("total").get<double>();
  const auto& b = j.at("breakdown");
  r.breakdown.s_r = b.value("s_r", 0.0);
  r.breakdown.s_t0_hop1 = b.value("s_t0_hop1", 0.0);
  r.breakdown.s_t0_hop2 = b.value("s_t0_hop2", 0.0);
  r.breakdown.hop1_coef = b.value("hop1_coef", 0.0);
  r.breakdown.hop2_coef = b.value("hop2_coef", 0.0);
  r.hop1_id = j.at("hop1_id").get<std::string>();
  if (j.contains("hop2_id") && !j["hop2_id"].is_null()) r.hop2_id = j["hop2_id"].get<std::string>();
  r.reader_text = j.at("reader_text").get<std::string>();
  return r;
}

QuestionResult answer_question(const PipelineInputs& in, const Question& q, const ChainerParams& params,
                               ScoreCache& cache) {
  QuestionResult res;
  res.qid = q.qid;
  const auto qvec = in.provider->embed_question(q.qid, q.question);
  res.hits = retrieve_first_hop(*in.first_hop_index, qvec, params.k1, params.scope);
  const EvidenceGraph* graph = in.graph;
  if (in.router) {
    res.route = route(*in.router, qvec);
    if (*res.route == QuestionType::SingleHop) graph = nullptr;
  }
  if (res.hits.empty()) return res;
  auto ranked = rank_chains(q.qid, q.question, res.hits, graph, *in.store, *in.scorer, cache, params);
  auto entries = assemble_topk(ranked, params.K, *in.store, params.ablation);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto reader = serialize_chain(q.question, entries[i], params.max_len);
    res.chains.push_back({q.qid, i + 1, entries[i].total, entries[i].breakdown, entries[i].hop1_id,
                          entries[i].hop2_id, std::move(reader.text)});
  }
  return res;
}

std::vector<QuestionResult> run_pipeline(const PipelineInputs& in, const std::vector<Question>& questions,
                                         const ChainerParams& params, ScoreCache& cache) {
  if (!in.store || !in.provider || !in.first_hop_index || !in.scorer) {
    throw ValidationError("pipeline: missing corpus, provider, index or scorer");
  }
  params.validate();
  std::vector<QuestionResult> results(questions.size());
  const auto n = static_cast<std::ptrdiff_t>(questions.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& q = questions[static_cast<std::size_t>(i)];
    try {
      results[static_cast<std::size_t>(i)] = answer_question(in, q, params, cache);
    } catch (const std::exception& e) {
      results[static_cast<std::size_t>(i)].qid = q.qid;
      results[static_cast<std::size_t>(i)].error = e.what();
    }
  }
  for (const auto& r : results) {
    if (!r.error.empty()) std::cerr << "question " << r.qid << " aborted: " << r.error << '\n';
  }
  return results;
}

void write_chains(const std::filesystem::path& path, const std::vector<QuestionResult>& results) {
  auto out = open_output(path);
  for (const auto& r : results) {
    for (const auto& c : r.chains) out << to_json(c).dump() << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_hits(const std::filesystem::path& path, const std::vector<QuestionResult>& results) {
  auto out = open_output(path);
  for (const auto& r : results) {
    for (const auto& h : r.hits) {
      out << json{{"qid", r.qid}, {"rank", h.rank + 1}, {"doc_id", h.doc_id}, {"sim", h.sim},
                  {"kind", to_string(h.kind)}}
                 .dump()
          << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ChainRecord> read_chains(const std::filesystem::path& path) {
  std::vector<ChainRecord> out;
  for_each_jsonl(path, [&](const json& rec) { out.push_back(chain_record_from_json(rec)); });
  return out;
}

std::map<std::string, QuestionRun> runs_from_results(const std::vector<QuestionResult>& results) {
  std::map<std::string, QuestionRun> runs;
  for (const auto& r : results) {
    auto& run = runs[r.qid];
    for (const auto& h : r.hits) {
      if (h.kind == DocKind::TableChunk) run.ranked_chunks.push_back(h.doc_id);
    }
    for (const auto& c : r.chains) run.reader_texts.push_back(c.reader_text);
  }
  return runs;
}

std::map<std::string, QuestionRun> runs_from_chains(const std::vector<ChainRecord>& chains,
                                                    const CorpusStore* store) {
  std::map<std::string, std::vector<const ChainRecord*>> grouped;
  for (const auto& c : chains) grouped[c.qid].push_back(&c);
  std::map<std::string, QuestionRun> runs;
  for (auto& [qid, recs] : grouped) {
    std::stable_sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
    auto& run = runs[qid];
    std::set<std::string> seen;
    for (const auto* c : recs) {
      run.reader_texts.push_back(c->reader_text);
      const bool is_chunk = store ? store->find_chunk(c->hop1_id) != nullptr
                                  : c->hop1_id.find('#') != std::string::npos;
      if (is_chunk && seen.insert(c->hop1_id).second) run.ranked_chunks.push_back(c->hop1_id);
    }
  }
  return runs;
}

MetricReport evaluate_runs(const std::string& name, const std::map<std::string, QuestionRun>& runs,
                           const std::vector<GoldAnnotation>& gold, const std::vector<std::size_t>& r_ks,
                           const std::vector<std::size_t>& ar_ks) {
  MetricReport report;
  report.name = name;
  static const QuestionRun empty;
  for (const auto& g : gold) {
    auto it = runs.find(g.qid);
    const auto& run = it == runs.end() ? empty : it->second;
    report.qids.push_back(g.qid);
    for (auto k : r_ks) report.add("R@" + std::to_string(k), recall_at_k(run.ranked_chunks, g.gold_chunks, k));
    for (auto k : ar_ks) {
      report.add("AR@" + std::to_string(k), answer_recall_at_k(run.reader_texts, g.answers, k));
    }
  }
  return report;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for_each_jsonl(path, [&](const json& rec) {
    out.push_back({rec.at("qid").get<std::string>(), rec.at("prediction").get<std::string>()});
  });
  return out;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds) {
  auto out = open_output(path);
  for (const auto& p : preds) out << json{{"qid", p.qid}, {"prediction", p.prediction}}.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

MetricReport evaluate_answers(const std::string& name, const std::vector<Prediction>& preds,
                              const std::vector<GoldAnnotation>& gold) {
  std::map<std::string, std::string> by_qid;
  for (const auto& p : preds) by_qid[p.qid] = p.prediction;
  MetricReport report;
  report.name = name;
  for (const auto& g : gold) {
    if (g.answers.empty()) continue;
    auto it = by_qid.find(g.qid);
    auto r = em_f1(it == by_qid.end() ? std::string() : it->second, g.answers);
    report.qids.push_back(g.qid);
    report.add("EM", r.em);
    report.add("F1", r.f1);
  }
  return report;
}

std::string overlap_reader(const std::string& question, const std::vector<std::string>& reader_texts,
                           std::size_t top) {
  std::unordered_set<std::string> qwords;
  const auto qnorm = normalize_answer(question);
  for (auto t : text::tokenize(qnorm)) qwords.emplace(t);
  struct Candidate {
    std::size_t count = 0;
    std::size_t first_chain = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Candidate> cands;
  const auto limit = std::min(top, reader_texts.size());
  for (std::size_t c = 0; c < limit; ++c) {
    const auto norm = normalize_answer(entry_part(reader_texts[c]));
    const auto toks = text::tokenize(norm);
    std::set<std::string> in_chain;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      for (std::size_t n = 1; n <= 3 && i + n <= toks.size(); ++n) {
        bool ok = true;
        for (std::size_t j = i; j < i + n && ok; ++j) {
          const std::string w(toks[j]);
          ok = !qwords.contains(w) && !stopwords().contains(w);
        }
        if (!ok) break;
        std::vector<std::string_view> parts(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                            toks.begin() + static_cast<std::ptrdiff_t>(i + n));
        in_chain.insert(text::join(parts, " "));
      }
    }
    for (const auto& g : in_chain) {
      auto [it, fresh] = cands.try_emplace(g);
      if (fresh) {
        it->second.first_chain = c;
        it->second.n = text::count_tokens(g);
      }
      ++it->second.count;
    }
  }
  std::string best;
  const Candidate* bc = nullptr;
  for (const auto& [gram, cand] : cands) {
    if (!bc || cand.count > bc->count || (cand.count == bc->count && cand.first_chain < bc->first_chain) ||
        (cand.count == bc->count && cand.first_chain == bc->first_chain && cand.n > bc->n)) {
      best = gram;
      bc = &cand;
    }
  }
  return best;
}

json params_json(const ChainerParams& p) {
  return {{"profile", to_string(p.profile)},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"K", p.K},
          {"k1", p.k1},
          {"scope", to_string(p.scope)},
          {"ablation", to_string(p.ablation)},
          {"sr_sign", to_string(p.sr_sign)},
          {"singleton_scale", p.singleton_scale},
          {"singleton_passage_weight", to_string(p.singleton_passage_weight)},
          {"max_len", p.max_len}};
}

TuneResult tune_alpha_beta(const PipelineInputs& in, const std::vector<Question>& questions,
                           const std::vector<GoldAnnotation>& gold, ChainerParams params,
                           std::pair<int, int> alpha_range, std::pair<int, int> beta_range, std::size_t k,
                           ScoreCache& cache) {
  for (auto [lo, hi] : {alpha_range, beta_range}) {
    if (lo < 1 || hi < lo) throw ValidationError("tune: range must satisfy 1 <= lo <= hi");
  }
  TuneResult best{0.0, 0.0, -1.0};
  const std::string col = "AR@" + std::to_string(k);
  for (int a = alpha_range.first; a <= alpha_range.second; ++a) {
    for (int b = beta_range.first; b <= beta_range.second; ++b) {
      params.alpha = a;
      params.beta = b;
      auto results = run_pipeline(in, questions, params, cache);
      auto report = evaluate_runs("tune", runs_from_results(results), gold, {}, {k});
      const double m = report.aggregates()[col];
      if (m > best.metric) best = {static_cast<double>(a), static_cast<double>(b), m};
    }
  }
  return best;
}

}  // namespace core
