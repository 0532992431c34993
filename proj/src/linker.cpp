#include "core/linker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "core/binary_io.hpp"
#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

namespace core {

using nlohmann::json;

namespace {

struct TokenLogits {
  double z0 = 0.0;
  double z1 = 0.0;
};

TokenLogits logits(const Vector& h, const LinearTagger& tagger) {
  if (h.size() != tagger.dim) {
    throw ValidationError("tagger dim " + std::to_string(tagger.dim) + " != state dim " + std::to_string(h.size()));
  }
  TokenLogits z;
  for (std::size_t k = 0; k < tagger.dim; ++k) {
    z.z0 += tagger.at(0, k) * h[k];
    z.z1 += tagger.at(1, k) * h[k];
  }
  return z;
}

// ln P0, ln P1 via a stable log-sum-exp.
std::pair<double, double> log_probs(const TokenLogits& z) {
  const double m = std::max(z.z0, z.z1);
  const double lse = m + std::log(std::exp(z.z0 - m) + std::exp(z.z1 - m));
  return {z.z0 - lse, z.z1 - lse};
}

std::string normalized_phrase(std::string_view s) {
  auto t = text::terms(s);
  std::vector<std::string_view> views(t.begin(), t.end());
  return text::join(views, " ");
}

std::string span_surface(std::string_view chunk_text, const std::vector<text::TokenSpan>& spans, std::size_t start,
                         std::size_t end) {
  std::vector<std::string_view> toks;
  for (std::size_t i = start; i <= end; ++i) {
    toks.push_back(chunk_text.substr(spans[i].begin, spans[i].end - spans[i].begin));
  }
  return text::join(toks, " ");
}

}  // namespace

std::vector<double> tag_probs(const TokenStates& states, const LinearTagger& tagger) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& h : states) out.push_back(std::exp(log_probs(logits(h, tagger)).second));
  return out;
}

BceResult bce_loss_and_grad(const TokenStates& states, std::span<const int> labels, const LinearTagger& tagger) {
  if (states.empty()) throw ValidationError("bce_loss_and_grad: no tokens");
  if (labels.size() != states.size()) throw ValidationError("bce_loss_and_grad: label count mismatch");
  const double n = static_cast<double>(states.size());
  BceResult r;
  r.grad.assign(2 * tagger.dim, 0.0);
  for (std::size_t t = 0; t < states.size(); ++t) {
    const int y = labels[t];
    if (y != 0 && y != 1) throw ValidationError("bce_loss_and_grad: labels must be 0 or 1");
    const auto z = logits(states[t], tagger);
    const auto [lp0, lp1] = log_probs(z);
    r.loss -= (y == 1 ? lp1 : lp0) / n;
    // d/dz1 = P1 - y, d/dz0 = -(P1 - y).
    const double g = (std::exp(lp1) - y) / n;
    for (std::size_t k = 0; k < tagger.dim; ++k) {
      r.grad[tagger.dim + k] += g * states[t][k];
      r.grad[k] -= g * states[t][k];
    }
  }
  return r;
}

LinearTagger train_tagger(const std::vector<TaggerExample>& examples, std::size_t dim, const TaggerTraining& opts) {
  LinearTagger tagger(dim);
  auto rng = rng_stream(opts.seed, "tagger");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      if (examples[i].states.empty()) continue;
      auto r = bce_loss_and_grad(examples[i].states, examples[i].labels, tagger);
      for (std::size_t k = 0; k < tagger.weights.size(); ++k) tagger.weights[k] -= opts.learning_rate * r.grad[k];
    }
  }
  return tagger;
}

void save_tagger(const LinearTagger& tagger, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  binio::write_magic(out, "CTAG");
  binio::write_u32(out, static_cast<std::uint32_t>(tagger.dim));
  for (double w : tagger.weights) binio::write_f64(out, w);
}

LinearTagger load_tagger(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  binio::expect_magic(in, "CTAG", path.string());
  LinearTagger tagger(binio::read_u32(in));
  for (auto& w : tagger.weights) w = binio::read_f64(in);
  return tagger;
}

ContrastiveResult contrastive_loss_and_grad(std::span<const double> entity, std::span<const double> positive,
                                            const std::vector<std::vector<double>>& negatives) {
  if (negatives.empty()) throw ValidationError("contrastive loss needs at least one negative");
  const std::size_t d = entity.size();
  if (positive.size() != d) throw ValidationError("contrastive loss: dim mismatch");
  for (const auto& n : negatives) {
    if (n.size() != d) throw ValidationError("contrastive loss: dim mismatch");
  }
  auto dot = [&](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += entity[k] * v[k];
    return s;
  };
  // Candidate 0 is the positive.
  std::vector<double> sims;
  sims.push_back(dot(positive));
  for (const auto& n : negatives) sims.push_back(dot(n));
  const double m = *std::max_element(sims.begin(), sims.end());
  double z = 0.0;
  for (double s : sims) z += std::exp(s - m);
  const double lse = m + std::log(z);

  ContrastiveResult r;
  r.loss = lse - sims[0];
  r.grad_entity.assign(d, 0.0);
  r.grad_positive.assign(d, 0.0);
  r.grad_negatives.assign(negatives.size(), std::vector<double>(d, 0.0));
  for (std::size_t c = 0; c < sims.size(); ++c) {
    const double coef = std::exp(sims[c] - lse) - (c == 0 ? 1.0 : 0.0);
    std::span<const double> cand = c == 0 ? positive : std::span<const double>(negatives[c - 1]);
    auto& grad_cand = c == 0 ? r.grad_positive : r.grad_negatives[c - 1];
    for (std::size_t k = 0; k < d; ++k) {
      r.grad_entity[k] += coef * cand[k];
      grad_cand[k] = coef * entity[k];
    }
  }
  return r;
}

ContrastiveBatch contrastive_batch(const std::vector<LinkPair>& pairs, const PassageLookup& passage_vec,
                                   std::uint64_t seed) {
  auto rng = rng_stream(seed, "hard-negatives");
  ContrastiveBatch batch;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    if (pair.hard_negative_ids.empty()) throw ValidationError("pair " + std::to_string(i) + " has no hard negatives");
    std::uniform_int_distribution<std::size_t> pick(0, pair.hard_negative_ids.size() - 1);
    std::vector<std::string> ids{pair.hard_negative_ids[pick(rng)]};
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      if (j != i && pairs[j].positive_id != pair.positive_id &&
          std::find(ids.begin(), ids.end(), pairs[j].positive_id) == ids.end()) {
        ids.push_back(pairs[j].positive_id);
      }
    }
    std::vector<std::vector<double>> negs;
    for (const auto& id : ids) negs.push_back(passage_vec(id));
    auto r = contrastive_loss_and_grad(pair.entity, passage_vec(pair.positive_id), negs);
    batch.mean_loss += r.loss;
    batch.per_pair.push_back(std::move(r));
    batch.negatives.push_back(std::move(ids));
  }
  if (!pairs.empty()) batch.mean_loss /= static_cast<double>(pairs.size());
  return batch;
}

std::vector<MentionSpan> extract_spans(std::span<const double> probs, const std::vector<CellSpan>& cells,
                                       std::string_view chunk_text, std::string_view chunk_id, double threshold) {
  const auto spans = text::token_spans(chunk_text);
  if (probs.size() != spans.size()) throw ValidationError("extract_spans: probability count != token count");
  // Cell ordinal per token; -1 outside every cell.
  std::vector<long> owner(spans.size(), -1);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t t = cells[c].token_begin; t < cells[c].token_end && t < spans.size(); ++t) {
      owner[t] = static_cast<long>(c);
    }
  }
  std::vector<MentionSpan> out;
  std::size_t t = 0;
  while (t < spans.size()) {
    if (!(probs[t] > threshold) || owner[t] < 0) {
      ++t;
      continue;
    }
    std::size_t e = t;
    while (e + 1 < spans.size() && probs[e + 1] > threshold && owner[e + 1] == owner[t]) ++e;
    out.push_back({std::string(chunk_id), t, e, span_surface(chunk_text, spans, t, e)});
    t = e + 1;
  }
  return out;
}

std::vector<LinkEdge> link_mentions(const TokenStates& states, const std::vector<MentionSpan>& spans,
                                    const DenseIndex& passage_index, std::size_t top_m) {
  std::vector<LinkEdge> edges;
  for (const auto& span : spans) {
    auto e = entity_embedding(states, span.start, span.end);
    for (auto& hit : passage_index.search(e, top_m)) {
      edges.push_back({span, std::move(hit.doc_id), hit.sim});
    }
  }
  return edges;
}

EvidenceGraph build_evidence_graph(const CorpusStore& store, const EmbeddingProvider& provider,
                                   const LinearTagger& tagger, const DenseIndex& passage_index,
                                   const LinkerConfig& config) {
  const auto& chunks = store.chunks();
  std::vector<std::vector<LinkEdge>> per_chunk(chunks.size());
  std::vector<std::string> errors(chunks.size());
  const auto n = static_cast<std::ptrdiff_t>(chunks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& chunk = chunks[static_cast<std::size_t>(i)];
    try {
      auto states = provider.token_states(chunk.text);
      auto probs = tag_probs(states, tagger);
      auto spans = extract_spans(probs, chunk.cell_map, chunk.text, chunk.chunk_id, config.threshold);
      per_chunk[static_cast<std::size_t>(i)] = link_mentions(states, spans, passage_index, config.top_m);
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = chunk.chunk_id + ": " + e.what();
    }
  }
  for (const auto& err : errors) {
    if (!err.empty()) throw ValidationError("link build failed at " + err);
  }
  EvidenceGraph graph;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (!per_chunk[i].empty()) graph.emplace(chunks[i].chunk_id, std::move(per_chunk[i]));
  }
  return graph;
}

namespace {

std::unordered_set<std::string> normalized_titles(const CorpusStore& store) {
  std::unordered_set<std::string> titles;
  for (const auto& p : store.passages()) {
    auto t = normalized_phrase(p.title);
    if (!t.empty()) titles.insert(std::move(t));
  }
  return titles;
}

std::vector<int> labels_for(const TableChunk& chunk, const std::unordered_set<std::string>& titles) {
  std::vector<int> labels(text::count_tokens(chunk.text), 0);
  for (const auto& cell : chunk.cell_map) {
    if (cell.row == kHeaderRow) continue;
    auto value = std::string_view(chunk.text).substr(cell.byte_begin, cell.byte_end - cell.byte_begin);
    if (!titles.contains(normalized_phrase(value))) continue;
    for (std::size_t t = cell.token_begin; t < cell.token_end; ++t) labels[t] = 1;
  }
  return labels;
}

}  // namespace

std::vector<int> title_match_labels(const TableChunk& chunk, const CorpusStore& store) {
  return labels_for(chunk, normalized_titles(store));
}

LinearTagger train_tagger_on_titles(const CorpusStore& store, const EmbeddingProvider& provider,
                                    const TaggerTraining& opts) {
  const auto titles = normalized_titles(store);
  std::vector<TaggerExample> examples;
  for (const auto& chunk : store.chunks()) {
    examples.push_back({provider.token_states(chunk.text), labels_for(chunk, titles)});
  }
  return train_tagger(examples, provider.dim(), opts);
}

void save_links(const EvidenceGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [chunk_id, edges] : graph) {
    for (const auto& e : edges) {
      json rec = {{"chunk_id", chunk_id},
                  {"start", e.mention.start},
                  {"end", e.mention.end},
                  {"surface", e.mention.surface},
                  {"passage_id", e.passage_id},
                  {"score", e.link_score}};
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

EvidenceGraph load_links(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  EvidenceGraph graph;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = json::parse(line);
      LinkEdge e;
      e.mention.chunk_id = rec.at("chunk_id").get<std::string>();
      e.mention.start = rec.at("start").get<std::size_t>();
      e.mention.end = rec.at("end").get<std::size_t>();
      e.mention.surface = rec.value("surface", std::string());
      e.passage_id = rec.at("passage_id").get<std::string>();
      e.link_score = rec.value("score", 0.0);
      graph[e.mention.chunk_id].push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return graph;
}

LinkEval eval_links(const EvidenceGraph& predicted, const std::vector<GoldLink>& gold) {
  std::set<std::pair<std::string, std::string>> gold_pairs;
  std::set<std::string> universe;
  for (const auto& g : gold) {
    gold_pairs.emplace(g.chunk_id, g.passage_id);
    universe.insert(g.chunk_id);
  }
  std::set<std::pair<std::string, std::string>> pred_pairs;
  for (const auto& [chunk_id, edges] : predicted) {
    if (!universe.contains(chunk_id)) continue;
    for (const auto& e : edges) pred_pairs.emplace(chunk_id, e.passage_id);
  }
  LinkEval r;
  r.predicted = pred_pairs.size();
  r.gold = gold_pairs.size();
  for (const auto& p : pred_pairs) r.correct += gold_pairs.contains(p) ? 1 : 0;
  r.precision = r.predicted ? static_cast<double>(r.correct) / static_cast<double>(r.predicted) : 0.0;
  r.recall = r.gold ? static_cast<double>(r.correct) / static_cast<double>(r.gold) : 0.0;
  r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

}  // namespace core
