#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <set>

#include "core/chainer.hpp"
#include "core/error.hpp"
#include "core/kernels.hpp"
#include "core/qg_scorer.hpp"
#include "core/service.hpp"
#include "oracles.hpp"

using namespace core;

TEST_CASE("format_prompt") {
  CHECK(format_prompt("X") == "X\nPlease write a question based on this passage.");
  CHECK(format_prompt("") == "\nPlease write a question based on this passage.");
  CHECK_THROWS_AS(format_prompt(format_prompt("X")), ValidationError);
}

TEST_CASE("reference score: hand evaluation") {
  const double want = (std::log(3.0 / 6.0) + std::log(1.0 / 6.0)) / 2.0;
  CHECK(std::abs(reference_score("a c", "a b a") - want) < 1e-12);
  CHECK(reference_score("a c", "a b a") == doctest::Approx(-1.242453).epsilon(1e-6));
  // V = |{a}| = 1, so P(a) = (1 + 1) / (1 + 1).
  CHECK(reference_score("a", "a") == 0.0);
  CHECK(reference_score("A, c?", "a b a") == reference_score("a c", "a b a"));
  CHECK_THROWS_AS(reference_score("", "a"), ValidationError);
  CHECK_THROWS_AS(reference_score("|| ,", "a"), ValidationError);
}

TEST_CASE("reference score: more copies of a question token score higher") {
  // Adding a copy of the only question token: (c + 1) / (n + V) grows with c = n - 1.
  std::string doc = "a b";
  double prev = reference_score("a", doc);
  for (int i = 0; i < 10; ++i) {
    doc = "a " + doc;
    const double s = reference_score("a", doc);
    CHECK(s > prev);
    prev = s;
  }
  // Length and vocabulary held fixed: turn a filler token into a question token.
  CHECK(reference_score("a q", "a a b b") > reference_score("a q", "a b b b"));
  CHECK(reference_score("a q", "a a a b") > reference_score("a q", "a a b b"));
}

TEST_CASE("score cache: first value wins") {
  ScoreCache cache;
  CHECK_FALSE(cache.find("q", "d").has_value());
  CHECK(cache.insert("q", "d", 1.5) == 1.5);
  CHECK(cache.insert("q", "d", 2.5) == 1.5);
  CHECK(*cache.find("q", "d") == 1.5);
  CHECK_FALSE(cache.find("q2", "d").has_value());
  CHECK(cache.size() == 1);
}

TEST_CASE("batch score: table linked to five passages costs six calls") {
  std::vector<Passage> ps;
  for (int i = 0; i < 5; ++i) ps.push_back({"p" + std::to_string(i), "P" + std::to_string(i), "text " + std::to_string(i)});
  CorpusStore store(ps, {{"t", "T", {"name"}, {{"P0"}}}});
  EvidenceGraph graph;
  for (int i = 0; i < 5; ++i) graph["t#0"].push_back({{"t#0", 4, 4, "P0"}, "p" + std::to_string(i), 0.0});
  // Repeat one link: still one call for that passage.
  graph["t#0"].push_back({{"t#0", 4, 4, "P0"}, "p3", 0.0});
  std::vector<SearchHit> hits{{"t#0", 1.0, 0, DocKind::TableChunk}};
  ReferenceQgScorer ref;
  CountingScorer counting(ref);
  ScoreCache cache;
  auto chains = rank_chains("q", "who is p3", hits, &graph, store, counting, cache, ChainerParams{});
  CHECK(chains.size() == 5);
  CHECK(counting.calls() == 6);
  rank_chains("q", "who is p3", hits, &graph, store, counting, cache, ChainerParams{});
  CHECK(counting.calls() == 6);
}

TEST_CASE("batch score: repeated doc is one call") {
  ReferenceQgScorer ref;
  CountingScorer counting(ref);
  ScoreCache cache;
  std::vector<ScoreRequest> reqs{{"d", "a b"}, {"d", "a b"}, {"e", "c"}};
  auto s = batch_score("q", "a", reqs, counting, cache);
  CHECK(counting.calls() == 2);
  CHECK(s[0] == s[1]);
  CHECK(s[0] == reference_score("a", "a b"));
}

TEST_CASE("batch score: call count equals distinct pairs on random batches") {
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<int> doc_d(0, 30), q_d(0, 3), n_d(1, 40);
  ReferenceQgScorer ref;
  for (bool parallel : {true, false}) {
    kernels::set_threads(parallel ? 4 : 1);
    CountingScorer counting(ref);
    ScoreCache cache;
    std::set<std::pair<int, int>> seen;
    for (int round = 0; round < 30; ++round) {
      const int q = q_d(rng);
      std::vector<ScoreRequest> reqs;
      for (int i = n_d(rng); i > 0; --i) {
        const int d = doc_d(rng);
        reqs.push_back({"d" + std::to_string(d), oracle::random_words(rng, 3) + " w" + std::to_string(d)});
        seen.insert({q, d});
      }
      // Text differs between requests for the same id; the cache keeps the
      // first score, so compare only ids that are new in this round.
      auto out = parallel ? batch_score("q" + std::to_string(q), "question words", reqs, counting, cache)
                          : batch_score_serial("q" + std::to_string(q), "question words", reqs, counting, cache);
      CHECK(out.size() == reqs.size());
      CHECK(counting.calls() == seen.size());
      CHECK(cache.size() == seen.size());
    }
  }
  kernels::set_threads(1);
}

TEST_CASE("batch score: parallel equals serial") {
  std::mt19937_64 rng(45);
  std::vector<ScoreRequest> reqs;
  for (int i = 0; i < 200; ++i) reqs.push_back({"d" + std::to_string(i), oracle::random_words(rng, 8)});
  ReferenceQgScorer ref;
  ScoreCache a, b;
  kernels::set_threads(4);
  auto x = batch_score("q", "river race winner", reqs, ref, a);
  kernels::set_threads(1);
  auto y = batch_score_serial("q", "river race winner", reqs, ref, b);
  CHECK(x == y);
}

TEST_CASE("external scorer through a service") {
  auto svc = std::make_shared<LineService>(FAKE_SERVICE_PATH);
  ExternalQgScorer ext(svc);
  CHECK(ext.score("a c", "a b a") == reference_score("a c", "a b a"));
  auto failing = std::make_shared<LineService>(std::string(FAKE_SERVICE_PATH) + " --fail-after 0");
  ExternalQgScorer bad(failing);
  ScoreCache cache;
  std::vector<ScoreRequest> reqs{{"d", "a"}};
  CHECK_THROWS_AS(batch_score("q", "a", reqs, bad, cache), ValidationError);
}
