#include <doctest.h>

#include <cmath>
#include <random>

#include "core/chainer.hpp"
#include "core/error.hpp"
#include "core/service.hpp"
#include "core/text.hpp"
#include "oracles.hpp"

using namespace core;

namespace {

ChainerParams ottqa() { return ChainerParams::for_profile(Profile::OttQa); }

// Race table plus the passages its driver cells link to.
CorpusStore race_store() {
  return CorpusStore(
      {{"pA", "Tony Longhurst", "Tony Longhurst is an Australian racing driver who won the 1988 Bathurst 1000."},
       {"pB", "Ford Sierra", "The Ford Sierra RS500 was a touring car built for Group A racing."},
       {"pC", "Jim Richards", "Jim Richards is a New Zealand born racing driver."}},
      {{"t1", "1988 Tooheys 1000", {"Pos", "Driver", "Car"},
        {{"1", "Tony Longhurst", "Ford Sierra"}, {"2", "Jim Richards", "BMW M3"}}},
       {"t2", "1988 Australian Touring Car Championship", {"Round", "Winner"}, {{"1", "Tony Longhurst"}}}});
}

LinkEdge edge_to(const CorpusStore& store, const std::string& chunk, int row, int col, const std::string& pid) {
  for (const auto& c : store.chunk(chunk).cell_map) {
    if (c.row == row && c.col == col) return {{chunk, c.token_begin, c.token_end - 1, ""}, pid, 0.0};
  }
  throw std::runtime_error("no such cell");
}

}  // namespace

TEST_CASE("profiles") {
  auto o = ottqa();
  CHECK(o.alpha == 16.0);
  CHECK(o.beta == 9.0);
  CHECK(o.K == 50);
  CHECK(o.k1 == 100);
  CHECK(o.scope == Scope::TablesOnly);
  auto n = ChainerParams::for_profile(Profile::Nq);
  CHECK(n.alpha == 10.0);
  CHECK(n.beta == 12.0);
  CHECK(n.scope == Scope::Joint);
  CHECK(n.K == 50);
  CHECK(n.k1 == 100);
  o.alpha = 0.0;
  CHECK_THROWS_AS(o.validate(), ValidationError);
  CHECK_THROWS_AS(parse_ablation("none"), ValidationError);
  CHECK(parse_ablation("no-qgs-hop1") == Ablation::NoQgsHop1);
  CHECK(parse_profile("nq") == Profile::Nq);
}

TEST_CASE("s_r: direct softmax") {
  const std::vector<double> equal(4, 0.3);
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s_r(equal, i) - std::log(0.25)) < 1e-12);
  const std::vector<double> sims{2.0, 1.0, 0.0};
  const double direct = std::log(std::exp(2.0) / (std::exp(2.0) + std::exp(1.0) + std::exp(0.0)));
  CHECK(std::abs(s_r(sims, 0) - direct) < 1e-12);
  CHECK(s_r(sims, 0) == doctest::Approx(-0.407606).epsilon(1e-6));
  CHECK(s_r(sims, 0, SrSign::PaperLiteral) == -s_r(sims, 0));
  CHECK_THROWS_AS(s_r(std::vector<double>{}, 0), ValidationError);
  // Large sims do not overflow.
  CHECK(std::isfinite(s_r(std::vector<double>{1000.0, 999.0}, 1)));
}

TEST_CASE("chain and singleton scores") {
  auto p = ottqa();
  CHECK(std::abs(chain_score(-0.407606, -1.0, -2.0, p) - -34.407606) < 1e-9);
  CHECK(chain_score(-0.7, 0.0, 0.0, p) == -0.7);
  CHECK(std::abs(singleton_score(-0.5, -1.0, p, DocKind::TableChunk) - -32.5) < 1e-9);
  auto nq = ChainerParams::for_profile(Profile::Nq);
  CHECK(singleton_score(-0.5, 0.0, nq, DocKind::Passage) == -0.5);
  CHECK(singleton_score(-0.5, -1.0, nq, DocKind::Passage) == -20.5);
  nq.singleton_passage_weight = SingletonPassageWeight::Beta;
  CHECK(singleton_score(-0.5, -1.0, nq, DocKind::Passage) == -24.5);
  CHECK(singleton_score(-0.5, -1.0, nq, DocKind::TableChunk) == -20.5);

  p.ablation = Ablation::NoQgsHop1;
  CHECK(std::abs(chain_score(-0.407606, -1.0, -2.0, p) - -18.407606) < 1e-9);
  p.ablation = Ablation::NoQgsAll;
  CHECK(chain_score(-0.407606, -1.0, -2.0, p) == -0.407606);
  p.ablation = Ablation::NoChainer;
  CHECK(singleton_score(-0.5, -1.0, p, DocKind::TableChunk) == -0.5);
}

TEST_CASE("rank_chains: enumeration count") {
  auto store = race_store();
  EvidenceGraph graph{{"t1#0", {edge_to(store, "t1#0", 0, 1, "pA"), edge_to(store, "t1#0", 0, 2, "pB")}}};
  std::vector<SearchHit> hits{{"t1#0", 0.9, 0, DocKind::TableChunk}, {"pC", 0.5, 1, DocKind::Passage}};
  ReferenceQgScorer scorer;
  ScoreCache cache;
  auto chains = rank_chains("q", "who won the 1988 race", hits, &graph, store, scorer, cache, ottqa());
  CHECK(chains.size() == 3);
  auto none = rank_chains("q", "who won the 1988 race", hits, nullptr, store, scorer, cache, ottqa());
  CHECK(none.size() == 2);
  auto p = ottqa();
  p.ablation = Ablation::RetrieverOnly;
  auto ro = rank_chains("q", "who won the 1988 race", hits, &graph, store, scorer, cache, p);
  CHECK(ro.size() == 2);
  CHECK(ro[0].hop1_id == "t1#0");
}

TEST_CASE("rank_chains: linker scores never enter the total") {
  auto store = race_store();
  EvidenceGraph a{{"t1#0", {edge_to(store, "t1#0", 0, 1, "pA")}}};
  EvidenceGraph b = a;
  b["t1#0"][0].link_score = 1e6;
  std::vector<SearchHit> hits{{"t1#0", 0.9, 0, DocKind::TableChunk}};
  ReferenceQgScorer scorer;
  ScoreCache cache;
  auto x = rank_chains("q", "driver", hits, &a, store, scorer, cache, ottqa());
  auto y = rank_chains("q", "driver", hits, &b, store, scorer, cache, ottqa());
  CHECK(x[0].total == y[0].total);
}

TEST_CASE("rank_chains: scorer failure names the question") {
  auto store = race_store();
  std::vector<SearchHit> hits{{"t1#0", 0.9, 0, DocKind::TableChunk}};
  ExternalQgScorer bad(std::make_shared<LineService>(std::string(FAKE_SERVICE_PATH) + " --fail-after 0"));
  ScoreCache cache;
  try {
    rank_chains("q7", "driver", hits, nullptr, store, bad, cache, ottqa());
    FAIL("expected a scorer error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("q7") != std::string::npos);
    CHECK(msg.find("t1#0") != std::string::npos);
  }
}

TEST_CASE("rank_chains: equals brute-force enumeration") {
  std::mt19937_64 rng(101);
  ReferenceQgScorer scorer;
  for (int trial = 0; trial < 40; ++trial) {
    auto sc = oracle::synthetic_case(rng, 50, 3, trial % 2 == 1);
    auto p = ChainerParams::for_profile(trial % 3 == 0 ? Profile::Nq : Profile::OttQa);
    p.ablation = static_cast<Ablation>(trial % 5);
    if (trial % 7 == 0) p.sr_sign = SrSign::PaperLiteral;
    if (trial % 4 == 0) p.singleton_passage_weight = SingletonPassageWeight::Beta;
    ScoreCache cache;
    auto got = rank_chains("q", sc.question, sc.first_hop, &sc.graph, sc.store, scorer, cache, p);
    std::string why;
    CHECK_MESSAGE(oracle::same_order(got, oracle::enumerate_chains(sc, p), &why), why);
  }
}

TEST_CASE("assemble: hand-traced fixture") {
  auto store = race_store();
  const auto eA = edge_to(store, "t1#0", 0, 1, "pA");
  const auto eB = edge_to(store, "t1#0", 0, 2, "pB");
  const auto eA2 = edge_to(store, "t2#0", 0, 1, "pA");
  std::vector<CandidateChain> sorted(3);
  sorted[0] = {"t1#0", DocKind::TableChunk, 0, eA, {}, -1.0};
  sorted[1] = {"t1#0", DocKind::TableChunk, 0, eB, {}, -2.0};
  sorted[2] = {"t2#0", DocKind::TableChunk, 1, eA2, {}, -3.0};
  auto out = assemble_topk(sorted, 50, store);
  REQUIRE(out.size() == 4);
  CHECK(out[0].hop1_id == "t1#0");
  CHECK_FALSE(out[0].hop2_id.has_value());
  CHECK(out[0].text == store.chunk("t1#0").text);
  CHECK(*out[1].hop2_id == "pA");
  const std::string row0 = "1988 Tooheys 1000 || Pos, Driver, Car || 1, Tony Longhurst, Ford Sierra";
  CHECK(out[1].text == row0 + " || Tony Longhurst " + store.passage("pA").text);
  CHECK(*out[2].hop2_id == "pB");
  CHECK(out[2].text.rfind(row0 + " || Ford Sierra ", 0) == 0);
  CHECK(out[3].hop1_id == "t2#0");
  CHECK_FALSE(out[3].hop2_id.has_value());
  CHECK(oracle::check_assembly(out, sorted, 50, store).empty());

  auto one = assemble_topk(sorted, 1, store);
  REQUIRE(one.size() == 1);
  CHECK(one[0].hop1_id == "t1#0");

  auto bare = assemble_topk(sorted, 50, store, Ablation::NoChainer);
  REQUIRE(bare.size() == 4);
  CHECK(bare[1].text == "Tony Longhurst " + store.passage("pA").text);
  CHECK(assemble_topk(sorted, 50, store, Ablation::RetrieverOnly).size() == 2);
}

TEST_CASE("assemble: invariants on random sorted lists") {
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<std::size_t> k_d(1, 60);
  for (int trial = 0; trial < 300; ++trial) {
    auto sc = oracle::synthetic_case(rng, 40, 3, trial % 2 == 0);
    auto sorted = oracle::random_candidates(sc, rng);
    const std::size_t K = k_d(rng);
    auto why = oracle::check_assembly(assemble_topk(sorted, K, sc.store), sorted, K, sc.store);
    CHECK_MESSAGE(why.empty(), why);
  }
}

TEST_CASE("serialize: budget") {
  ChainEntry e{"t", std::nullopt, "short text", 0.0, {}};
  auto r = serialize_chain("who?", e);
  CHECK(r.text == "question: who? || short text");
  CHECK(r.token_count == 5);
  std::string long_text;
  for (int i = 0; i < 600; ++i) long_text += "w" + std::to_string(i) + " ";
  e.text = long_text;
  auto cut = serialize_chain("who?", e);
  CHECK(cut.token_count == 500);
  CHECK(text::count_tokens(cut.text) == 500);
  CHECK(cut.text.substr(cut.text.size() - 4) == "w496");
  CHECK(serialize_chain("who?", e, 7).text == "question: who? || w0 w1 w2 w3");
}

TEST_CASE("serialize: golden race-table chain") {
  auto store = race_store();
  std::vector<CandidateChain> sorted(1);
  sorted[0] = {"t1#0", DocKind::TableChunk, 0, edge_to(store, "t1#0", 0, 1, "pA"), {}, -1.0};
  auto entries = assemble_topk(sorted, 50, store);
  REQUIRE(entries.size() == 2);
  const std::string q = "Where was the winner of the 1988 Tooheys 1000 born?";
  CHECK(serialize_chain(q, entries[0]).text ==
        "question: Where was the winner of the 1988 Tooheys 1000 born? || 1988 Tooheys 1000 || Pos, Driver, Car || "
        "1, Tony Longhurst, Ford Sierra || 2, Jim Richards, BMW M3");
  CHECK(serialize_chain(q, entries[1]).text ==
        "question: Where was the winner of the 1988 Tooheys 1000 born? || 1988 Tooheys 1000 || Pos, Driver, Car || "
        "1, Tony Longhurst, Ford Sierra || Tony Longhurst Tony Longhurst is an Australian racing driver who won the "
        "1988 Bathurst 1000.");
}
