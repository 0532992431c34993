#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "core/bm25.hpp"
#include "core/error.hpp"
#include "core/text.hpp"
#include "oracles.hpp"

using namespace core;

TEST_CASE("bm25: hand fixture") {
  Bm25Index idx({{"a", "b"}, {"b", "b"}});
  CHECK(idx.num_docs() == 2);
  CHECK(idx.avgdl() == 2.0);
  CHECK(std::abs(idx.score({"a"}, 0) - std::log(2.0)) <= 1e-9);
  CHECK(idx.score({"a"}, 1) == 0.0);
  CHECK(idx.score({}, 0) == 0.0);
  CHECK(idx.score({}, 1) == 0.0);
  CHECK(idx.score({"zzz"}, 0) == 0.0);
  CHECK(idx.score({"a", "zzz"}, 0) == idx.score({"a"}, 0));
  auto r = idx.rank({"a"});
  REQUIRE(r.size() == 1);
  CHECK(r[0].doc == 0);
  CHECK(idx.rank({}).empty());
}

TEST_CASE("bm25: equals the formula on random term lists") {
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
  std::vector<std::vector<std::string>> docs;
  unsigned s = 7;
  for (int d = 0; d < 12; ++d) {
    std::vector<std::string> doc;
    for (int i = 0; i < 1 + d % 5; ++i) {
      s = s * 1103515245u + 12345u;
      doc.push_back(vocab[(s >> 16) % vocab.size()]);
    }
    docs.push_back(doc);
  }
  Bm25Index idx(docs);
  for (const auto& q : std::vector<std::vector<std::string>>{{"a"}, {"b", "c"}, {"f", "f", "e"}}) {
    for (std::size_t d = 0; d < docs.size(); ++d) CHECK(idx.score(q, d) == doctest::Approx(oracle::bm25_score(docs, q, d)).epsilon(1e-12));
  }
}

TEST_CASE("negative mining: equals the exhaustive oracle on five passages") {
  auto store = oracle::five_passages();
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> titles, title_first;
  for (const auto& p : store.passages()) {
    ids.push_back(p.id);
    titles.push_back(text::terms(p.title));
    title_first.push_back(text::terms(p.title + " " + std::string(text::first_sentence(p.text))));
  }
  NegativeMiner by_title(store, NegativeStrategy::Title);
  NegativeMiner by_first(store, NegativeStrategy::TitleFirstSentence);
  for (const auto& [mention, gold] : std::vector<std::pair<std::string, std::string>>{
           {"Tony Longhurst", "p1"}, {"Longhurst", "p3"}, {"Sydney", "p5"}, {"racing", "p4"}}) {
    for (std::size_t n : {1, 2, 4}) {
      CHECK(by_title.mine(mention, "Bathurst 1000 results", gold, n) ==
            oracle::bm25_negatives(titles, ids, text::terms(mention), gold, n));
      auto q = text::terms(mention + " Bathurst racing results");
      CHECK(by_first.mine(mention, "Bathurst racing results", gold, n) == oracle::bm25_negatives(title_first, ids, q, gold, n));
    }
  }
}

TEST_CASE("negative mining: gold is skipped") {
  auto store = oracle::five_passages();
  NegativeMiner miner(store, NegativeStrategy::Title);
  auto negs = miner.mine("Tony Longhurst", "", "p1", 1);
  REQUIRE(negs.size() == 1);
  CHECK(negs[0] != "p1");
  CHECK(parse_negative_strategy("title+first-sentence") == NegativeStrategy::TitleFirstSentence);
  CHECK_THROWS_AS(parse_negative_strategy("bm25"), ValidationError);
}
