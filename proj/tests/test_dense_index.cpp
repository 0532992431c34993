#include <doctest.h>

#include <random>

#include "core/dense_index.hpp"
#include "core/error.hpp"
#include "core/kernels.hpp"
#include "oracles.hpp"

using namespace core;

namespace {

DenseIndex tiny() {
  DenseIndex idx(2);
  idx.add("d1", DocKind::Passage, std::vector<float>{1.0f, 0.0f});
  idx.add("d2", DocKind::Passage, std::vector<float>{0.0f, 1.0f});
  idx.add("d3", DocKind::Passage, std::vector<float>{0.5f, 0.5f});
  return idx;
}

struct RandomIndex {
  DenseIndex index;
  std::vector<std::vector<float>> rows;
  std::vector<std::string> ids;
  std::vector<bool> is_chunk;
};

RandomIndex random_index(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  RandomIndex r{DenseIndex(dim), {}, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    r.rows.push_back(oracle::random_vector(rng, dim));
    r.ids.push_back("doc" + std::to_string((i * 7919) % n));
    r.is_chunk.push_back(i % 3 == 0);
    r.index.add(r.ids.back(), r.is_chunk.back() ? DocKind::TableChunk : DocKind::Passage, r.rows.back());
  }
  return r;
}

void check_equal(const std::vector<SearchHit>& got, const std::vector<oracle::ScanHit>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].doc_id == want[i].id);
    CHECK(got[i].sim == want[i].sim);
    CHECK(got[i].rank == static_cast<int>(i));
  }
}

}  // namespace

TEST_CASE("search: hand dot products") {
  auto idx = tiny();
  CHECK(idx.size() == 3);
  auto hits = idx.search(std::vector<float>{1.0f, 0.0f}, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].doc_id == "d1");
  CHECK(hits[0].sim == 1.0);
  CHECK(hits[1].doc_id == "d3");
  CHECK(hits[1].sim == 0.5);
  CHECK(hits[2].doc_id == "d2");
  CHECK(hits[2].sim == 0.0);
  CHECK(idx.search(std::vector<float>{1.0f, 0.0f}, 10).size() == 3);
}

TEST_CASE("search: identical docs rank by id") {
  DenseIndex idx(2);
  for (const char* id : {"c", "a", "b"}) idx.add(id, DocKind::Passage, std::vector<float>{0.3f, 0.4f});
  auto hits = idx.search(std::vector<float>{1.0f, 1.0f}, 3);
  CHECK(hits[0].doc_id == "a");
  CHECK(hits[1].doc_id == "b");
  CHECK(hits[2].doc_id == "c");
}

TEST_CASE("search: errors and degenerate cases") {
  auto idx = tiny();
  CHECK_THROWS_AS(idx.search(std::vector<float>{1.0f}, 1), ValidationError);
  CHECK_THROWS_AS(idx.search(std::vector<float>{1.0f, 0.0f}, 0), ValidationError);
  CHECK_THROWS_AS(idx.add("x", DocKind::Passage, std::vector<float>{1.0f}), ValidationError);
  DenseIndex empty(2);
  CHECK(empty.search(std::vector<float>{1.0f, 0.0f}, 5).empty());
}

TEST_CASE("search: equals full-scan oracle on random vectors") {
  std::mt19937_64 rng(17);
  auto r = random_index(rng, 1000, 64);
  for (int trial = 0; trial < 5; ++trial) {
    auto q = oracle::random_vector(rng, 64);
    for (std::size_t k : {1, 10, 100}) {
      check_equal(search_topk(r.index, q, k), oracle::full_scan(r.rows, r.ids, q, k));
      check_equal(r.index.search_serial(q, k), oracle::full_scan(r.rows, r.ids, q, k));
    }
    const DocKind chunk = DocKind::TableChunk;
    check_equal(r.index.search(q, 50, &chunk), oracle::full_scan(r.rows, r.ids, q, 50, &r.is_chunk));
  }
}

TEST_CASE("search: thread count does not change results") {
  std::mt19937_64 rng(3);
  auto r = random_index(rng, 500, 32);
  auto q = oracle::random_vector(rng, 32);
  kernels::set_threads(1);
  auto one = r.index.search(q, 100);
  kernels::set_threads(8);
  auto eight = r.index.search(q, 100);
  kernels::set_threads(1);
  REQUIRE(one.size() == eight.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].doc_id == eight[i].doc_id);
    CHECK(one[i].sim == eight[i].sim);
  }
}

TEST_CASE("kernels: parallel and serial inner products agree bitwise") {
  std::mt19937_64 rng(9);
  const std::size_t rows = 300, dim = 24;
  std::vector<float> m;
  for (std::size_t i = 0; i < rows; ++i) {
    auto v = oracle::random_vector(rng, dim);
    m.insert(m.end(), v.begin(), v.end());
  }
  auto q = oracle::random_vector(rng, dim);
  std::vector<double> a(rows), b(rows);
  kernels::set_threads(4);
  kernels::inner_products(m, dim, q, a);
  kernels::set_threads(1);
  kernels::inner_products_serial(m, dim, q, b);
  CHECK(a == b);
  std::vector<double> wrong(rows - 1);
  CHECK_THROWS(kernels::inner_products(m, dim, q, wrong));
}

TEST_CASE("save, load and serialize") {
  std::mt19937_64 rng(21);
  auto r = random_index(rng, 200, 16);
  oracle::TempDir dir("cidx");
  r.index.save(dir / "a.cidx");
  auto back = DenseIndex::load(dir / "a.cidx");
  CHECK(back.ids() == r.index.ids());
  CHECK(back.kinds() == r.index.kinds());
  auto q = oracle::random_vector(rng, 16);
  auto x = r.index.search(q, 20), y = back.search(q, 20);
  REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(x[i].doc_id == y[i].doc_id);
    CHECK(x[i].sim == y[i].sim);
  }
  CHECK(DenseIndex::deserialize(r.index.serialize()).serialize() == r.index.serialize());
  CHECK_THROWS(DenseIndex::deserialize("CIDXgarbage"));
  CHECK_THROWS_AS(DenseIndex::load(dir / "missing.cidx"), IoError);
}

TEST_CASE("build_index: bookkeeping and byte-identical rebuild") {
  ReferenceProvider p(4);
  std::vector<IndexedDoc> docs{{"a", "alpha beta", DocKind::Passage},
                               {"b", "gamma", DocKind::TableChunk},
                               {"c", "delta alpha", DocKind::Passage}};
  auto x = build_index(p, docs);
  CHECK(x.size() == 3);
  CHECK(x.dim() == 4);
  oracle::TempDir dir("rebuild");
  x.save(dir / "1.cidx");
  build_index(p, docs).save(dir / "2.cidx");
  CHECK(oracle::slurp(dir / "1.cidx") == oracle::slurp(dir / "2.cidx"));
  auto empty = build_index(p, std::vector<IndexedDoc>{});
  CHECK(empty.size() == 0);
  CHECK(empty.search(std::vector<float>(4, 1.0f), 3).empty());
}

TEST_CASE("first hop scope") {
  DenseIndex idx(2);
  idx.add("t1#0", DocKind::TableChunk, std::vector<float>{0.1f, 0.0f});
  idx.add("t2#0", DocKind::TableChunk, std::vector<float>{0.2f, 0.0f});
  idx.add("p1", DocKind::Passage, std::vector<float>{0.9f, 0.0f});
  idx.add("p2", DocKind::Passage, std::vector<float>{0.8f, 0.0f});
  const std::vector<float> q{1.0f, 0.0f};
  auto tables = retrieve_first_hop(idx, q, 3, Scope::TablesOnly);
  REQUIRE(tables.size() == 2);
  for (const auto& h : tables) CHECK(h.kind == DocKind::TableChunk);
  CHECK(tables[0].doc_id == "t2#0");
  auto joint = retrieve_first_hop(idx, q, 3, Scope::Joint);
  REQUIRE(joint.size() == 3);
  CHECK(joint[0].doc_id == "p1");
  CHECK(joint[2].kind == DocKind::TableChunk);
  CHECK(parse_scope("joint") == Scope::Joint);
  CHECK_THROWS_AS(parse_scope("tables"), ValidationError);
}
