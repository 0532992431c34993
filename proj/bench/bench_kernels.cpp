// Parallel kernels against their serial twins.
#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "core/dense_index.hpp"
#include "core/kernels.hpp"
#include "core/qg_scorer.hpp"

namespace {

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

constexpr std::size_t kDim = 64;

void BM_InnerProducts(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto m = random_floats(rows * kDim, 1);
  const auto q = random_floats(kDim, 2);
  std::vector<double> out(rows);
  for (auto _ : state) {
    core::kernels::inner_products(m, kDim, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows));
}

void BM_InnerProductsSerial(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto m = random_floats(rows * kDim, 1);
  const auto q = random_floats(kDim, 2);
  std::vector<double> out(rows);
  for (auto _ : state) {
    core::kernels::inner_products_serial(m, kDim, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(rows));
}

void BM_Search(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  core::DenseIndex index(kDim);
  for (std::size_t i = 0; i < rows; ++i) index.add("d" + std::to_string(i), core::DocKind::Passage, random_floats(kDim, i));
  const auto q = random_floats(kDim, 99);
  const bool serial = state.range(1) != 0;
  for (auto _ : state) {
    auto hits = serial ? index.search_serial(q, 100) : index.search(q, 100);
    benchmark::DoNotOptimize(hits.data());
  }
}

std::vector<core::ScoreRequest> score_requests(std::size_t n) {
  static const char* words[] = {"race", "driver", "born", "club", "season", "winner", "town", "school", "final"};
  std::mt19937_64 rng(5);
  std::vector<core::ScoreRequest> reqs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    for (int w = 0; w < 80; ++w) text += std::string(words[rng() % 9]) + " ";
    reqs.push_back({"d" + std::to_string(i), text});
  }
  return reqs;
}

void BM_BatchScore(benchmark::State& state) {
  const auto reqs = score_requests(static_cast<std::size_t>(state.range(0)));
  const bool serial = state.range(1) != 0;
  core::ReferenceQgScorer scorer;
  for (auto _ : state) {
    core::ScoreCache cache;
    auto s = serial ? core::batch_score_serial("q", "which driver won the final", reqs, scorer, cache)
                    : core::batch_score("q", "which driver won the final", reqs, scorer, cache);
    benchmark::DoNotOptimize(s.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_InnerProducts)->Arg(1000)->Arg(100000);
BENCHMARK(BM_InnerProductsSerial)->Arg(1000)->Arg(100000);
BENCHMARK(BM_Search)->Args({100000, 0})->Args({100000, 1});
BENCHMARK(BM_BatchScore)->Args({500, 0})->Args({500, 1});

BENCHMARK_MAIN();
