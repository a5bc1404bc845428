// Parallel kernels against their serial reference twins on synthetic inputs.

#include <benchmark/benchmark.h>

#include <set>
#include <utility>
#include <vector>

#include "sculptor/clustering.hpp"
#include "sculptor/dataset.hpp"
#include "sculptor/fusion.hpp"
#include "sculptor/reference.hpp"
#include "sculptor/rng.hpp"
#include "sculptor/semantic.hpp"
#include "sculptor/structural.hpp"

namespace {

using namespace sculptor;

Dataset make_graphs(std::size_t count, std::uint32_t max_nodes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GraphRecord> records;
  records.reserve(count);
  for (std::size_t g = 0; g < count; ++g) {
    GraphRecord rec;
    rec.id = "g" + std::to_string(g);
    rec.num_nodes = 5 + static_cast<std::uint32_t>(rng.below(max_nodes - 4));
    std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
    const std::size_t wanted = 2 * rec.num_nodes;
    for (std::size_t e = 0; e < wanted; ++e) {
      auto u = static_cast<std::uint32_t>(rng.below(rec.num_nodes));
      auto v = static_cast<std::uint32_t>(rng.below(rec.num_nodes));
      if (u > v) std::swap(u, v);
      edges.emplace(u, v);
    }
    rec.edges.assign(edges.begin(), edges.end());
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records));
}

const Dataset& bench_dataset() {
  static const Dataset dataset = make_graphs(400, 40, 7);
  return dataset;
}

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix mat(rows, cols);
  for (auto& v : mat.data) v = rng.normal();
  return mat;
}

void BM_featurize_parallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(structural_features(bench_dataset(), {}));
}

void BM_featurize_serial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::structural_features_serial(bench_dataset(), {}));
}

void BM_hash_embed_parallel(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(hash_embeddings(bench_dataset(), 64));
}

void BM_hash_embed_serial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(reference::hash_embeddings_serial(bench_dataset(), 64));
}

void BM_zscore_parallel(benchmark::State& state) {
  const FeatureMatrix mat = random_matrix(4000, 96, 11);
  for (auto _ : state) benchmark::DoNotOptimize(zscore(mat));
}

void BM_zscore_serial(benchmark::State& state) {
  const FeatureMatrix mat = random_matrix(4000, 96, 11);
  for (auto _ : state) benchmark::DoNotOptimize(reference::zscore_serial(mat));
}

void BM_lloyd_parallel(benchmark::State& state) {
  const FeatureMatrix points = random_matrix(3000, 24, 13);
  const FeatureMatrix init = kmeanspp_init(points, 16, 17);
  for (auto _ : state) benchmark::DoNotOptimize(lloyd(points, init));
}

void BM_lloyd_serial(benchmark::State& state) {
  const FeatureMatrix points = random_matrix(3000, 24, 13);
  const FeatureMatrix init = kmeanspp_init(points, 16, 17);
  for (auto _ : state) benchmark::DoNotOptimize(reference::lloyd_serial(points, init));
}

BENCHMARK(BM_featurize_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_featurize_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hash_embed_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hash_embed_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_zscore_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_zscore_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lloyd_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_lloyd_serial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
