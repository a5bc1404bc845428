// Release gate. Each block checks one contract the toolkit guarantees, at the
// tolerance users can rely on, and prints a single PASS/FAIL line. The
// process exits nonzero if any block fails, so CI can gate on it directly.
//
// These intentionally re-derive expected values with local code instead of
// calling back into the library wherever an independent check is possible.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "sculptor/bound.hpp"
#include "sculptor/curation.hpp"
#include "sculptor/dataset.hpp"
#include "sculptor/fusion.hpp"
#include "sculptor/reference.hpp"
#include "sculptor/rng.hpp"
#include "sculptor/semantic.hpp"
#include "sculptor/structural.hpp"

using namespace sculptor;

namespace {

int failures = 0;

void criterion(const char* name, const std::function<bool()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool ok = false;
  std::string error;
  try {
    ok = body();
  } catch (const std::exception& e) {
    error = e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] %-38s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name, secs,
              error.empty() ? "" : " error: ", error.c_str());
  if (!ok) ++failures;
}

GraphRecord random_graph(std::string id, Rng& rng, std::uint32_t min_nodes,
                         std::uint32_t max_nodes) {
  const auto n = static_cast<std::uint32_t>(min_nodes + rng.below(max_nodes - min_nodes + 1));
  std::set<std::pair<std::uint32_t, std::uint32_t>> edges;
  const std::size_t attempts = rng.below(3 * n + 1);
  for (std::size_t i = 0; i < attempts; ++i) {
    auto u = static_cast<std::uint32_t>(rng.below(n));
    auto v = static_cast<std::uint32_t>(rng.below(n));
    if (u > v) std::swap(u, v);
    edges.insert({u, v});
  }
  GraphRecord g;
  g.id = std::move(id);
  g.num_nodes = n;
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

// ---------------------------------------------------------------------------

// With replacement, the mean simulated loss gap must match the closed-form
// bound (the linearized construction makes it the equality case); without
// replacement the gap may only improve. Checked for the uniform allocation,
// the optimal one, and two random ones.
bool gap_bound_equality() {
  const std::uint64_t problem_seed = 11;
  const auto problem = synth_problem(2000, 5, 16, 2.0, problem_seed);
  const auto pi = cluster_masses(problem);
  const auto v2 = cluster_variance(problem);
  const std::size_t m_target = 200;
  const std::size_t trials = 10000;

  std::vector<Allocation> allocations;
  allocations.push_back(make_allocation(std::vector<double>(5, 0.2), m_target));
  allocations.push_back(optimal_allocation(pi, v2, m_target));
  Rng rng(derive_seed(problem_seed, 0x73696d));
  for (int extra = 0; extra < 2; ++extra) {
    std::vector<double> q(5);
    double total = 0.0;
    for (double& x : q) {
      x = -std::log(rng.uniform_open());
      total += x;
    }
    for (double& x : q) x /= total;
    allocations.push_back(make_allocation(q, m_target));
  }

  bool ok = true;
  for (std::size_t a = 0; a < allocations.size(); ++a) {
    std::vector<double> q_eff(5);
    for (std::size_t j = 0; j < 5; ++j)
      q_eff[j] = static_cast<double>(allocations[a].counts[j]) / static_cast<double>(m_target);
    const double bound =
        bound_rhs(problem.smoothness, problem.steps, problem.eta, m_target, pi, v2, q_eff);

    const auto wr = simulate_gap(problem, allocations[a], trials, derive_seed(problem_seed, 2 * a),
                                 SampleMode::with_replacement);
    const double err = std::abs(wr.mean - bound);
    if (err > 0.05 * bound) ok = false;        // 5% relative
    if (err > wr.half_width_99) ok = false;    // and inside the 99% interval

    const auto wor = simulate_gap(problem, allocations[a], trials,
                                  derive_seed(problem_seed, 2 * a + 1),
                                  SampleMode::without_replacement);
    if (wor.mean > bound) ok = false;
  }
  return ok;
}

// The proportional-to-pi-times-std allocation must minimize the bound over
// the share simplex: strictly better than 1000 random allocations except
// within 1e-9 of itself.
bool allocation_optimality() {
  const auto problem = synth_problem(2000, 5, 16, 2.0, 11);
  const auto pi = cluster_masses(problem);
  const auto v2 = cluster_variance(problem);
  const std::size_t m_target = 200;

  const auto opt = optimal_allocation(pi, v2, m_target);
  const double at_opt =
      bound_rhs(problem.smoothness, problem.steps, problem.eta, m_target, pi, v2, opt.q);
  const double tol = 1e-9 * std::max(1.0, at_opt);

  bool ok = true;
  Rng rng(derive_seed(11, 0x72656d61726bULL));
  for (int check = 0; check < 1000; ++check) {
    std::vector<double> q(5);
    double total = 0.0;
    for (double& x : q) {
      x = -std::log(rng.uniform_open());
      total += x;
    }
    double linf = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      q[j] /= total;
      linf = std::max(linf, std::abs(q[j] - opt.q[j]));
    }
    const double b = bound_rhs(problem.smoothness, problem.steps, problem.eta, m_target, pi, v2, q);
    if (at_opt > b + tol) ok = false;                    // never worse
    if (b - at_opt <= tol && linf > 1e-9) ok = false;    // ties only at q* itself
  }
  return ok;
}

// Weighted sampling without replacement against exact enumeration: weights
// (2, 1, 1) drawing 2 items. Inclusion marginals (5/6, 7/12, 7/12); subset
// probabilities {0,1}: 5/12, {0,2}: 5/12, {1,2}: 1/6. 100000 trials, +-0.02.
bool weighted_sampling_oracle() {
  const std::vector<double> weights = {2.0, 1.0, 1.0};
  const std::size_t trials = 100000;

  std::vector<std::size_t> inclusion(3, 0);
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> subsets;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto picks = wrs_without_replacement(weights, 2, derive_seed(0x77727342, t));
    for (const auto i : picks) inclusion[i] += 1;
    subsets[{picks[0], picks[1]}] += 1;  // already sorted ascending
  }

  const auto freq = [&](std::size_t count) {
    return static_cast<double>(count) / static_cast<double>(trials);
  };
  bool ok = true;
  if (std::abs(freq(inclusion[0]) - 5.0 / 6.0) > 0.02) ok = false;
  if (std::abs(freq(inclusion[1]) - 7.0 / 12.0) > 0.02) ok = false;
  if (std::abs(freq(inclusion[2]) - 7.0 / 12.0) > 0.02) ok = false;
  if (std::abs(freq(subsets[{0, 1}]) - 5.0 / 12.0) > 0.02) ok = false;
  if (std::abs(freq(subsets[{0, 2}]) - 5.0 / 12.0) > 0.02) ok = false;
  if (std::abs(freq(subsets[{1, 2}]) - 1.0 / 6.0) > 0.02) ok = false;
  return ok;
}

// Lloyd never lets the objective rise, across 100 seeds; and two blobs
// separated by 10x their radius are recovered exactly for 20 seeds.
bool kmeans_monotone_and_recovers() {
  bool ok = true;

  Rng data_rng(314159);
  FeatureMatrix cloud(240, 6);
  for (double& x : cloud.data) x = data_rng.normal();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto clustering = kmeans(cloud, 8, seed);
    const auto& h = clustering.objective_history;
    if (h.empty()) ok = false;
    for (std::size_t i = 1; i < h.size(); ++i)
      if (h[i] > h[i - 1]) ok = false;
  }

  const std::size_t per_blob = 100;
  const double radius = 1.0, separation = 10.0;
  Rng blob_rng(27182818);
  FeatureMatrix blobs(2 * per_blob, 2);
  for (std::size_t i = 0; i < 2 * per_blob; ++i) {
    blobs.at(i, 0) = (i < per_blob ? 0.0 : separation) + radius * blob_rng.normal();
    blobs.at(i, 1) = radius * blob_rng.normal();
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto clustering = kmeans(blobs, 2, seed);
    const auto first = clustering.assignments[0];
    for (std::size_t i = 0; i < per_blob; ++i)
      if (clustering.assignments[i] != first) ok = false;
    for (std::size_t i = per_blob; i < 2 * per_blob; ++i)
      if (clustering.assignments[i] != 1 - first) ok = false;
  }
  return ok;
}

// Standardized non-constant columns: |mean| < 1e-9, |var - 1| < 1e-9;
// constant columns map to zeros; rescaling input columns moves the fused
// output by at most 1e-12.
bool fusion_standardization() {
  bool ok = true;
  Rng rng(606060);

  FeatureMatrix structural(400, 6);
  for (std::size_t i = 0; i < structural.rows; ++i)
    for (std::size_t j = 0; j < structural.cols; ++j)
      structural.at(i, j) = (j + 1) * 10.0 + (j + 1) * 3.0 * rng.normal();
  for (std::size_t i = 0; i < structural.rows; ++i) structural.at(i, 2) = 42.0;  // constant

  FeatureMatrix semantic(400, 5);
  for (double& x : semantic.data) x = 0.01 * rng.normal();

  const auto fused = fuse(structural, semantic);
  for (std::size_t j = 0; j < fused.matrix.cols; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < fused.matrix.rows; ++i) sum += fused.matrix.at(i, j);
    const double mean = sum / static_cast<double>(fused.matrix.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < fused.matrix.rows; ++i) {
      const double d = fused.matrix.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(fused.matrix.rows);

    if (j == 2) {
      for (std::size_t i = 0; i < fused.matrix.rows; ++i)
        if (fused.matrix.at(i, j) != 0.0) ok = false;
    } else {
      if (std::abs(mean) >= 1e-9) ok = false;
      if (std::abs(var - 1.0) >= 1e-9) ok = false;
    }
  }

  auto rescaled = structural;
  const double factors[6] = {1000.0, 1e-5, 1.0, 7.5, 250.0, 0.02};
  for (std::size_t i = 0; i < rescaled.rows; ++i)
    for (std::size_t j = 0; j < rescaled.cols; ++j) rescaled.at(i, j) *= factors[j];
  const auto fused2 = fuse(rescaled, semantic);
  for (std::size_t i = 0; i < fused.matrix.data.size(); ++i)
    if (std::abs(fused2.matrix.data[i] - fused.matrix.data[i]) > 1e-12) ok = false;
  return ok;
}

// Sparse walk propagation against a dense matrix-power oracle on 50 random
// graphs of at most 12 nodes, within 1e-10; and descriptors must not move at
// all under 20 random node relabelings per graph.
bool structural_oracle_and_invariance() {
  bool ok = true;
  Rng rng(505);
  const StructuralConfig config{.rw_steps = 8, .include_basic = true};

  for (int trial = 0; trial < 50; ++trial) {
    GraphRecord g = random_graph("g" + std::to_string(trial), rng, 1, 12);

    const auto got = structural_descriptor(g, config);
    const auto want = reference::dense_descriptor(g, config);
    if (got.size() != want.size()) return false;
    for (std::size_t i = 0; i < got.size(); ++i)
      if (std::abs(got[i] - want[i]) > 1e-10) ok = false;

    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::uint32_t> perm(g.num_nodes);
      std::iota(perm.begin(), perm.end(), 0u);
      for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);

      GraphRecord relabeled = g;
      relabeled.edges.clear();
      for (const auto& [u, v] : g.edges) {
        auto a = perm[u];
        auto b = perm[v];
        if (a > b) std::swap(a, b);
        relabeled.edges.emplace_back(a, b);
      }
      std::sort(relabeled.edges.begin(), relabeled.edges.end());

      const auto moved = structural_descriptor(relabeled, config);
      if (moved != got) ok = false;  // bitwise
    }
  }
  return ok;
}

// Full pipeline on 1000 synthetic graphs (5 to 50 nodes): structural
// descriptors, hash embeddings at dim 64, fusion, then selection with K=16 at
// 10% retention. Exactly 100 unique ids, byte-identical manifests on a rerun,
// and the whole thing twice inside 10 seconds.
bool pipeline_determinism_at_scale() {
  const auto start = std::chrono::steady_clock::now();

  Rng rng(987654321);
  std::vector<GraphRecord> graphs;
  graphs.reserve(1000);
  for (int i = 0; i < 1000; ++i)
    graphs.push_back(random_graph("graph-" + std::to_string(i), rng, 5, 50));
  const Dataset dataset(std::move(graphs));

  const auto run = [&] {
    const auto structural = structural_features(dataset, {});
    const auto semantic = hash_embeddings(dataset, 64);
    const auto fused = fuse(structural, semantic.matrix);
    CurationConfig config;
    config.p_target = 0.1;
    config.clusters = 16;
    config.seed = 20240821;
    return manifest_json(select_coreset(dataset.ids(), fused, config));
  };

  const std::string first = run();
  const std::string second = run();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto manifest = parse_manifest(first);
  std::set<std::string> unique(manifest.selected_ids.begin(), manifest.selected_ids.end());

  bool ok = true;
  if (manifest.selected_ids.size() != 100) ok = false;
  if (unique.size() != 100) ok = false;
  for (const auto& id : manifest.selected_ids)
    if (!dataset.find(id)) ok = false;
  if (first != second) ok = false;
  if (secs >= 10.0) ok = false;
  return ok;
}

// Quota arithmetic: the two fixed traces, and the min-quota guarantee that
// every nonempty cluster contributes to the manifest when the budget allows.
bool quota_arithmetic() {
  bool ok = true;
  if (quotas({0.8, 0.2}, 10, {100, 100}) != std::vector<std::size_t>{8, 2}) ok = false;
  if (quotas({0.5, 0.5}, 10, {3, 100}) != std::vector<std::size_t>{3, 7}) ok = false;

  // A sharpened softmax would starve small clusters; min_quota must not.
  Rng rng(112233);
  FeatureMatrix points(300, 4);
  for (double& x : points.data) x = rng.normal();
  std::vector<std::string> ids;
  for (int i = 0; i < 300; ++i) ids.push_back("p" + std::to_string(i));

  CurationConfig config;
  config.p_target = 0.1;  // 30 >= 12 clusters
  config.clusters = 12;
  config.tau = 0.05;      // nearly winner-take-all proportions
  config.min_quota = true;
  const auto manifest = select_coreset(ids, fuse(points, FeatureMatrix(300, 0)), config);

  std::size_t total = 0;
  for (const auto& cluster : manifest.clusters) {
    if (cluster.size > 0 && cluster.quota == 0) ok = false;
    if (cluster.ids.size() != cluster.quota) ok = false;
    total += cluster.quota;
  }
  if (total != manifest.m_target) ok = false;
  return ok;
}

// Baseline contracts: the k-center trace on (0, 1, 10) picks 10 then 0, and
// herding beats the median random draw at matching the data mean on a 2-D
// Gaussian with 500 points and a budget of 50.
bool baseline_traces_and_mean_matching() {
  bool ok = true;

  FeatureMatrix line(3, 1);
  line.at(0, 0) = 0.0;
  line.at(1, 0) = 1.0;
  line.at(2, 0) = 10.0;
  if (baseline_kcenter(line, 2) != std::vector<std::size_t>{2, 0}) ok = false;

  Rng rng(777);
  FeatureMatrix points(500, 2);
  for (double& x : points.data) x = rng.normal();

  std::vector<double> mean(2, 0.0);
  for (std::size_t i = 0; i < points.rows; ++i)
    for (std::size_t j = 0; j < 2; ++j) mean[j] += points.at(i, j);
  for (double& x : mean) x /= 500.0;

  const auto gap_norm = [&](const std::vector<std::size_t>& sel) {
    double gx = 0.0, gy = 0.0;
    for (const auto i : sel) {
      gx += points.at(i, 0);
      gy += points.at(i, 1);
    }
    gx = gx / static_cast<double>(sel.size()) - mean[0];
    gy = gy / static_cast<double>(sel.size()) - mean[1];
    return std::sqrt(gx * gx + gy * gy);
  };

  std::vector<double> random_gaps;
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    random_gaps.push_back(gap_norm(baseline_random(500, 50, seed)));
  std::sort(random_gaps.begin(), random_gaps.end());
  const double median =
      0.5 * (random_gaps[24] + random_gaps[25]);

  if (gap_norm(baseline_herding(points, 50)) >= median) ok = false;
  return ok;
}

}  // namespace

int main() {
  std::printf("release acceptance checks\n");

  // The two Monte-Carlo blocks carry their own deadline on top of passing.
  const auto timed = [](double limit, const std::function<bool()>& body) {
    return [limit, body] {
      const auto start = std::chrono::steady_clock::now();
      const bool ok = body();
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      return ok && secs < limit;
    };
  };

  criterion("gap-meets-bound-with-replacement", timed(30.0, gap_bound_equality));
  criterion("optimal-allocation-minimizes-bound", allocation_optimality);
  criterion("weighted-sampling-matches-oracle", timed(10.0, weighted_sampling_oracle));
  criterion("kmeans-monotone-and-blob-recovery", kmeans_monotone_and_recovers);
  criterion("fusion-standardization", fusion_standardization);
  criterion("structural-oracle-and-invariance", structural_oracle_and_invariance);
  criterion("pipeline-determinism-at-scale", pipeline_determinism_at_scale);
  criterion("quota-arithmetic", quota_arithmetic);
  criterion("baseline-traces-and-mean-matching", baseline_traces_and_mean_matching);

  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
