#include "sculptor/structural.hpp"

#include <algorithm>
#include <cmath>

#include "sculptor/error.hpp"

namespace sculptor {

namespace {

void check_config(const StructuralConfig& config) {
  if (config.rw_steps < 1)
    throw ValidationError("rw_steps must be >= 1, got " + std::to_string(config.rw_steps));
}

// Neighbor multiset per node: an (u,v) edge contributes v to adj[u] and u to
// adj[v]; a self-loop therefore lands twice, so row sums of A match degrees
// and M = D^-1 A stays stochastic. Isolated nodes get a unit self-transition.
std::vector<std::vector<std::uint32_t>> walk_adjacency(const GraphRecord& graph) {
  std::vector<std::vector<std::uint32_t>> adj(graph.num_nodes);
  for (const auto& [u, v] : graph.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (std::uint32_t v = 0; v < graph.num_nodes; ++v) {
    if (adj[v].empty()) adj[v].push_back(v);
    std::sort(adj[v].begin(), adj[v].end());
  }
  return adj;
}

// Sum with summands in sorted order. Together with the bitwise-identical
// per-term products below, this makes every walk statistic invariant under
// node relabeling, not just up to rounding.
double sorted_sum(std::vector<double>& buf) {
  std::sort(buf.begin(), buf.end());
  double acc = 0.0;
  for (double x : buf) acc += x;
  return acc;
}

}  // namespace

std::size_t descriptor_dim(const StructuralConfig& config) {
  return (config.include_basic ? 3 : 0) + 2 * static_cast<std::size_t>(config.rw_steps);
}

std::array<double, 3> basic_invariants(const GraphRecord& graph) {
  const double n = static_cast<double>(graph.num_nodes);
  const double m = static_cast<double>(graph.edges.size());
  return {n, m, 2.0 * m / n};
}

std::vector<std::vector<double>> rw_return_probabilities(const GraphRecord& graph, int steps) {
  const std::size_t n = graph.num_nodes;
  const auto adj = walk_adjacency(graph);
  std::vector<double> inv_deg(n);
  for (std::size_t v = 0; v < n; ++v) inv_deg[v] = 1.0 / static_cast<double>(adj[v].size());

  std::vector<std::vector<double>> diag(steps, std::vector<double>(n, 0.0));
  std::vector<double> cur(n), next(n);
  std::vector<double> buf;

  for (std::size_t source = 0; source < n; ++source) {
    std::fill(cur.begin(), cur.end(), 0.0);
    cur[source] = 1.0;
    for (int t = 0; t < steps; ++t) {
      for (std::size_t u = 0; u < n; ++u) {
        buf.clear();
        for (std::uint32_t w : adj[u]) {
          if (cur[w] != 0.0) buf.push_back(cur[w] * inv_deg[w]);
        }
        next[u] = sorted_sum(buf);
      }
      std::swap(cur, next);
      diag[t][source] = cur[source];
    }
  }
  return diag;
}

std::vector<double> rw_signature(const GraphRecord& graph, int rw_steps) {
  StructuralConfig probe{rw_steps, false};
  check_config(probe);

  const auto diag = rw_return_probabilities(graph, rw_steps);
  const double n = static_cast<double>(graph.num_nodes);

  std::vector<double> out;
  out.reserve(2 * static_cast<std::size_t>(rw_steps));
  std::vector<double> buf;
  for (const auto& step_diag : diag) {
    buf = step_diag;
    const double mean = sorted_sum(buf) / n;
    buf.clear();
    for (double p : step_diag) {
      const double d = p - mean;
      buf.push_back(d * d);
    }
    const double var = sorted_sum(buf) / n;
    out.push_back(mean);
    out.push_back(std::sqrt(var));
  }
  return out;
}

std::vector<double> structural_descriptor(const GraphRecord& graph, const StructuralConfig& config) {
  check_config(config);
  std::vector<double> out;
  out.reserve(descriptor_dim(config));
  if (config.include_basic) {
    const auto basic = basic_invariants(graph);
    out.insert(out.end(), basic.begin(), basic.end());
  }
  const auto walk = rw_signature(graph, config.rw_steps);
  out.insert(out.end(), walk.begin(), walk.end());
  return out;
}

FeatureMatrix structural_features(const Dataset& dataset, const StructuralConfig& config) {
  check_config(config);
  FeatureMatrix mat(dataset.size(), descriptor_dim(config));
  const auto count = static_cast<std::int64_t>(dataset.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto desc = structural_descriptor(dataset[static_cast<std::size_t>(i)], config);
    auto row = mat.row(static_cast<std::size_t>(i));
    std::copy(desc.begin(), desc.end(), row.begin());
  }
  return mat;
}

}  // namespace sculptor
