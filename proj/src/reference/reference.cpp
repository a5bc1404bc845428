#include "sculptor/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sculptor/error.hpp"
#include "sculptor/semantic.hpp"

namespace sculptor::reference {

std::vector<std::vector<double>> dense_return_probabilities(const GraphRecord& graph, int steps) {
  if (steps < 1) throw ValidationError("walk length must be >= 1");
  const std::size_t n = graph.num_nodes;

  // Adjacency with self-loops counting twice, exactly the walk convention.
  std::vector<double> adjacency(n * n, 0.0);
  for (const auto& [u, v] : graph.edges) {
    adjacency[u * n + v] += 1.0;
    adjacency[v * n + u] += 1.0;
  }

  std::vector<double> walk(n * n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    double degree = 0.0;
    for (std::size_t w = 0; w < n; ++w) degree += adjacency[v * n + w];
    if (degree == 0.0) {
      walk[v * n + v] = 1.0;  // isolated nodes stay put
    } else {
      for (std::size_t w = 0; w < n; ++w) walk[v * n + w] = adjacency[v * n + w] / degree;
    }
  }

  std::vector<std::vector<double>> diags;
  diags.reserve(static_cast<std::size_t>(steps));
  std::vector<double> power = walk;
  std::vector<double> next(n * n);
  for (int t = 1; t <= steps; ++t) {
    if (t > 1) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t l = 0; l < n; ++l) acc += power[i * n + l] * walk[l * n + j];
          next[i * n + j] = acc;
        }
      power.swap(next);
    }
    std::vector<double> diag(n);
    for (std::size_t v = 0; v < n; ++v) diag[v] = power[v * n + v];
    diags.push_back(std::move(diag));
  }
  return diags;
}

std::vector<double> dense_descriptor(const GraphRecord& graph, const StructuralConfig& config) {
  std::vector<double> out;
  out.reserve(descriptor_dim(config));
  if (config.include_basic) {
    const auto n = static_cast<double>(graph.num_nodes);
    const auto e = static_cast<double>(graph.edges.size());
    out.push_back(n);
    out.push_back(e);
    out.push_back(2.0 * e / n);
  }

  for (const auto& diag : dense_return_probabilities(graph, config.rw_steps)) {
    double mean = 0.0;
    for (const double p : diag) mean += p;
    mean /= static_cast<double>(diag.size());
    double var = 0.0;
    for (const double p : diag) var += (p - mean) * (p - mean);
    var /= static_cast<double>(diag.size());
    out.push_back(mean);
    out.push_back(std::sqrt(var));
  }
  return out;
}

FeatureMatrix structural_features_serial(const Dataset& dataset, const StructuralConfig& config) {
  FeatureMatrix out(dataset.size(), descriptor_dim(config));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto desc = structural_descriptor(dataset[i], config);
    std::copy(desc.begin(), desc.end(), out.row(i).begin());
  }
  return out;
}

FeatureMatrix zscore_serial(const FeatureMatrix& input, std::vector<ColumnStats>* stats) {
  FeatureMatrix out(input.rows, input.cols);
  std::vector<ColumnStats> col_stats(input.cols);
  if (input.rows == 0) {
    for (auto& s : col_stats) s.constant = true;
    if (stats) *stats = std::move(col_stats);
    return out;
  }

  for (std::size_t j = 0; j < input.cols; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < input.rows; ++i) sum += input.at(i, j);
    const double mean = sum / static_cast<double>(input.rows);

    double sq = 0.0;
    for (std::size_t i = 0; i < input.rows; ++i) {
      const double d = input.at(i, j) - mean;
      sq += d * d;
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(input.rows));

    col_stats[j] = {mean, std_dev, std_dev < kConstantColumnStd};
    // Multiply by the reciprocal, same as the parallel kernel, so the two
    // agree bitwise and not just approximately.
    const double inv = col_stats[j].constant ? 0.0 : 1.0 / std_dev;
    for (std::size_t i = 0; i < input.rows; ++i)
      out.at(i, j) = col_stats[j].constant ? 0.0 : (input.at(i, j) - mean) * inv;
  }
  if (stats) *stats = std::move(col_stats);
  return out;
}

FeatureMatrix hash_embeddings_serial(const Dataset& dataset, int dim) {
  FeatureMatrix out(dataset.size(), static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto vec = hash_embed(serialize_graph_text(dataset[i]), dim);
    std::copy(vec.begin(), vec.end(), out.row(i).begin());
  }
  return out;
}

Clustering lloyd_serial(const FeatureMatrix& points, const FeatureMatrix& init,
                        const KMeansConfig& config) {
  if (points.rows == 0) throw ValidationError("cannot cluster an empty matrix");
  if (init.rows < 1 || init.rows > points.rows || init.cols != points.cols)
    throw ValidationError("bad initial centroids");

  const std::size_t k = init.rows;
  Clustering result;
  result.centroids = init;
  result.assignments.assign(points.rows, 0);

  const auto assign = [&]() {
    double objective = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      std::uint32_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points.row(i), result.centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = static_cast<std::uint32_t>(c);
        }
      }
      result.assignments[i] = best;
      objective += best_d;
    }
    return objective;
  };

  double objective = assign();
  result.objective_history.push_back(objective);

  for (int iter = 0; iter < config.max_iter; ++iter) {
    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < points.rows; ++i) members[result.assignments[i]].push_back(i);

    for (std::size_t c = 0; c < k; ++c) {
      if (members[c].empty()) continue;
      auto centroid = result.centroids.row(c);
      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (const std::size_t i : members[c])
        for (std::size_t j = 0; j < points.cols; ++j) centroid[j] += points.at(i, j);
      // Reciprocal multiply, matching the parallel kernel bit for bit.
      const double inv = 1.0 / static_cast<double>(members[c].size());
      for (std::size_t j = 0; j < points.cols; ++j) centroid[j] *= inv;
    }

    std::vector<char> claimed(points.rows, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (!members[c].empty()) continue;
      std::size_t far = points.rows;
      double far_d = -1.0;
      for (std::size_t i = 0; i < points.rows; ++i) {
        if (claimed[i]) continue;
        const double d = squared_distance(points.row(i), result.centroids.row(c));
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      if (far == points.rows) continue;
      claimed[far] = 1;
      std::copy(points.row(far).begin(), points.row(far).end(), result.centroids.row(c).begin());
    }

    const double prev = objective;
    objective = assign();
    result.objective_history.push_back(objective);
    result.iterations = iter + 1;
    if (prev <= 0.0) break;
    if ((prev - objective) / prev < config.tol) break;
  }

  result.objective = objective;
  return result;
}

std::vector<std::size_t> sequential_wrs(const std::vector<double>& weights, std::size_t n,
                                        Rng& rng) {
  std::vector<std::size_t> remaining;
  std::vector<double> w;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw ValidationError("weights must be finite and >= 0");
    if (weights[i] > 0.0) {
      remaining.push_back(i);
      w.push_back(weights[i]);
    }
  }
  if (remaining.size() < n)
    throw ValidationError("fewer than " + std::to_string(n) + " positive weights");

  std::vector<std::size_t> picked;
  picked.reserve(n);
  for (std::size_t draw = 0; draw < n; ++draw) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const double u = rng.uniform() * total;
    double cum = 0.0;
    std::size_t hit = remaining.size() - 1;
    for (std::size_t i = 0; i < remaining.size(); ++i) {
      cum += w[i];
      if (cum > u) {
        hit = i;
        break;
      }
    }
    picked.push_back(remaining[hit]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(hit));
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(hit));
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::vector<std::size_t> kcenter_serial(const FeatureMatrix& points, std::size_t m_target) {
  if (m_target < 1 || m_target > points.rows) throw ValidationError("bad selection target");

  std::vector<double> mean(points.cols, 0.0);
  for (std::size_t i = 0; i < points.rows; ++i)
    for (std::size_t j = 0; j < points.cols; ++j) mean[j] += points.at(i, j);
  for (auto& v : mean) v /= static_cast<double>(points.rows);

  std::vector<double> min_d2(points.rows);
  for (std::size_t i = 0; i < points.rows; ++i)
    min_d2[i] = squared_distance(points.row(i), std::span<const double>(mean.data(), mean.size()));

  std::vector<char> selected(points.rows, 0);
  std::vector<std::size_t> picks;
  std::size_t first = 0;
  for (std::size_t i = 1; i < points.rows; ++i)
    if (min_d2[i] > min_d2[first]) first = i;
  picks.push_back(first);
  selected[first] = 1;

  while (picks.size() < m_target) {
    const std::size_t last = picks.back();
    for (std::size_t i = 0; i < points.rows; ++i) {
      const double d2 = squared_distance(points.row(i), points.row(last));
      if (picks.size() == 1 || d2 < min_d2[i]) min_d2[i] = d2;
    }
    std::size_t best = points.rows;
    for (std::size_t i = 0; i < points.rows; ++i) {
      if (selected[i]) continue;
      if (best == points.rows || min_d2[i] > min_d2[best]) best = i;
    }
    picks.push_back(best);
    selected[best] = 1;
  }
  return picks;
}

std::vector<std::size_t> herding_serial(const FeatureMatrix& points, std::size_t m_target) {
  if (m_target < 1 || m_target > points.rows) throw ValidationError("bad selection target");

  std::vector<double> mean(points.cols, 0.0);
  for (std::size_t i = 0; i < points.rows; ++i)
    for (std::size_t j = 0; j < points.cols; ++j) mean[j] += points.at(i, j);
  for (auto& v : mean) v /= static_cast<double>(points.rows);

  std::vector<double> w = mean;
  std::vector<char> selected(points.rows, 0);
  std::vector<std::size_t> picks;
  while (picks.size() < m_target) {
    std::size_t best = points.rows;
    double best_score = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) {
      if (selected[i]) continue;
      double score = 0.0;
      for (std::size_t j = 0; j < points.cols; ++j) score += w[j] * points.at(i, j);
      if (best == points.rows || score > best_score) {
        best = i;
        best_score = score;
      }
    }
    picks.push_back(best);
    selected[best] = 1;
    for (std::size_t j = 0; j < points.cols; ++j) w[j] += mean[j] - points.at(best, j);
  }
  return picks;
}

}  // namespace sculptor::reference
