#include "sculptor/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "sculptor/error.hpp"
#include "sculptor/rng.hpp"

namespace sculptor {

std::size_t default_cluster_count(std::size_t m) {
  if (m == 0) return 0;
  const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(m))));
  return std::min(m, std::clamp<std::size_t>(k, 2, 64));
}

namespace {

// Index of the nearest centroid, ties resolved to the lowest index.
std::uint32_t nearest_centroid(std::span<const double> point, const FeatureMatrix& centroids,
                               double* dist_sq = nullptr) {
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = squared_distance(point, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  if (dist_sq) *dist_sq = best_d;
  return best;
}

// Assign every point, stash per-point min distances, and return the objective
// accumulated serially in row order so thread count cannot perturb it.
double assign_points(const FeatureMatrix& points, const FeatureMatrix& centroids,
                     std::vector<std::uint32_t>& assignments, std::vector<double>& dist_sq) {
  const auto rows = static_cast<std::int64_t>(points.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    assignments[idx] = nearest_centroid(points.row(idx), centroids, &dist_sq[idx]);
  }
  double objective = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) objective += dist_sq[i];
  return objective;
}

// The dataset point farthest from `from`, skipping points already claimed by
// another re-seed this round. Ties to the lowest index.
std::size_t farthest_point(const FeatureMatrix& points, std::span<const double> from,
                           const std::vector<char>& claimed) {
  const auto rows = static_cast<std::int64_t>(points.rows);
  std::vector<double> d(points.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i)
    d[static_cast<std::size_t>(i)] = squared_distance(points.row(static_cast<std::size_t>(i)), from);

  std::size_t best = points.rows;
  double best_d = -1.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    if (claimed[i]) continue;
    if (d[i] > best_d) {
      best_d = d[i];
      best = i;
    }
  }
  return best;
}

}  // namespace

FeatureMatrix kmeanspp_init(const FeatureMatrix& points, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw ValidationError("cluster count must be >= 1");
  if (k > points.rows)
    throw ValidationError("cluster count " + std::to_string(k) + " exceeds " +
                          std::to_string(points.rows) + " points");

  FeatureMatrix centroids(k, points.cols);
  std::vector<char> chosen(points.rows, 0);
  Rng rng(seed);

  const std::size_t first = static_cast<std::size_t>(rng.below(points.rows));
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
  chosen[first] = 1;

  std::vector<double> d2(points.rows);
  const auto rows = static_cast<std::int64_t>(points.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i)
    d2[static_cast<std::size_t>(i)] =
        squared_distance(points.row(static_cast<std::size_t>(i)), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.rows; ++i) total += d2[i];

    std::size_t pick = points.rows;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      std::size_t last_positive = points.rows;
      for (std::size_t i = 0; i < points.rows; ++i) {
        if (d2[i] <= 0.0) continue;
        last_positive = i;
        cum += d2[i];
        if (cum > u) {
          pick = i;
          break;
        }
      }
      if (pick == points.rows) pick = last_positive;  // u landed on the cumulative total
    } else {
      // Every remaining point coincides with a chosen centroid.
      for (std::size_t i = 0; i < points.rows; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
    }
    chosen[pick] = 1;
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      d2[idx] = std::min(d2[idx], squared_distance(points.row(idx), centroids.row(c)));
    }
  }
  return centroids;
}

Clustering lloyd(const FeatureMatrix& points, const FeatureMatrix& init,
                 const KMeansConfig& config) {
  if (points.rows == 0) throw ValidationError("cannot cluster an empty matrix");
  if (init.rows < 1 || init.rows > points.rows)
    throw ValidationError("initial centroid count must be in [1, number of points]");
  if (init.cols != points.cols)
    throw ValidationError("centroid dimension does not match points");

  const std::size_t k = init.rows;
  Clustering result;
  result.centroids = init;
  result.assignments.assign(points.rows, 0);

  std::vector<double> dist_sq(points.rows);
  double objective = assign_points(points, result.centroids, result.assignments, dist_sq);
  result.objective_history.push_back(objective);

  std::vector<std::vector<std::size_t>> members(k);
  for (int iter = 0; iter < config.max_iter; ++iter) {
    for (auto& m : members) m.clear();
    for (std::size_t i = 0; i < points.rows; ++i) members[result.assignments[i]].push_back(i);

    // Member means accumulate in index order within each cluster; clusters run
    // in parallel since they touch disjoint centroid rows.
    const auto num_clusters = static_cast<std::int64_t>(k);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t cc = 0; cc < num_clusters; ++cc) {
      const auto c = static_cast<std::size_t>(cc);
      if (members[c].empty()) continue;  // handled below, serially
      auto centroid = result.centroids.row(c);
      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (const std::size_t i : members[c]) {
        const auto p = points.row(i);
        for (std::size_t j = 0; j < points.cols; ++j) centroid[j] += p[j];
      }
      const double inv = 1.0 / static_cast<double>(members[c].size());
      for (std::size_t j = 0; j < points.cols; ++j) centroid[j] *= inv;
    }

    std::vector<char> claimed(points.rows, 0);
    for (std::size_t c = 0; c < k; ++c) {
      if (!members[c].empty()) continue;
      const std::size_t p = farthest_point(points, result.centroids.row(c), claimed);
      if (p == points.rows) continue;  // more clusters than unclaimed points
      claimed[p] = 1;
      std::copy(points.row(p).begin(), points.row(p).end(), result.centroids.row(c).begin());
    }

    const double prev = objective;
    objective = assign_points(points, result.centroids, result.assignments, dist_sq);
    result.objective_history.push_back(objective);
    result.iterations = iter + 1;

    if (prev <= 0.0) break;
    if ((prev - objective) / prev < config.tol) break;
  }

  result.objective = objective;
  return result;
}

Clustering kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed,
                  const KMeansConfig& config) {
  return lloyd(points, kmeanspp_init(points, k, seed), config);
}

ClusterStats cluster_stats(const FeatureMatrix& points, const Clustering& clustering) {
  const std::size_t k = clustering.centroids.rows;
  const std::size_t m = points.rows;

  ClusterStats stats;
  stats.sizes.assign(k, 0);
  stats.pi.assign(k, 0.0);
  stats.d_intra.assign(k, 0.0);
  stats.d_inter.assign(k, 0.0);
  stats.sigma.assign(k, 0.0);

  std::vector<double> sum_sq(k, 0.0);
  std::vector<double> sum_dist(k, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint32_t c = clustering.assignments[i];
    const double d2 = squared_distance(points.row(i), clustering.centroids.row(c));
    ++stats.sizes[c];
    sum_sq[c] += d2;
    sum_dist[c] += std::sqrt(d2);
  }

  for (std::size_t c = 0; c < k; ++c) {
    const auto n = static_cast<double>(stats.sizes[c]);
    stats.pi[c] = m > 0 ? n / static_cast<double>(m) : 0.0;
    const double rms = stats.sizes[c] > 0 ? std::sqrt(sum_sq[c] / n) : 0.0;
    stats.d_intra[c] = std::max(rms, kStatsFloor);
    stats.sigma[c] = stats.sizes[c] > 0 ? sum_dist[c] / n : 0.0;

    if (k == 1) {
      stats.d_inter[c] = 1.0;  // neutral convention: no other centroid exists
    } else {
      double min_gap = std::numeric_limits<double>::infinity();
      for (std::size_t o = 0; o < k; ++o) {
        if (o == c) continue;
        min_gap = std::min(min_gap,
                           std::sqrt(squared_distance(clustering.centroids.row(c),
                                                      clustering.centroids.row(o))));
      }
      stats.d_inter[c] = std::max(min_gap, kStatsFloor);
    }
  }
  return stats;
}

std::string clustering_json(const Clustering& clustering, const ClusterStats& stats) {
  nlohmann::json doc;
  doc["objective"] = clustering.objective;
  doc["iterations"] = clustering.iterations;
  doc["objective_history"] = clustering.objective_history;
  doc["assignments"] = clustering.assignments;

  doc["centroids"] = nlohmann::json::array();
  for (std::size_t c = 0; c < clustering.centroids.rows; ++c) {
    const auto row = clustering.centroids.row(c);
    doc["centroids"].push_back(std::vector<double>(row.begin(), row.end()));
  }

  doc["clusters"] = nlohmann::json::array();
  for (std::size_t c = 0; c < stats.sizes.size(); ++c) {
    doc["clusters"].push_back({{"index", c},
                               {"size", stats.sizes[c]},
                               {"pi", stats.pi[c]},
                               {"d_intra", stats.d_intra[c]},
                               {"d_inter", stats.d_inter[c]},
                               {"sigma", stats.sigma[c]}});
  }
  return doc.dump(2);
}

}  // namespace sculptor
