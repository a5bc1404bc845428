#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sculptor/matrix.hpp"

namespace sculptor {

struct KMeansConfig {
  int max_iter = 300;
  double tol = 1e-6;  // relative objective decrease that counts as converged
};

struct Clustering {
  std::vector<std::uint32_t> assignments;  // per row, nearest centroid (ties to lowest index)
  FeatureMatrix centroids;
  double objective = 0.0;  // within-cluster sum of squared distances
  int iterations = 0;
  std::vector<double> objective_history;  // objective after each assignment pass
};

// K defaults to clamp(round(sqrt(M)), 2, 64), never exceeding M.
std::size_t default_cluster_count(std::size_t m);

// k-means++ seeding: first centroid uniform, each next drawn proportionally to
// squared distance from the nearest chosen one. Deterministic in the seed.
FeatureMatrix kmeanspp_init(const FeatureMatrix& points, std::size_t k, std::uint64_t seed);

// Lloyd iterations from the given centroids. An empty cluster is re-seeded to
// the point farthest from its stale centroid before the next update.
Clustering lloyd(const FeatureMatrix& points, const FeatureMatrix& init,
                 const KMeansConfig& config = {});

Clustering kmeans(const FeatureMatrix& points, std::size_t k, std::uint64_t seed,
                  const KMeansConfig& config = {});

// Quantities below 1e-12 are floored for d_intra and d_inter so the log-domain
// scoring downstream stays finite.
inline constexpr double kStatsFloor = 1e-12;

struct ClusterStats {
  std::vector<std::size_t> sizes;
  std::vector<double> pi;       // |C_j| / M
  std::vector<double> d_intra;  // RMS member-to-centroid distance
  std::vector<double> d_inter;  // min distance to any other centroid; 1 when K=1
  std::vector<double> sigma;    // mean member-to-centroid distance
};

ClusterStats cluster_stats(const FeatureMatrix& points, const Clustering& clustering);

// Audit dump: centroids, assignments, objective, iterations, per-cluster stats.
std::string clustering_json(const Clustering& clustering, const ClusterStats& stats);

}  // namespace sculptor
