#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sculptor/clustering.hpp"
#include "sculptor/fusion.hpp"
#include "sculptor/matrix.hpp"

namespace sculptor {

enum class SigmaMode { data_driven, fixed, infinite };

std::string sigma_mode_name(SigmaMode mode);
SigmaMode parse_sigma_mode(const std::string& name);

struct CurationConfig {
  double p_target = 0.5;
  double w = 0.5;           // intra/inter trade-off in cluster scores
  double tau = 0.5;         // softmax temperature
  std::size_t clusters = 0;  // 0 means the clustering default for M rows
  std::uint64_t seed = 42;
  bool min_quota = false;   // guarantee >=1 per nonempty cluster when feasible
  SigmaMode sigma_mode = SigmaMode::data_driven;
  double sigma_value = 1.0;  // bandwidth when sigma_mode is fixed
  KMeansConfig kmeans;
};

// Omega_j = log(pi_j) + w*log(d_intra_j) + (1-w)*log(d_inter_j), natural log.
// Empty clusters (pi = 0) come out as -inf and receive no quota downstream.
std::vector<double> cluster_scores(const ClusterStats& stats, double w);

// Max-subtracted softmax of Omega / tau.
std::vector<double> softmax_proportions(const std::vector<double>& omega, double tau);

// Floor rule with the remainder on the last cluster, then feasibility repair
// against cluster sizes. With min_quota set and budget >= #nonempty clusters,
// every nonempty cluster keeps at least one slot.
std::vector<std::size_t> quotas(const std::vector<double>& proportions, std::size_t m_target,
                                const std::vector<std::size_t>& sizes, bool min_quota = false);

// Sampling probabilities over `members`, proportional to exp(-d^2/(2 sigma^2))
// from the centroid. Uniform when sigma is 0 or mode is infinite.
std::vector<double> within_cluster_probs(const FeatureMatrix& points,
                                         const std::vector<std::size_t>& members,
                                         std::span<const double> centroid, double sigma,
                                         SigmaMode mode);

// Weighted sampling without replacement by the exponential-key method: item i
// draws key log(u_i)/w_i, the n largest win. Zero-weight items are excluded
// and consume no randomness. Returns indices in ascending order.
std::vector<std::size_t> wrs_without_replacement(const std::vector<double>& weights, std::size_t n,
                                                 std::uint64_t seed);

struct ClusterReport {
  std::size_t index = 0;
  std::size_t size = 0;
  double pi = 0.0;
  double d_intra = 0.0;
  double d_inter = 0.0;
  double sigma = 0.0;
  double omega = 0.0;
  double proportion = 0.0;
  std::size_t quota = 0;
  std::vector<std::string> ids;  // drawn members, dataset order
};

struct CoresetManifest {
  std::vector<std::string> selected_ids;  // cluster-index order, dataset order within
  std::size_t m_target = 0;
  std::uint64_t seed = 0;
  CurationConfig config;
  std::vector<ClusterReport> clusters;
  std::string checksum;  // SHA-256 over the serialization minus this field
};

// Full pipeline: cluster, score, allocate, sample. Deterministic in
// (ids, fused, config); per-cluster draws use seeds derived from the master.
CoresetManifest select_coreset(const std::vector<std::string>& ids, const FusedMatrix& fused,
                               const CurationConfig& config);

std::string manifest_json(const CoresetManifest& manifest);
CoresetManifest parse_manifest(const std::string& text);

// Uniform sample without replacement, result in dataset order.
std::vector<std::size_t> baseline_random(std::size_t m, std::size_t m_target, std::uint64_t seed);

// Farthest-first traversal seeded at the point farthest from the mean.
// Ties to the lowest index; result in selection order.
std::vector<std::size_t> baseline_kcenter(const FeatureMatrix& points, std::size_t m_target);

// Greedy mean matching: w starts at the data mean, each step picks
// argmax <w, x> among the unselected and updates w += mean - x.
std::vector<std::size_t> baseline_herding(const FeatureMatrix& points, std::size_t m_target);

}  // namespace sculptor
