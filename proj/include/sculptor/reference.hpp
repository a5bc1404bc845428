#pragma once

// Serial reference implementations. Everything here is written for clarity,
// not speed: dense linear algebra, plain loops, no OpenMP. Tests compare the
// production kernels against these, and the benchmark target measures the
// speedup. Not linked into the CLI.

#include <cstdint>
#include <vector>

#include "sculptor/clustering.hpp"
#include "sculptor/dataset.hpp"
#include "sculptor/fusion.hpp"
#include "sculptor/matrix.hpp"
#include "sculptor/rng.hpp"
#include "sculptor/structural.hpp"

namespace sculptor::reference {

// Random-walk return probabilities by explicit dense matrix powers of the
// walk matrix. Independent of the sparse per-source propagation.
std::vector<std::vector<double>> dense_return_probabilities(const GraphRecord& graph, int steps);

// Full descriptor ([|V|, |E|, avg degree, mean_1, std_1, ...]) assembled from
// the dense powers with naive mean/std.
std::vector<double> dense_descriptor(const GraphRecord& graph, const StructuralConfig& config = {});

// Production per-graph math in a plain serial loop over the dataset.
FeatureMatrix structural_features_serial(const Dataset& dataset,
                                         const StructuralConfig& config = {});

FeatureMatrix zscore_serial(const FeatureMatrix& input, std::vector<ColumnStats>* stats = nullptr);

FeatureMatrix hash_embeddings_serial(const Dataset& dataset, int dim);

Clustering lloyd_serial(const FeatureMatrix& points, const FeatureMatrix& init,
                        const KMeansConfig& config = {});

// Definitional weighted sampling without replacement: repeated cumulative-sum
// draws over the remaining items. Distributionally equivalent to the
// exponential-key method (not draw-for-draw identical).
std::vector<std::size_t> sequential_wrs(const std::vector<double>& weights, std::size_t n,
                                        Rng& rng);

std::vector<std::size_t> kcenter_serial(const FeatureMatrix& points, std::size_t m_target);

std::vector<std::size_t> herding_serial(const FeatureMatrix& points, std::size_t m_target);

}  // namespace sculptor::reference
