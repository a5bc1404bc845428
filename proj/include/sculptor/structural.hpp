#pragma once

#include <array>
#include <vector>

#include "sculptor/dataset.hpp"
#include "sculptor/matrix.hpp"

namespace sculptor {

struct StructuralConfig {
  int rw_steps = 8;
  bool include_basic = true;
};

std::size_t descriptor_dim(const StructuralConfig& config);

// (|V|, |E|, 2|E|/|V|); self-loops count once in |E| and add 2 to their
// node's degree.
std::array<double, 3> basic_invariants(const GraphRecord& graph);

// Per-node return probabilities diag(M^t) for t = 1..steps, where M = D^-1 A
// is the row-stochastic walk matrix. Isolated nodes get a self-transition of
// probability 1. result[t-1][v] is node v's probability of returning in t steps.
std::vector<std::vector<double>> rw_return_probabilities(const GraphRecord& graph, int steps);

// Mean and population std of diag(M^t) per step, interleaved:
// (mean_1, std_1, mean_2, std_2, ...). Bitwise invariant under node relabeling.
std::vector<double> rw_signature(const GraphRecord& graph, int rw_steps);

std::vector<double> structural_descriptor(const GraphRecord& graph, const StructuralConfig& config);

// Batch descriptor matrix in dataset order. Parallel over graphs; output is
// identical for any thread count.
FeatureMatrix structural_features(const Dataset& dataset, const StructuralConfig& config);

}  // namespace sculptor
