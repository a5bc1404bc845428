#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sculptor/matrix.hpp"
#include "sculptor/rng.hpp"

namespace sculptor {

// Linearized training problem: per-sample gradients at the start point, a
// fixed cluster partition, and the optimizer constants. The evaluation loss
// is the L-smooth quadratic extension of the linearization, which makes the
// expected loss gap of stratified sampling analytically exact.
struct LinearizedProblem {
  FeatureMatrix gradients;  // M x d, one row per sample
  std::vector<std::uint32_t> cluster_of;
  std::vector<double> base_losses;
  std::size_t k = 0;
  double smoothness = 1.0;  // L
  double eta = 0.5;
  int steps = 4;  // T
  double grad_bound = 0.0;  // max row norm, recorded at construction
};

// Random problem: cluster centers on a sphere of radius `separation`,
// per-cluster noise scales, sizes by largest-remainder shares (each >= 1).
LinearizedProblem synth_problem(std::size_t m, std::size_t k, std::size_t d, double separation,
                                std::uint64_t seed);

std::vector<double> cluster_masses(const LinearizedProblem& problem);

// Population mean squared deviation from the cluster-mean gradient, per cluster.
std::vector<double> cluster_variance(const LinearizedProblem& problem);

std::vector<double> mean_gradient(const LinearizedProblem& problem);

// mean base loss + <mean gradient, disp> + (L/2)|disp|^2 at W0 + disp.
double evaluation_loss(const LinearizedProblem& problem, std::span<const double> displacement);

// (L T^2 eta^2 / 2 M_target) * sum_k pi_k^2 V_k^2 / q_k
double bound_rhs(double smoothness, int steps, double eta, std::size_t m_target,
                 const std::vector<double>& pi, const std::vector<double>& v2,
                 const std::vector<double>& q);

struct Allocation {
  std::vector<double> q;            // positive shares summing to 1
  std::vector<std::size_t> counts;  // per-cluster draws, each >= 1, summing to m_target
  std::size_t m_target = 0;
};

// Rounds q * m_target to integers, fixes the total by largest remainder,
// keeps every cluster at >= 1 draw.
Allocation make_allocation(const std::vector<double>& q, std::size_t m_target);

// q*_k proportional to pi_k * sqrt(V_k^2). Zero-variance clusters get the
// minimal share that still rounds to one draw. If every cluster has zero
// variance the shares fall back to pi and `degenerate` is set.
Allocation optimal_allocation(const std::vector<double>& pi, const std::vector<double>& v2,
                              std::size_t m_target, bool* degenerate = nullptr);

enum class SampleMode { with_replacement, without_replacement };

// The stratified estimator weights each cluster's sample mean by pi_k, which
// is what the bound assumes; the plain mean over all draws is kept as a
// biased comparison mode.
enum class EstimatorKind { stratified, plain_mean };

// One trial's gradient estimate, consuming draws from `rng`. Clusters are
// visited in index order so the draw sequence is reproducible.
std::vector<double> sampled_gradient(const LinearizedProblem& problem, const Allocation& allocation,
                                     Rng& rng, SampleMode mode = SampleMode::with_replacement,
                                     EstimatorKind estimator = EstimatorKind::stratified);

struct GapEstimate {
  double mean = 0.0;
  double half_width_99 = 0.0;  // normal approximation, sample std over sqrt(trials)
};

// Monte-Carlo estimate of E[loss(W_core) - loss(W_full)] with per-trial seeds
// derived from the master seed; trial order never affects the result.
GapEstimate simulate_gap(const LinearizedProblem& problem, const Allocation& allocation,
                         std::size_t trials, std::uint64_t seed,
                         SampleMode mode = SampleMode::with_replacement,
                         EstimatorKind estimator = EstimatorKind::stratified);

struct AllocationRecord {
  Allocation allocation;
  SampleMode mode = SampleMode::with_replacement;
  double bound = 0.0;
  double gap_mean = 0.0;
  double gap_ci99 = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::vector<AllocationRecord> records;
  Allocation optimum;
  double bound_at_optimum = 0.0;
  std::size_t simplex_checks = 0;
  bool remark_pass = false;  // optimum minimizes the bound over sampled shares
  bool pass = false;
};

// With replacement the gap must match the bound (the construction is the
// equality case); without replacement it must stay at or below it. Also
// checks bound(q*) <= bound(q) over the given and `simplex_checks` random
// allocations, strict except within 1e-9 of q*.
VerifyReport verify(const LinearizedProblem& problem, const std::vector<Allocation>& allocations,
                    std::size_t trials, std::uint64_t seed, std::size_t simplex_checks = 1000);

std::string verify_report_json(const VerifyReport& report);
std::string verify_report_csv(const VerifyReport& report);

}  // namespace sculptor
