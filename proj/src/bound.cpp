#include "sculptor/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sculptor/error.hpp"

namespace sculptor {

using nlohmann::json;

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

std::vector<std::vector<std::size_t>> cluster_members(const LinearizedProblem& problem) {
  std::vector<std::vector<std::size_t>> members(problem.k);
  for (std::size_t i = 0; i < problem.cluster_of.size(); ++i)
    members[problem.cluster_of[i]].push_back(i);
  return members;
}

void check_problem(const LinearizedProblem& problem) {
  if (problem.k == 0 || problem.gradients.rows == 0)
    throw ValidationError("problem must have at least one sample and one cluster");
  if (problem.cluster_of.size() != problem.gradients.rows ||
      problem.base_losses.size() != problem.gradients.rows)
    throw ValidationError("problem arrays disagree on sample count");
  if (!(problem.smoothness > 0.0) || !(problem.eta > 0.0) || problem.steps < 1)
    throw ValidationError("need L > 0, eta > 0, T >= 1");
}

}  // namespace

LinearizedProblem synth_problem(std::size_t m, std::size_t k, std::size_t d, double separation,
                                std::uint64_t seed) {
  if (k < 1 || m < k || d < 1) throw ValidationError("need M >= K >= 1 and d >= 1");
  if (!(separation >= 0.0)) throw ValidationError("separation must be >= 0");

  Rng rng(seed);

  // Centers on a sphere of radius `separation`.
  FeatureMatrix centers(k, d);
  for (std::size_t c = 0; c < k; ++c) {
    auto row = centers.row(c);
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = rng.normal();
      norm_sq += row[j] * row[j];
    }
    if (norm_sq > 0.0) {
      const double scale = separation / std::sqrt(norm_sq);
      for (std::size_t j = 0; j < d; ++j) row[j] *= scale;
    } else {
      row[0] = separation;
    }
  }

  // Cluster sizes: one guaranteed draw each, the rest split by random weights
  // with largest-remainder rounding.
  std::vector<double> weights(k);
  double weight_total = 0.0;
  for (auto& w : weights) {
    w = 0.5 + rng.uniform();
    weight_total += w;
  }
  std::vector<std::size_t> sizes(k, 1);
  const std::size_t remaining = m - k;
  std::size_t handed = 0;
  std::vector<std::pair<double, std::size_t>> fracs;
  for (std::size_t c = 0; c < k; ++c) {
    const double raw = static_cast<double>(remaining) * weights[c] / weight_total;
    const auto base = static_cast<std::size_t>(std::floor(raw));
    sizes[c] += base;
    handed += base;
    fracs.emplace_back(raw - std::floor(raw), c);
  }
  std::sort(fracs.begin(), fracs.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t f = 0; handed < remaining; ++f, ++handed) ++sizes[fracs[f].second];

  std::vector<double> noise(k);
  for (auto& s : noise) s = 0.2 + 1.3 * rng.uniform();

  LinearizedProblem problem;
  problem.k = k;
  problem.gradients = FeatureMatrix(m, d);
  problem.cluster_of.reserve(m);
  for (std::size_t c = 0; c < k; ++c)
    problem.cluster_of.insert(problem.cluster_of.end(), sizes[c],
                              static_cast<std::uint32_t>(c));

  double max_norm_sq = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = problem.cluster_of[i];
    auto row = problem.gradients.row(i);
    const auto center = centers.row(c);
    double norm_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = center[j] + noise[c] * rng.normal();
      norm_sq += row[j] * row[j];
    }
    max_norm_sq = std::max(max_norm_sq, norm_sq);
  }
  problem.grad_bound = std::sqrt(max_norm_sq);

  problem.base_losses.resize(m);
  for (auto& b : problem.base_losses) b = rng.normal();
  return problem;
}

std::vector<double> cluster_masses(const LinearizedProblem& problem) {
  check_problem(problem);
  std::vector<double> pi(problem.k, 0.0);
  for (const auto c : problem.cluster_of) pi[c] += 1.0;
  for (auto& p : pi) p /= static_cast<double>(problem.gradients.rows);
  return pi;
}

std::vector<double> cluster_variance(const LinearizedProblem& problem) {
  check_problem(problem);
  const auto members = cluster_members(problem);
  const std::size_t d = problem.gradients.cols;

  std::vector<double> v2(problem.k, 0.0);
  std::vector<double> mean(d);
  for (std::size_t c = 0; c < problem.k; ++c) {
    if (members[c].empty()) continue;
    std::fill(mean.begin(), mean.end(), 0.0);
    for (const std::size_t i : members[c]) {
      const auto g = problem.gradients.row(i);
      for (std::size_t j = 0; j < d; ++j) mean[j] += g[j];
    }
    const double inv = 1.0 / static_cast<double>(members[c].size());
    for (auto& v : mean) v *= inv;

    double acc = 0.0;
    for (const std::size_t i : members[c]) {
      const auto g = problem.gradients.row(i);
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = g[j] - mean[j];
        acc += dev * dev;
      }
    }
    v2[c] = acc * inv;
  }
  return v2;
}

std::vector<double> mean_gradient(const LinearizedProblem& problem) {
  check_problem(problem);
  const std::size_t d = problem.gradients.cols;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < problem.gradients.rows; ++i) {
    const auto g = problem.gradients.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += g[j];
  }
  for (auto& v : mean) v /= static_cast<double>(problem.gradients.rows);
  return mean;
}

double evaluation_loss(const LinearizedProblem& problem, std::span<const double> displacement) {
  check_problem(problem);
  if (displacement.size() != problem.gradients.cols)
    throw ValidationError("displacement dimension does not match gradients");

  double base_mean = 0.0;
  for (const double b : problem.base_losses) base_mean += b;
  base_mean /= static_cast<double>(problem.base_losses.size());

  const auto mean = mean_gradient(problem);
  double linear = 0.0;
  double norm_sq = 0.0;
  for (std::size_t j = 0; j < displacement.size(); ++j) {
    linear += mean[j] * displacement[j];
    norm_sq += displacement[j] * displacement[j];
  }
  return base_mean + linear + 0.5 * problem.smoothness * norm_sq;
}

double bound_rhs(double smoothness, int steps, double eta, std::size_t m_target,
                 const std::vector<double>& pi, const std::vector<double>& v2,
                 const std::vector<double>& q) {
  if (!(smoothness > 0.0) || steps < 1 || !(eta > 0.0) || m_target < 1)
    throw ValidationError("need L > 0, T >= 1, eta > 0, M_target >= 1");
  if (pi.size() != v2.size() || pi.size() != q.size() || pi.empty())
    throw ValidationError("pi, V^2, and q must have the same nonzero length");

  double sum = 0.0;
  for (std::size_t c = 0; c < q.size(); ++c) {
    if (!(q[c] > 0.0)) throw ValidationError("q must be positive");
    if (v2[c] < 0.0 || pi[c] < 0.0) throw ValidationError("pi and V^2 must be >= 0");
    sum += pi[c] * pi[c] * v2[c] / q[c];
  }
  const double t = static_cast<double>(steps);
  return smoothness * t * t * eta * eta / (2.0 * static_cast<double>(m_target)) * sum;
}

Allocation make_allocation(const std::vector<double>& q, std::size_t m_target) {
  if (q.empty()) throw ValidationError("allocation needs at least one cluster");
  if (m_target < q.size())
    throw ValidationError("target " + std::to_string(m_target) +
                          " cannot give every cluster at least one draw");
  double total = 0.0;
  for (const double v : q) {
    if (!std::isfinite(v) || v <= 0.0) throw ValidationError("allocation shares must be positive");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("allocation shares must sum to 1");

  Allocation alloc;
  alloc.q = q;
  alloc.m_target = m_target;
  alloc.counts.resize(q.size());
  for (std::size_t c = 0; c < q.size(); ++c) {
    const auto rounded =
        static_cast<std::size_t>(std::llround(q[c] * static_cast<double>(m_target)));
    alloc.counts[c] = std::max<std::size_t>(1, rounded);
  }

  for (;;) {
    const std::size_t current =
        std::accumulate(alloc.counts.begin(), alloc.counts.end(), std::size_t{0});
    if (current == m_target) break;
    const bool over = current > m_target;

    std::size_t pick = q.size();
    double pick_gap = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < q.size(); ++c) {
      if (over && alloc.counts[c] <= 1) continue;
      const double ideal = q[c] * static_cast<double>(m_target);
      const double gap = over ? static_cast<double>(alloc.counts[c]) - ideal
                              : ideal - static_cast<double>(alloc.counts[c]);
      if (gap > pick_gap) {
        pick_gap = gap;
        pick = c;
      }
    }
    if (over)
      --alloc.counts[pick];
    else
      ++alloc.counts[pick];
  }
  return alloc;
}

Allocation optimal_allocation(const std::vector<double>& pi, const std::vector<double>& v2,
                              std::size_t m_target, bool* degenerate) {
  if (pi.size() != v2.size() || pi.empty())
    throw ValidationError("pi and V^2 must have the same nonzero length");
  for (std::size_t c = 0; c < pi.size(); ++c) {
    if (!(pi[c] > 0.0)) throw ValidationError("cluster masses must be positive");
    if (v2[c] < 0.0) throw ValidationError("variances must be >= 0");
  }

  std::vector<double> raw(pi.size());
  double raw_total = 0.0;
  for (std::size_t c = 0; c < pi.size(); ++c) {
    raw[c] = pi[c] * std::sqrt(v2[c]);
    raw_total += raw[c];
  }

  std::vector<double> q(pi.size());
  bool deg = false;
  if (raw_total <= 0.0) {
    // All variances zero: any allocation gives a zero bound; fall back to pi.
    deg = true;
    q = pi;
    double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (auto& v : q) v /= total;
  } else {
    // Zero-variance clusters get just enough share to round to one draw.
    const double eps = 0.5 / static_cast<double>(m_target);
    double reserved = 0.0;
    for (std::size_t c = 0; c < raw.size(); ++c)
      if (raw[c] <= 0.0) reserved += eps;
    const double scale = (1.0 - reserved) / raw_total;
    for (std::size_t c = 0; c < raw.size(); ++c)
      q[c] = raw[c] > 0.0 ? raw[c] * scale : eps;
  }
  if (degenerate) *degenerate = deg;
  return make_allocation(q, m_target);
}

namespace {

std::vector<double> sampled_gradient_impl(const LinearizedProblem& problem,
                                          const Allocation& allocation,
                                          const std::vector<std::vector<std::size_t>>& members,
                                          const std::vector<double>& pi, Rng& rng, SampleMode mode,
                                          EstimatorKind estimator,
                                          std::vector<std::size_t>& scratch) {
  const std::size_t d = problem.gradients.cols;
  std::vector<double> estimate(d, 0.0);
  std::vector<double> cluster_sum(d);
  std::size_t total_draws = 0;

  for (std::size_t c = 0; c < problem.k; ++c) {
    const std::size_t count = allocation.counts[c];
    const auto& pool = members[c];
    std::fill(cluster_sum.begin(), cluster_sum.end(), 0.0);

    if (mode == SampleMode::with_replacement) {
      for (std::size_t t = 0; t < count; ++t) {
        const std::size_t i = pool[static_cast<std::size_t>(rng.below(pool.size()))];
        const auto g = problem.gradients.row(i);
        for (std::size_t j = 0; j < d; ++j) cluster_sum[j] += g[j];
      }
    } else {
      scratch.assign(pool.begin(), pool.end());
      for (std::size_t t = 0; t < count; ++t) {
        const std::size_t swap_with =
            t + static_cast<std::size_t>(rng.below(scratch.size() - t));
        std::swap(scratch[t], scratch[swap_with]);
        const auto g = problem.gradients.row(scratch[t]);
        for (std::size_t j = 0; j < d; ++j) cluster_sum[j] += g[j];
      }
    }

    if (estimator == EstimatorKind::stratified) {
      const double w = pi[c] / static_cast<double>(count);
      for (std::size_t j = 0; j < d; ++j) estimate[j] += w * cluster_sum[j];
    } else {
      for (std::size_t j = 0; j < d; ++j) estimate[j] += cluster_sum[j];
      total_draws += count;
    }
  }

  if (estimator == EstimatorKind::plain_mean)
    for (auto& v : estimate) v /= static_cast<double>(total_draws);
  return estimate;
}

void check_allocation(const LinearizedProblem& problem, const Allocation& allocation,
                      const std::vector<std::vector<std::size_t>>& members, SampleMode mode) {
  if (allocation.counts.size() != problem.k)
    throw ValidationError("allocation cluster count does not match the problem");
  for (std::size_t c = 0; c < problem.k; ++c) {
    if (members[c].empty()) throw ValidationError("cluster " + std::to_string(c) + " is empty");
    if (allocation.counts[c] < 1)
      throw ValidationError("allocation must draw at least once per cluster");
    if (mode == SampleMode::without_replacement && allocation.counts[c] > members[c].size())
      throw ValidationError("cluster " + std::to_string(c) + " holds " +
                            std::to_string(members[c].size()) + " samples but the allocation asks " +
                            std::to_string(allocation.counts[c]) + " without replacement");
  }
}

}  // namespace

std::vector<double> sampled_gradient(const LinearizedProblem& problem, const Allocation& allocation,
                                     Rng& rng, SampleMode mode, EstimatorKind estimator) {
  check_problem(problem);
  const auto members = cluster_members(problem);
  check_allocation(problem, allocation, members, mode);
  const auto pi = cluster_masses(problem);
  std::vector<std::size_t> scratch;
  return sampled_gradient_impl(problem, allocation, members, pi, rng, mode, estimator, scratch);
}

GapEstimate simulate_gap(const LinearizedProblem& problem, const Allocation& allocation,
                         std::size_t trials, std::uint64_t seed, SampleMode mode,
                         EstimatorKind estimator) {
  check_problem(problem);
  if (trials < 1) throw ValidationError("need at least one trial");
  const auto members = cluster_members(problem);
  check_allocation(problem, allocation, members, mode);

  const std::size_t d = problem.gradients.cols;
  const auto pi = cluster_masses(problem);
  const auto mean = mean_gradient(problem);
  const double scale = problem.eta * static_cast<double>(problem.steps);

  // gap = -eta T <gbar, ghat - gbar> + (L/2) eta^2 T^2 (|ghat|^2 - |gbar|^2);
  // the base losses cancel in the difference.
  double mean_norm_sq = 0.0;
  for (const double v : mean) mean_norm_sq += v * v;

  std::vector<double> gaps(trials);
  const auto total = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < total; ++t) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> scratch;
    const auto estimate =
        sampled_gradient_impl(problem, allocation, members, pi, rng, mode, estimator, scratch);

    double cross = 0.0;
    double est_norm_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      cross += mean[j] * (estimate[j] - mean[j]);
      est_norm_sq += estimate[j] * estimate[j];
    }
    gaps[static_cast<std::size_t>(t)] =
        -scale * cross + 0.5 * problem.smoothness * scale * scale * (est_norm_sq - mean_norm_sq);
  }

  GapEstimate result;
  for (const double g : gaps) result.mean += g;
  result.mean /= static_cast<double>(trials);
  if (trials > 1) {
    double var = 0.0;
    for (const double g : gaps) {
      const double dev = g - result.mean;
      var += dev * dev;
    }
    var /= static_cast<double>(trials - 1);
    result.half_width_99 = kZ99 * std::sqrt(var / static_cast<double>(trials));
  }
  return result;
}

VerifyReport verify(const LinearizedProblem& problem, const std::vector<Allocation>& allocations,
                    std::size_t trials, std::uint64_t seed, std::size_t simplex_checks) {
  check_problem(problem);
  if (allocations.empty()) throw ValidationError("at least one allocation is required");
  const std::size_t m_target = allocations.front().m_target;
  for (const auto& a : allocations)
    if (a.m_target != m_target)
      throw ValidationError("all allocations must share one target size");

  const auto members = cluster_members(problem);
  const auto pi = cluster_masses(problem);
  const auto v2 = cluster_variance(problem);

  VerifyReport report;
  report.optimum = optimal_allocation(pi, v2, m_target);
  report.bound_at_optimum = bound_rhs(problem.smoothness, problem.steps, problem.eta, m_target,
                                      pi, v2, report.optimum.q);

  for (std::size_t a = 0; a < allocations.size(); ++a) {
    const auto& alloc = allocations[a];

    // The simulation draws counts[c] per cluster, so the bound is evaluated
    // at the induced shares counts / m_target.
    std::vector<double> q_eff(alloc.counts.size());
    for (std::size_t c = 0; c < alloc.counts.size(); ++c)
      q_eff[c] = static_cast<double>(alloc.counts[c]) / static_cast<double>(m_target);
    const double bound = bound_rhs(problem.smoothness, problem.steps, problem.eta, m_target,
                                   pi, v2, q_eff);

    AllocationRecord wr;
    wr.allocation = alloc;
    wr.mode = SampleMode::with_replacement;
    wr.bound = bound;
    const auto wr_gap = simulate_gap(problem, alloc, trials, derive_seed(seed, 2 * a),
                                     SampleMode::with_replacement);
    wr.gap_mean = wr_gap.mean;
    wr.gap_ci99 = wr_gap.half_width_99;
    wr.pass = std::abs(wr_gap.mean - bound) <= wr_gap.half_width_99 + 0.05 * bound;
    report.records.push_back(std::move(wr));

    bool wor_feasible = true;
    for (std::size_t c = 0; c < alloc.counts.size(); ++c)
      wor_feasible = wor_feasible && alloc.counts[c] <= members[c].size();
    if (wor_feasible) {
      AllocationRecord wor;
      wor.allocation = alloc;
      wor.mode = SampleMode::without_replacement;
      wor.bound = bound;
      const auto wor_gap = simulate_gap(problem, alloc, trials, derive_seed(seed, 2 * a + 1),
                                        SampleMode::without_replacement);
      wor.gap_mean = wor_gap.mean;
      wor.gap_ci99 = wor_gap.half_width_99;
      wor.pass = wor_gap.mean <= bound + wor_gap.half_width_99;
      report.records.push_back(std::move(wor));
    }
  }

  // Remark: q* proportional to pi_k V_k minimizes the bound; every other
  // share vector must score strictly higher unless it is q* itself.
  report.simplex_checks = simplex_checks;
  report.remark_pass = true;
  const double tol = 1e-9 * std::max(1.0, report.bound_at_optimum);
  auto check_share = [&](const std::vector<double>& q) {
    const double b = bound_rhs(problem.smoothness, problem.steps, problem.eta, m_target,
                               pi, v2, q);
    if (report.bound_at_optimum > b + tol) {
      report.remark_pass = false;
      return;
    }
    if (b - report.bound_at_optimum <= tol) {
      double max_gap = 0.0;
      for (std::size_t c = 0; c < q.size(); ++c)
        max_gap = std::max(max_gap, std::abs(q[c] - report.optimum.q[c]));
      if (max_gap > 1e-9) report.remark_pass = false;
    }
  };
  for (const auto& a : allocations) check_share(a.q);
  Rng simplex_rng(derive_seed(seed, 0x73696d706c6578ULL));
  std::vector<double> draw(problem.k);
  for (std::size_t s = 0; s < simplex_checks; ++s) {
    double total = 0.0;
    for (auto& v : draw) {
      v = -std::log(simplex_rng.uniform_open());
      total += v;
    }
    for (auto& v : draw) v /= total;
    check_share(draw);
  }

  report.pass = report.remark_pass;
  for (const auto& r : report.records) report.pass = report.pass && r.pass;
  return report;
}

namespace {

json allocation_to_json(const Allocation& alloc) {
  return {{"q", alloc.q}, {"counts", alloc.counts}, {"m_target", alloc.m_target}};
}

const char* mode_name(SampleMode mode) {
  return mode == SampleMode::with_replacement ? "with-replacement" : "without-replacement";
}

}  // namespace

std::string verify_report_json(const VerifyReport& report) {
  json doc;
  doc["records"] = json::array();
  for (const auto& r : report.records) {
    doc["records"].push_back({{"allocation", allocation_to_json(r.allocation)},
                              {"mode", mode_name(r.mode)},
                              {"bound", r.bound},
                              {"gap_mean", r.gap_mean},
                              {"gap_ci99", r.gap_ci99},
                              {"pass", r.pass}});
  }
  doc["optimum"] = allocation_to_json(report.optimum);
  doc["bound_at_optimum"] = report.bound_at_optimum;
  doc["simplex_checks"] = report.simplex_checks;
  doc["remark_pass"] = report.remark_pass;
  doc["pass"] = report.pass;
  return doc.dump(2) + "\n";
}

std::string verify_report_csv(const VerifyReport& report) {
  std::string out = "record,mode,bound,gap_mean,gap_ci99,pass\n";
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    const auto& r = report.records[i];
    out += std::to_string(i);
    out += ',';
    out += mode_name(r.mode);
    out += ',';
    out += json(r.bound).dump();
    out += ',';
    out += json(r.gap_mean).dump();
    out += ',';
    out += json(r.gap_ci99).dump();
    out += ',';
    out += r.pass ? "true" : "false";
    out += '\n';
  }
  return out;
}

}  // namespace sculptor
