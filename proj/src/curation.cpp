#include "sculptor/curation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sculptor/checksum.hpp"
#include "sculptor/dataset.hpp"
#include "sculptor/error.hpp"
#include "sculptor/rng.hpp"

namespace sculptor {

using nlohmann::json;

std::string sigma_mode_name(SigmaMode mode) {
  switch (mode) {
    case SigmaMode::data_driven: return "data-driven";
    case SigmaMode::fixed: return "fixed";
    case SigmaMode::infinite: return "infinite";
  }
  return "data-driven";
}

SigmaMode parse_sigma_mode(const std::string& name) {
  if (name == "data-driven") return SigmaMode::data_driven;
  if (name == "fixed") return SigmaMode::fixed;
  if (name == "infinite") return SigmaMode::infinite;
  throw ValidationError("unknown sigma mode \"" + name + "\" (want data-driven, fixed, or infinite)");
}

std::vector<double> cluster_scores(const ClusterStats& stats, double w) {
  if (w < 0.0 || w > 1.0) throw ValidationError("w must lie in [0, 1]");
  std::vector<double> omega(stats.pi.size());
  for (std::size_t j = 0; j < omega.size(); ++j)
    omega[j] = std::log(stats.pi[j]) + w * std::log(stats.d_intra[j]) +
               (1.0 - w) * std::log(stats.d_inter[j]);
  return omega;
}

std::vector<double> softmax_proportions(const std::vector<double>& omega, double tau) {
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  if (omega.empty()) return {};

  const double max_omega = *std::max_element(omega.begin(), omega.end());
  std::vector<double> props(omega.size());
  double total = 0.0;
  for (std::size_t j = 0; j < omega.size(); ++j) {
    props[j] = std::exp((omega[j] - max_omega) / tau);
    total += props[j];
  }
  for (double& p : props) p /= total;
  return props;
}

std::vector<std::size_t> quotas(const std::vector<double>& proportions, std::size_t m_target,
                                const std::vector<std::size_t>& sizes, bool min_quota) {
  const std::size_t k = sizes.size();
  if (k == 0) throw ValidationError("quota allocation needs at least one cluster");
  if (proportions.size() != k)
    throw ValidationError("proportion count does not match cluster count");

  double prop_sum = 0.0;
  for (const double p : proportions) {
    if (!std::isfinite(p) || p < 0.0) throw ValidationError("proportions must be finite and >= 0");
    prop_sum += p;
  }
  if (std::abs(prop_sum - 1.0) > 1e-6) throw ValidationError("proportions must sum to 1");

  const std::size_t capacity = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (m_target > capacity)
    throw ValidationError("selection target " + std::to_string(m_target) +
                          " exceeds total capacity " + std::to_string(capacity));

  // Floor rule: floors everywhere except the last cluster, which absorbs the
  // remainder so the budget is exact before any feasibility repair.
  std::vector<std::size_t> n(k, 0);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j + 1 < k; ++j) {
    n[j] = static_cast<std::size_t>(std::floor(static_cast<double>(m_target) * proportions[j]));
    assigned += n[j];
  }
  n[k - 1] = m_target > assigned ? m_target - assigned : 0;

  std::size_t nonempty = 0;
  for (const std::size_t s : sizes) nonempty += s > 0 ? 1 : 0;
  std::vector<std::size_t> lower(k, 0);
  if (min_quota && m_target >= nonempty)
    for (std::size_t j = 0; j < k; ++j) lower[j] = sizes[j] > 0 ? 1 : 0;

  for (std::size_t j = 0; j < k; ++j) n[j] = std::clamp(n[j], lower[j], sizes[j]);

  // Repair until the budget is exact. A deficit is spread over non-saturated
  // clusters proportionally to their shares (largest-remainder rounding); a
  // surplus peels back the most over-allocated cluster first.
  for (;;) {
    const std::size_t current = std::accumulate(n.begin(), n.end(), std::size_t{0});
    if (current == m_target) break;

    if (current < m_target) {
      std::size_t deficit = m_target - current;
      std::vector<std::size_t> open;
      double open_weight = 0.0;
      for (std::size_t j = 0; j < k; ++j)
        if (n[j] < sizes[j]) {
          open.push_back(j);
          open_weight += proportions[j];
        }

      if (open_weight <= 0.0) {
        // Shares give no guidance (possible only with hand-crafted inputs);
        // fill deterministically in index order.
        for (const std::size_t j : open) {
          const std::size_t room = sizes[j] - n[j];
          const std::size_t take = std::min(room, deficit);
          n[j] += take;
          deficit -= take;
          if (deficit == 0) break;
        }
        continue;
      }

      std::vector<std::size_t> base(open.size(), 0);
      std::vector<std::pair<double, std::size_t>> frac;  // (remainder, position in open)
      std::size_t base_total = 0;
      for (std::size_t o = 0; o < open.size(); ++o) {
        const double raw = static_cast<double>(deficit) * proportions[open[o]] / open_weight;
        base[o] = static_cast<std::size_t>(std::floor(raw));
        base_total += base[o];
        frac.emplace_back(raw - std::floor(raw), o);
      }
      std::size_t leftover = deficit > base_total ? deficit - base_total : 0;
      std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (std::size_t f = 0; f < frac.size() && leftover > 0; ++f, --leftover)
        ++base[frac[f].second];
      for (std::size_t o = 0; o < open.size(); ++o) {
        const std::size_t j = open[o];
        n[j] += std::min(base[o], sizes[j] - n[j]);
      }
    } else {
      // Over budget (only the min-quota raise can cause this): walk back the
      // cluster whose count most exceeds its proportional share.
      std::size_t worst = k;
      double worst_over = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        if (n[j] <= lower[j]) continue;
        const double over = static_cast<double>(n[j]) -
                            static_cast<double>(m_target) * proportions[j];
        if (over > worst_over) {
          worst_over = over;
          worst = j;
        }
      }
      if (worst == k)
        throw ValidationError("quota repair cannot reach the target under min-quota floors");
      --n[worst];
    }
  }
  return n;
}

std::vector<double> within_cluster_probs(const FeatureMatrix& points,
                                         const std::vector<std::size_t>& members,
                                         std::span<const double> centroid, double sigma,
                                         SigmaMode mode) {
  if (members.empty()) throw ValidationError("cannot compute probabilities for an empty cluster");
  const std::size_t n = members.size();
  std::vector<double> probs(n);

  if (mode == SigmaMode::infinite || sigma <= 0.0) {
    std::fill(probs.begin(), probs.end(), 1.0 / static_cast<double>(n));
    return probs;
  }

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(members[i]), centroid);
  const double d2_min = *std::min_element(d2.begin(), d2.end());

  const double inv = 1.0 / (2.0 * sigma * sigma);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    probs[i] = std::exp(-(d2[i] - d2_min) * inv);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

namespace {

// Exponential-key selection over log-weights. Item i with finite log-weight
// draws u_i and scores s_i = log(-log u_i) - log_w_i; the n smallest scores
// are exactly the n largest keys u^(1/w), but stay representable for any
// finite log-weight. Items at -inf are skipped without consuming a draw.
std::vector<std::size_t> wrs_log_weights(const std::vector<double>& log_weights, std::size_t n,
                                         std::uint64_t seed) {
  if (n == 0) return {};
  Rng rng(seed);
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(log_weights.size());
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == -std::numeric_limits<double>::infinity()) continue;
    const double u = rng.uniform_open();
    scored.emplace_back(std::log(-std::log(u)) - log_weights[i], i);
  }
  if (scored.size() < n)
    throw ValidationError("fewer than " + std::to_string(n) + " positive weights");

  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first < b.first;
                      return a.second < b.second;
                    });
  std::vector<std::size_t> picked(n);
  for (std::size_t i = 0; i < n; ++i) picked[i] = scored[i].second;
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace

std::vector<std::size_t> wrs_without_replacement(const std::vector<double>& weights, std::size_t n,
                                                 std::uint64_t seed) {
  std::vector<double> log_w(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw ValidationError("weights must be finite and >= 0");
    log_w[i] = weights[i] > 0.0 ? std::log(weights[i]) : -std::numeric_limits<double>::infinity();
  }
  return wrs_log_weights(log_w, n, seed);
}

namespace {

json config_to_json(const CurationConfig& config, std::size_t resolved_k) {
  return {{"p_target", config.p_target},
          {"w", config.w},
          {"tau", config.tau},
          {"clusters", resolved_k},
          {"min_quota", config.min_quota},
          {"sigma_mode", sigma_mode_name(config.sigma_mode)},
          {"sigma_value", config.sigma_value},
          {"kmeans", {{"max_iter", config.kmeans.max_iter}, {"tol", config.kmeans.tol}}}};
}

json manifest_to_json(const CoresetManifest& manifest, bool with_checksum) {
  json doc;
  doc["selected_ids"] = manifest.selected_ids;
  doc["m_target"] = manifest.m_target;
  doc["seed"] = manifest.seed;
  doc["config"] = config_to_json(manifest.config, manifest.clusters.size());
  doc["definitions"] = {
      {"d_intra", "root-mean-square member-to-centroid distance"},
      {"d_inter", "minimum distance to another centroid (1 when K=1)"},
      {"sigma", "mean member-to-centroid distance"}};
  doc["clusters"] = json::array();
  for (const auto& c : manifest.clusters) {
    doc["clusters"].push_back({{"index", c.index},
                               {"size", c.size},
                               {"pi", c.pi},
                               {"d_intra", c.d_intra},
                               {"d_inter", c.d_inter},
                               {"sigma", c.sigma},
                               {"omega", c.omega},
                               {"proportion", c.proportion},
                               {"quota", c.quota},
                               {"ids", c.ids}});
  }
  if (with_checksum) doc["checksum"] = manifest.checksum;
  return doc;
}

}  // namespace

CoresetManifest select_coreset(const std::vector<std::string>& ids, const FusedMatrix& fused,
                               const CurationConfig& config) {
  const std::size_t m = fused.matrix.rows;
  if (ids.size() != m) throw ValidationError("id count does not match matrix rows");
  if (m == 0) throw ValidationError("cannot curate an empty dataset");
  if (config.w < 0.0 || config.w > 1.0) throw ValidationError("w must lie in [0, 1]");
  if (!(config.tau > 0.0)) throw ValidationError("tau must be positive");
  if (config.sigma_mode == SigmaMode::fixed &&
      (!std::isfinite(config.sigma_value) || config.sigma_value < 0.0))
    throw ValidationError("fixed sigma must be finite and >= 0");

  const std::size_t m_target = target_count(m, config.p_target);
  const std::size_t k = config.clusters > 0 ? config.clusters : default_cluster_count(m);

  const Clustering clustering = kmeans(fused.matrix, k, config.seed, config.kmeans);
  const ClusterStats stats = cluster_stats(fused.matrix, clustering);
  const std::vector<double> omega = cluster_scores(stats, config.w);
  const std::vector<double> props = softmax_proportions(omega, config.tau);
  const std::vector<std::size_t> quota = quotas(props, m_target, stats.sizes, config.min_quota);

  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < m; ++i) members[clustering.assignments[i]].push_back(i);

  CoresetManifest manifest;
  manifest.m_target = m_target;
  manifest.seed = config.seed;
  manifest.config = config;
  manifest.config.clusters = k;
  manifest.clusters.reserve(k);

  for (std::size_t c = 0; c < k; ++c) {
    ClusterReport report;
    report.index = c;
    report.size = stats.sizes[c];
    report.pi = stats.pi[c];
    report.d_intra = stats.d_intra[c];
    report.d_inter = stats.d_inter[c];
    report.sigma = stats.sigma[c];
    report.omega = omega[c];
    report.proportion = props[c];
    report.quota = quota[c];

    if (quota[c] > 0) {
      double sigma = 0.0;
      bool uniform = false;
      switch (config.sigma_mode) {
        case SigmaMode::data_driven: sigma = stats.sigma[c]; break;
        case SigmaMode::fixed: sigma = config.sigma_value; break;
        case SigmaMode::infinite: uniform = true; break;
      }
      uniform = uniform || sigma <= 0.0;

      // Log-weights keep every member selectable even when exp(-d^2/2sigma^2)
      // would underflow, so tiny bandwidths cannot starve a quota. Weights are
      // shifted by the in-cluster minimum distance; anything that still
      // overflows is pinned to a huge-but-finite penalty.
      std::vector<double> log_w(members[c].size(), 0.0);
      if (!uniform) {
        std::vector<double> d2(members[c].size());
        for (std::size_t i = 0; i < members[c].size(); ++i)
          d2[i] = squared_distance(fused.matrix.row(members[c][i]), clustering.centroids.row(c));
        const double d2_min = *std::min_element(d2.begin(), d2.end());
        const double inv = 1.0 / (2.0 * sigma * sigma);
        for (std::size_t i = 0; i < members[c].size(); ++i) {
          if (d2[i] <= d2_min) continue;  // log weight stays 0
          double lw = -(d2[i] - d2_min) * inv;
          if (!(lw > -1e300)) lw = -1e300;
          log_w[i] = lw;
        }
      }
      const auto picks = wrs_log_weights(log_w, quota[c], derive_seed(config.seed, c));
      report.ids.reserve(picks.size());
      for (const std::size_t p : picks) report.ids.push_back(ids[members[c][p]]);
    }

    for (const auto& id : report.ids) manifest.selected_ids.push_back(id);
    manifest.clusters.push_back(std::move(report));
  }

  manifest.checksum = sha256_hex(manifest_to_json(manifest, false).dump());
  return manifest;
}

std::string manifest_json(const CoresetManifest& manifest) {
  return manifest_to_json(manifest, true).dump(2) + "\n";
}

CoresetManifest parse_manifest(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ValidationError("manifest is not valid JSON");

  for (const char* field : {"selected_ids", "m_target", "seed", "config", "clusters", "checksum"})
    if (!doc.contains(field)) throw ValidationError(std::string("manifest missing field ") + field);

  CoresetManifest manifest;
  manifest.selected_ids = doc["selected_ids"].get<std::vector<std::string>>();
  manifest.m_target = doc["m_target"].get<std::size_t>();
  manifest.seed = doc["seed"].get<std::uint64_t>();
  manifest.checksum = doc["checksum"].get<std::string>();

  const json& cfg = doc["config"];
  manifest.config.p_target = cfg.value("p_target", 0.5);
  manifest.config.w = cfg.value("w", 0.5);
  manifest.config.tau = cfg.value("tau", 0.5);
  manifest.config.clusters = cfg.value("clusters", std::size_t{0});
  manifest.config.min_quota = cfg.value("min_quota", false);
  manifest.config.sigma_mode = parse_sigma_mode(cfg.value("sigma_mode", "data-driven"));
  manifest.config.sigma_value = cfg.value("sigma_value", 1.0);
  if (cfg.contains("kmeans")) {
    manifest.config.kmeans.max_iter = cfg["kmeans"].value("max_iter", 300);
    manifest.config.kmeans.tol = cfg["kmeans"].value("tol", 1e-6);
  }

  if (!doc["clusters"].is_array() || doc["clusters"].empty())
    throw ValidationError("manifest cluster list is empty");
  for (const auto& c : doc["clusters"]) {
    ClusterReport report;
    report.index = c.at("index").get<std::size_t>();
    report.size = c.at("size").get<std::size_t>();
    report.pi = c.at("pi").get<double>();
    report.d_intra = c.at("d_intra").get<double>();
    report.d_inter = c.at("d_inter").get<double>();
    report.sigma = c.at("sigma").get<double>();
    report.omega = c.at("omega").is_number() ? c.at("omega").get<double>()
                                             : -std::numeric_limits<double>::infinity();
    report.proportion = c.at("proportion").get<double>();
    report.quota = c.at("quota").get<std::size_t>();
    report.ids = c.at("ids").get<std::vector<std::string>>();
    manifest.clusters.push_back(std::move(report));
  }

  const std::string expected = sha256_hex(manifest_to_json(manifest, false).dump());
  if (expected != manifest.checksum) throw ValidationError("manifest checksum mismatch");
  return manifest;
}

std::vector<std::size_t> baseline_random(std::size_t m, std::size_t m_target, std::uint64_t seed) {
  if (m_target < 1) throw ValidationError("selection target must be >= 1");
  if (m_target > m)
    throw ValidationError("selection target " + std::to_string(m_target) + " exceeds dataset size " +
                          std::to_string(m));

  std::vector<std::size_t> indices(m);
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = 0; i < m_target; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(m_target);
  std::sort(indices.begin(), indices.end());
  return indices;
}

namespace {

std::vector<double> column_mean(const FeatureMatrix& points) {
  std::vector<double> mean(points.cols, 0.0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    const auto row = points.row(i);
    for (std::size_t j = 0; j < points.cols; ++j) mean[j] += row[j];
  }
  for (double& v : mean) v /= static_cast<double>(points.rows);
  return mean;
}

}  // namespace

std::vector<std::size_t> baseline_kcenter(const FeatureMatrix& points, std::size_t m_target) {
  if (m_target < 1) throw ValidationError("selection target must be >= 1");
  if (m_target > points.rows)
    throw ValidationError("selection target " + std::to_string(m_target) + " exceeds dataset size " +
                          std::to_string(points.rows));

  const std::vector<double> mean = column_mean(points);
  const auto rows = static_cast<std::int64_t>(points.rows);

  std::vector<double> min_d2(points.rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i)
    min_d2[static_cast<std::size_t>(i)] =
        squared_distance(points.row(static_cast<std::size_t>(i)),
                         std::span<const double>(mean.data(), mean.size()));

  std::vector<char> selected(points.rows, 0);
  std::vector<std::size_t> picks;
  picks.reserve(m_target);

  // Strictly-greater comparisons keep ties on the lowest index.
  std::size_t first = 0;
  for (std::size_t i = 1; i < points.rows; ++i)
    if (min_d2[i] > min_d2[first]) first = i;
  picks.push_back(first);
  selected[first] = 1;

  while (picks.size() < m_target) {
    const std::size_t last = picks.back();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const double d2 = squared_distance(points.row(idx), points.row(last));
      if (picks.size() == 1 || d2 < min_d2[idx]) min_d2[idx] = d2;
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

std::vector<std::size_t> baseline_herding(const FeatureMatrix& points, std::size_t m_target) {
  if (m_target < 1) throw ValidationError("selection target must be >= 1");
  if (m_target > points.rows)
    throw ValidationError("selection target " + std::to_string(m_target) + " exceeds dataset size " +
                          std::to_string(points.rows));

  const std::vector<double> mean = column_mean(points);
  std::vector<double> w = mean;
  const auto rows = static_cast<std::int64_t>(points.rows);

  std::vector<char> selected(points.rows, 0);
  std::vector<double> score(points.rows);
  std::vector<std::size_t> picks;
  picks.reserve(m_target);

  while (picks.size() < m_target) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      score[idx] = dot(std::span<const double>(w.data(), w.size()), points.row(idx));
    }

    std::size_t best = points.rows;
    for (std::size_t i = 0; i < points.rows; ++i) {
      if (selected[i]) continue;
      if (best == points.rows || score[i] > score[best]) best = i;
    }
    picks.push_back(best);
    selected[best] = 1;

    const auto x = points.row(best);
    for (std::size_t j = 0; j < points.cols; ++j) w[j] += mean[j] - x[j];
  }
  return picks;
}

}  // namespace sculptor
