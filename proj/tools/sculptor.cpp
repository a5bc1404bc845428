#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "sculptor/bound.hpp"
#include "sculptor/clustering.hpp"
#include "sculptor/curation.hpp"
#include "sculptor/dataset.hpp"
#include "sculptor/error.hpp"
#include "sculptor/fusion.hpp"
#include "sculptor/matrix.hpp"
#include "sculptor/rng.hpp"
#include "sculptor/semantic.hpp"
#include "sculptor/structural.hpp"

namespace {

using namespace sculptor;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  out << content;
  if (!out) throw ValidationError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct FeaturizeArgs {
  std::string input;
  std::string output;
  std::string format = "binary";
  int rw_steps = 8;
};

int run_featurize(const FeaturizeArgs& args) {
  const Dataset dataset = Dataset::load(args.input);
  StructuralConfig config;
  config.rw_steps = args.rw_steps;
  const FeatureMatrix features = structural_features(dataset, config);

  if (args.format == "binary") {
    write_matrix_file(args.output, kStructMagic, features, dataset.ids());
  } else if (args.format == "jsonl") {
    std::string out;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto row = features.row(i);
      nlohmann::json line = {{"id", dataset[i].id},
                             {"struct", std::vector<double>(row.begin(), row.end())}};
      out += line.dump();
      out += '\n';
    }
    write_text_file(args.output, out);
  } else {
    throw UsageError("unknown format \"" + args.format + "\" (want binary or jsonl)");
  }

  std::cout << "featurized " << dataset.size() << " graphs into " << features.cols
            << " columns -> " << args.output << "\n";
  return 0;
}

struct EmbedArgs {
  std::string input;
  std::string output;
  std::string provider = "hash";
  std::string source;
  std::string endpoint;
  int dim = 64;
  int batch_size = 64;
  double timeout = 30.0;
};

int run_embed(const EmbedArgs& args) {
  const Dataset dataset = Dataset::load(args.input);

  SemanticProviderConfig config;
  config.dim = args.dim;
  config.batch_size = args.batch_size;
  config.timeout_seconds = args.timeout;
  if (args.provider == "hash") {
    config.mode = ProviderMode::hash;
  } else if (args.provider == "precomputed") {
    if (args.source.empty()) throw UsageError("--provider precomputed requires --source");
    config.mode = ProviderMode::precomputed;
    config.path = args.source;
  } else if (args.provider == "remote") {
    if (args.endpoint.empty()) throw UsageError("--provider remote requires --endpoint");
    config.mode = ProviderMode::remote;
    config.endpoint = args.endpoint;
  } else {
    throw UsageError("unknown provider \"" + args.provider +
                     "\" (want hash, precomputed, or remote)");
  }

  const SemanticMatrix embeddings = semantic_features(dataset, config);
  write_matrix_file(args.output, kEmbeddingMagic, embeddings.matrix, dataset.ids());
  std::cout << "embedded " << dataset.size() << " graphs at dim " << embeddings.matrix.cols
            << " via " << embeddings.provider_tag << " -> " << args.output << "\n";
  return 0;
}

// Shared by select and baseline: load the structural matrix, optionally the
// semantic one (ids must line up), and fuse.
struct FusedInput {
  std::vector<std::string> ids;
  FusedMatrix fused;
};

FusedInput load_fused(const std::string& struct_path, const std::string& semantic_path) {
  MatrixFile sf = read_matrix_file(struct_path);
  if (sf.magic != kStructMagic)
    throw ValidationError("expected " + std::string(kStructMagic) + " input, got " + sf.magic +
                          " in " + struct_path);

  FusedInput result;
  result.ids = std::move(sf.ids);
  if (semantic_path.empty()) {
    result.fused = fuse(sf.matrix, FeatureMatrix(sf.matrix.rows, 0));
    return result;
  }

  MatrixFile sem = read_matrix_file(semantic_path);
  if (sem.magic != kEmbeddingMagic)
    throw ValidationError("expected " + std::string(kEmbeddingMagic) + " input, got " + sem.magic +
                          " in " + semantic_path);
  if (sem.ids != result.ids)
    throw ValidationError("id mismatch between structural and semantic inputs");
  result.fused = fuse(sf.matrix, sem.matrix);
  return result;
}

struct SelectArgs {
  std::string input;
  std::string semantic;
  std::string output;
  std::string ids_out;
  std::string clustering_out;
  double ratio = 0.5;
  std::size_t clusters = 0;
  double tau = 0.5;
  double w = 0.5;
  std::string sigma_mode = "data-driven";
  double sigma = 1.0;
  bool min_quota = false;
  std::uint64_t seed = 42;
};

int run_select(const SelectArgs& args) {
  FusedInput input = load_fused(args.input, args.semantic);

  CurationConfig config;
  config.p_target = args.ratio;
  config.clusters = args.clusters;
  config.tau = args.tau;
  config.w = args.w;
  config.sigma_mode = parse_sigma_mode(args.sigma_mode);
  config.sigma_value = args.sigma;
  config.min_quota = args.min_quota;
  config.seed = args.seed;

  const CoresetManifest manifest = select_coreset(input.ids, input.fused, config);
  write_text_file(args.output, manifest_json(manifest));

  if (!args.ids_out.empty()) {
    std::string lines;
    for (const auto& id : manifest.selected_ids) {
      lines += id;
      lines += '\n';
    }
    write_text_file(args.ids_out, lines);
  }
  if (!args.clustering_out.empty()) {
    // Same seed and config as inside the selection, so the dump matches the
    // clustering the manifest was built from.
    const std::size_t k =
        config.clusters > 0 ? config.clusters : default_cluster_count(input.ids.size());
    const Clustering clustering = kmeans(input.fused.matrix, k, config.seed, config.kmeans);
    const ClusterStats stats = cluster_stats(input.fused.matrix, clustering);
    write_text_file(args.clustering_out, clustering_json(clustering, stats) + "\n");
  }

  std::cout << "selected " << manifest.selected_ids.size() << " of " << input.ids.size()
            << " ids -> " << args.output << "\n";
  return 0;
}

struct BaselineArgs {
  std::string method;
  std::string input;
  std::string semantic;
  std::string output;
  double ratio = 0.5;
  std::uint64_t seed = 42;
};

int run_baseline(const BaselineArgs& args) {
  FusedInput input = load_fused(args.input, args.semantic);
  const std::size_t m_target = target_count(input.ids.size(), args.ratio);

  std::vector<std::size_t> picks;
  if (args.method == "random") {
    picks = baseline_random(input.ids.size(), m_target, args.seed);
  } else if (args.method == "kcenter") {
    picks = baseline_kcenter(input.fused.matrix, m_target);
  } else if (args.method == "herding") {
    picks = baseline_herding(input.fused.matrix, m_target);
  } else {
    throw UsageError("unknown method \"" + args.method + "\" (want random, kcenter, or herding)");
  }

  std::string lines;
  for (const std::size_t i : picks) {
    lines += input.ids[i];
    lines += '\n';
  }
  write_text_file(args.output, lines);
  std::cout << args.method << " baseline selected " << picks.size() << " of " << input.ids.size()
            << " ids -> " << args.output << "\n";
  return 0;
}

struct VerifyArgs {
  std::string output;
  std::string csv;
  std::size_t m = 2000;
  std::size_t k = 5;
  std::size_t dim = 16;
  double separation = 1.0;
  std::size_t target = 200;
  std::size_t trials = 10000;
  std::size_t simplex = 1000;
  std::size_t extra = 2;
  std::uint64_t seed = 42;
};

int run_verify_bound(const VerifyArgs& args) {
  if (args.trials < 1) throw UsageError("--trials must be >= 1");
  if (args.target < args.k) throw UsageError("--target must be at least --k");

  const LinearizedProblem problem =
      synth_problem(args.m, args.k, args.dim, args.separation, args.seed);
  const auto pi = cluster_masses(problem);
  const auto v2 = cluster_variance(problem);

  std::vector<Allocation> allocations;
  allocations.push_back(
      make_allocation(std::vector<double>(args.k, 1.0 / static_cast<double>(args.k)), args.target));
  allocations.push_back(optimal_allocation(pi, v2, args.target));
  Rng extra_rng(derive_seed(args.seed, 0x616c6c6f63ULL));
  for (std::size_t i = 0; i < args.extra; ++i) {
    std::vector<double> q(args.k);
    double total = 0.0;
    for (auto& v : q) {
      v = -std::log(extra_rng.uniform_open());
      total += v;
    }
    for (auto& v : q) v /= total;
    allocations.push_back(make_allocation(q, args.target));
  }

  const VerifyReport report = verify(problem, allocations, args.trials, args.seed, args.simplex);
  write_text_file(args.output, verify_report_json(report));
  if (!args.csv.empty()) write_text_file(args.csv, verify_report_csv(report));

  std::cout << "bound verification " << (report.pass ? "PASS" : "FAIL") << " ("
            << report.records.size() << " records, " << report.simplex_checks
            << " simplex checks) -> " << args.output << "\n";
  return 0;
}

struct StatsArgs {
  std::string input;
  std::string dataset;
};

int run_stats(const StatsArgs& args) {
  const CoresetManifest manifest = parse_manifest(read_text_file(args.input));
  const Dataset dataset = Dataset::load(args.dataset);

  for (const auto& id : manifest.selected_ids)
    if (!dataset.find(id)) throw ValidationError("manifest id " + id + " not in dataset");

  std::size_t quota_total = 0;
  for (const auto& c : manifest.clusters) quota_total += c.quota;
  if (quota_total != manifest.m_target ||
      manifest.selected_ids.size() != manifest.m_target)
    throw ValidationError("budget mismatch: quotas sum to " + std::to_string(quota_total) +
                          ", manifest lists " + std::to_string(manifest.selected_ids.size()) +
                          ", target is " + std::to_string(manifest.m_target));

  std::cout << "cluster    size        pi     quota  drawn\n";
  for (const auto& c : manifest.clusters) {
    std::cout << std::setw(7) << c.index << std::setw(8) << c.size << std::setw(10)
              << std::fixed << std::setprecision(4) << c.pi << std::setw(10) << c.quota
              << std::setw(7) << c.ids.size() << "\n";
  }
  std::cout << "budget check: " << manifest.selected_ids.size() << " selected of "
            << dataset.size() << " (target " << manifest.m_target << ") -- ok\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graph coreset curation toolkit"};
  app.require_subcommand(1);
  // Let --threads and --config work in either position, before or after the
  // subcommand name. Subcommands copy this setting at creation, so it has to
  // be enabled before any add_subcommand call.
  app.fallthrough();

  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = library default)")
      ->capture_default_str();
  app.set_config("--config", "", "read options from a TOML file ([subcommand] sections)");

  FeaturizeArgs feat;
  auto* feat_cmd = app.add_subcommand("featurize", "compute structural descriptors");
  feat_cmd->add_option("--input", feat.input, "graph dataset (JSONL)")->required();
  feat_cmd->add_option("--output", feat.output, "descriptor matrix file")->required();
  feat_cmd->add_option("--rw-steps", feat.rw_steps, "random-walk steps")->capture_default_str();
  feat_cmd->add_option("--format", feat.format, "binary or jsonl")->capture_default_str();

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "compute semantic embeddings");
  embed_cmd->add_option("--input", embed.input, "graph dataset (JSONL)")->required();
  embed_cmd->add_option("--output", embed.output, "embedding matrix file")->required();
  embed_cmd->add_option("--provider", embed.provider, "hash, precomputed, or remote")
      ->capture_default_str();
  embed_cmd->add_option("--source", embed.source, "embedding file for --provider precomputed");
  embed_cmd->add_option("--endpoint", embed.endpoint, "service URL for --provider remote");
  embed_cmd->add_option("--dim", embed.dim, "hash embedding dimension")->capture_default_str();
  embed_cmd->add_option("--batch-size", embed.batch_size, "texts per remote request")
      ->capture_default_str();
  embed_cmd->add_option("--timeout", embed.timeout, "remote timeout in seconds")
      ->capture_default_str();

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select", "curate a coreset manifest");
  select_cmd->add_option("--input", select.input, "structural matrix file")->required();
  select_cmd->add_option("--semantic", select.semantic, "semantic matrix file");
  select_cmd->add_option("--output", select.output, "manifest path")->required();
  select_cmd->add_option("--ids-out", select.ids_out, "also write a plain id list");
  select_cmd->add_option("--dump-clustering", select.clustering_out, "also write a clustering dump");
  select_cmd->add_option("--ratio", select.ratio, "retention fraction in (0, 1]")
      ->capture_default_str();
  select_cmd->add_option("--clusters", select.clusters, "cluster count (0 = default rule)")
      ->capture_default_str();
  select_cmd->add_option("--tau", select.tau, "softmax temperature")->capture_default_str();
  select_cmd->add_option("--w", select.w, "intra/inter trade-off in [0, 1]")
      ->capture_default_str();
  select_cmd->add_option("--sigma-mode", select.sigma_mode, "data-driven, fixed, or infinite")
      ->capture_default_str();
  select_cmd->add_option("--sigma", select.sigma, "bandwidth for --sigma-mode fixed")
      ->capture_default_str();
  select_cmd->add_flag("--min-quota", select.min_quota,
                       "guarantee one pick per nonempty cluster when feasible");
  select_cmd->add_option("--seed", select.seed, "master seed")->capture_default_str();

  BaselineArgs baseline;
  auto* baseline_cmd = app.add_subcommand("baseline", "run a baseline selector");
  baseline_cmd->add_option("--method", baseline.method, "random, kcenter, or herding")->required();
  baseline_cmd->add_option("--input", baseline.input, "structural matrix file")->required();
  baseline_cmd->add_option("--semantic", baseline.semantic, "semantic matrix file");
  baseline_cmd->add_option("--output", baseline.output, "id list path")->required();
  baseline_cmd->add_option("--ratio", baseline.ratio, "retention fraction in (0, 1]")
      ->capture_default_str();
  baseline_cmd->add_option("--seed", baseline.seed, "seed for --method random")
      ->capture_default_str();

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify-bound", "check the loss-gap bound by simulation");
  verify_cmd->add_option("--output", verify.output, "report path (JSON)")->required();
  verify_cmd->add_option("--csv", verify.csv, "also write a CSV of the records");
  verify_cmd->add_option("--m", verify.m, "sample count")->capture_default_str();
  verify_cmd->add_option("--k", verify.k, "cluster count")->capture_default_str();
  verify_cmd->add_option("--dim", verify.dim, "gradient dimension")->capture_default_str();
  verify_cmd->add_option("--separation", verify.separation, "cluster center radius")
      ->capture_default_str();
  verify_cmd->add_option("--target", verify.target, "coreset budget")->capture_default_str();
  verify_cmd->add_option("--trials", verify.trials, "Monte-Carlo trials")->capture_default_str();
  verify_cmd->add_option("--simplex", verify.simplex, "random shares for the optimality check")
      ->capture_default_str();
  verify_cmd->add_option("--extra-allocations", verify.extra, "random allocations to simulate")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "master seed")->capture_default_str();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "summarize and check a manifest");
  stats_cmd->add_option("--input", stats.input, "manifest path")->required();
  stats_cmd->add_option("--dataset", stats.dataset, "graph dataset (JSONL)")->required();

  try {
    app.parse(argc, argv);

    if (threads < 0) throw UsageError("--threads must be >= 0");
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#endif

    if (feat_cmd->parsed()) return run_featurize(feat);
    if (embed_cmd->parsed()) return run_embed(embed);
    if (select_cmd->parsed()) return run_select(select);
    if (baseline_cmd->parsed()) return run_baseline(baseline);
    if (verify_cmd->parsed()) return run_verify_bound(verify);
    if (stats_cmd->parsed()) return run_stats(stats);
    throw UsageError("no subcommand given");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
