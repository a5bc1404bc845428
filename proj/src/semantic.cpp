#include "sculptor/semantic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sculptor/error.hpp"
#include "sculptor/rng.hpp"

namespace sculptor {

using nlohmann::json;

std::string serialize_graph_text(const GraphRecord& graph, std::string_view background) {
  if (graph.text) return *graph.text;

  std::vector<std::vector<std::uint32_t>> adj(graph.num_nodes);
  for (const auto& [u, v] : graph.edges) {
    adj[u].push_back(v);
    if (u != v) adj[v].push_back(u);
  }

  std::string out;
  if (!background.empty()) {
    out.append(background);
    out.push_back('\n');
  }
  out.append("nodes: ").append(std::to_string(graph.num_nodes));
  for (std::uint32_t v = 0; v < graph.num_nodes; ++v) {
    std::sort(adj[v].begin(), adj[v].end());
    out.push_back('\n');
    out.append(std::to_string(v)).push_back(':');
    for (std::size_t i = 0; i < adj[v].size(); ++i) {
      out.push_back(i == 0 ? ' ' : ',');
      out.append(std::to_string(adj[v][i]));
    }
  }
  return out;
}

std::vector<std::string> dataset_texts(const Dataset& dataset, std::string_view background) {
  std::vector<std::string> texts;
  texts.reserve(dataset.size());
  for (const auto& rec : dataset.records()) texts.push_back(serialize_graph_text(rec, background));
  return texts;
}

namespace {

// FNV-1a over the lowercased token, finalized with mix64 so both the
// coordinate (low bits) and the sign (top bit) are well mixed.
std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix64(h);
}

bool is_token_char(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<double> hash_embed(std::string_view text, int dim) {
  if (dim < 1) throw ValidationError("hash embedding dimension must be >= 1");
  std::vector<double> vec(static_cast<std::size_t>(dim), 0.0);

  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    const std::uint64_t h = token_hash(token);
    const auto coord = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
    vec[coord] += (h >> 63) ? -1.0 : 1.0;
    token.clear();
  };
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      token.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else {
      flush();
    }
  }
  flush();

  double norm_sq = 0.0;
  for (double x : vec) norm_sq += x * x;
  if (norm_sq > 0.0) {
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : vec) x *= inv;
  }
  return vec;
}

SemanticMatrix hash_embeddings(const Dataset& dataset, int dim, std::string_view background) {
  if (dim < 1) throw ValidationError("hash embedding dimension must be >= 1");
  const auto texts = dataset_texts(dataset, background);
  FeatureMatrix mat(texts.size(), static_cast<std::size_t>(dim));
  const auto count = static_cast<std::int64_t>(texts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto vec = hash_embed(texts[static_cast<std::size_t>(i)], dim);
    auto row = mat.row(static_cast<std::size_t>(i));
    std::copy(vec.begin(), vec.end(), row.begin());
  }
  return {std::move(mat), "hash-fallback(dim=" + std::to_string(dim) + ")"};
}

namespace {

SemanticMatrix load_precomputed_binary(const std::filesystem::path& path, const Dataset& dataset,
                                       std::size_t* ignored) {
  MatrixFile file = read_matrix_file(path);
  if (file.magic != kEmbeddingMagic)
    throw ValidationError("expected " + std::string(kEmbeddingMagic) + " magic in " + path.string());

  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < file.ids.size(); ++i) {
    if (!by_id.emplace(file.ids[i], i).second)
      throw ValidationError("duplicate embedding for id " + file.ids[i]);
  }

  FeatureMatrix mat(dataset.size(), file.matrix.cols);
  std::size_t used = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = by_id.find(dataset[i].id);
    if (it == by_id.end()) throw ValidationError("embedding missing for " + dataset[i].id);
    const auto src = file.matrix.row(it->second);
    std::copy(src.begin(), src.end(), mat.row(i).begin());
    ++used;
  }
  if (ignored) *ignored = file.ids.size() - used;
  return {std::move(mat), "precomputed(" + path.string() + ")"};
}

SemanticMatrix load_precomputed_jsonl(const std::filesystem::path& path, const Dataset& dataset,
                                      std::size_t* ignored) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings: " + path.string());

  std::unordered_map<std::string, std::vector<double>> by_id;
  std::size_t dim = 0;
  bool dim_known = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded())
      throw ValidationError("malformed JSON, line " + std::to_string(line_no) + " in " + path.string());
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
        !obj.contains("embedding") || !obj["embedding"].is_array())
      throw ValidationError("expected {\"id\", \"embedding\"}, line " + std::to_string(line_no));
    std::string id = obj["id"].get<std::string>();
    std::vector<double> vec;
    vec.reserve(obj["embedding"].size());
    for (const auto& x : obj["embedding"]) {
      if (!x.is_number()) throw ValidationError("non-numeric embedding entry for id " + id);
      const double v = x.get<double>();
      if (!std::isfinite(v)) throw ValidationError("non-finite embedding for id " + id);
      vec.push_back(v);
    }
    if (!dim_known) {
      dim = vec.size();
      dim_known = true;
    } else if (vec.size() != dim) {
      throw ValidationError("embedding dimension mismatch for id " + id + ": expected " +
                            std::to_string(dim) + ", got " + std::to_string(vec.size()));
    }
    if (!by_id.emplace(std::move(id), std::move(vec)).second)
      throw ValidationError("duplicate embedding for id " + obj["id"].get<std::string>());
  }

  FeatureMatrix mat(dataset.size(), dim);
  std::size_t used = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto it = by_id.find(dataset[i].id);
    if (it == by_id.end()) throw ValidationError("embedding missing for " + dataset[i].id);
    std::copy(it->second.begin(), it->second.end(), mat.row(i).begin());
    ++used;
  }
  if (ignored) *ignored = by_id.size() - used;
  return {std::move(mat), "precomputed(" + path.string() + ")"};
}

}  // namespace

SemanticMatrix load_precomputed(const std::filesystem::path& path, const Dataset& dataset,
                                std::size_t* ignored) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw ValidationError("cannot open embeddings: " + path.string());
  char magic[6] = {};
  probe.read(magic, 5);
  probe.close();
  if (std::string_view(magic, 5) == kEmbeddingMagic)
    return load_precomputed_binary(path, dataset, ignored);
  return load_precomputed_jsonl(path, dataset, ignored);
}

SemanticMatrix semantic_features(const Dataset& dataset, const SemanticProviderConfig& config,
                                 std::string_view background) {
  switch (config.mode) {
    case ProviderMode::hash:
      return hash_embeddings(dataset, config.dim, background);
    case ProviderMode::precomputed:
      return load_precomputed(config.path, dataset);
    case ProviderMode::remote:
      return embed_remote(config, dataset_texts(dataset, background));
  }
  throw ValidationError("unknown semantic provider mode");
}

}  // namespace sculptor
