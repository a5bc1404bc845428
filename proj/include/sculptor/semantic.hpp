#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sculptor/dataset.hpp"
#include "sculptor/matrix.hpp"

namespace sculptor {

enum class ProviderMode { precomputed, remote, hash };

// Environment variable holding a bearer token for the remote provider.
inline constexpr const char* kApiTokenEnv = "SCULPTOR_API_TOKEN";

struct SemanticProviderConfig {
  ProviderMode mode = ProviderMode::hash;
  std::string path;            // precomputed: embeddings file (JSONL or GSEM1)
  std::string endpoint;        // remote: e.g. http://host:port/embed
  int dim = 64;                // hash: output dimension; discovered otherwise
  int batch_size = 64;         // remote: texts per request
  double timeout_seconds = 30.0;
  int max_in_flight = 4;       // remote: concurrent requests cap
};

struct SemanticMatrix {
  FeatureMatrix matrix;        // rows aligned to dataset order
  std::string provider_tag;    // provenance
};

// Returns graph.text verbatim when present. Otherwise an adjacency listing
// with fixed ordering: optional background line, "nodes: N", then one line
// per node "i: j,k,..." with neighbors ascending. Byte-stable.
std::string serialize_graph_text(const GraphRecord& graph, std::string_view background = {});

// Text handed to embedding providers for each record, in dataset order.
std::vector<std::string> dataset_texts(const Dataset& dataset, std::string_view background = {});

// Deterministic offline fallback: token hashing with sign accumulation,
// L2-normalized. Identical output across runs and platforms.
std::vector<double> hash_embed(std::string_view text, int dim);

SemanticMatrix hash_embeddings(const Dataset& dataset, int dim, std::string_view background = {});

// Rows re-ordered to dataset order; every dataset id must be present.
// `ignored` (optional) receives the number of file ids absent from the dataset.
SemanticMatrix load_precomputed(const std::filesystem::path& path, const Dataset& dataset,
                                std::size_t* ignored = nullptr);

// POSTs {"texts": [...]} in batches, expects {"embeddings": [[...], ...]}.
// Transient failures retried 3 times with exponential backoff; batches may go
// out concurrently (max_in_flight) but rows are assembled in input order.
SemanticMatrix embed_remote(const SemanticProviderConfig& config, const std::vector<std::string>& texts);

SemanticMatrix semantic_features(const Dataset& dataset, const SemanticProviderConfig& config,
                                 std::string_view background = {});

}  // namespace sculptor
