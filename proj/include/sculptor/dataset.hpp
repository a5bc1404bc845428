#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sculptor {

// One input graph. Edges are canonicalized to (u, v) with u <= v, sorted,
// duplicates rejected at load. Self-loops are legal and flagged in stats.
struct GraphRecord {
  std::string id;
  std::uint32_t num_nodes = 0;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::optional<std::string> text;
  std::vector<std::vector<double>> node_features;  // carried through, unused by default descriptors

  std::size_t self_loop_count() const;
};

struct DatasetStats {
  std::size_t graphs_with_self_loops = 0;
  std::size_t self_loop_edges = 0;
};

// Immutable after load; line order is the canonical row order for every
// feature matrix downstream.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<GraphRecord> records);

  static Dataset load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const GraphRecord& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<GraphRecord>& records() const { return records_; }

  std::optional<std::size_t> find(std::string_view id) const;
  std::vector<std::string> ids() const;
  const DatasetStats& stats() const { return stats_; }

 private:
  std::vector<GraphRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
  DatasetStats stats_;
};

// floor(p_target * m), clamped to >= 1 so a nonempty coreset always exists.
std::size_t target_count(std::size_t m, double p_target);
std::size_t target_size(const Dataset& dataset, double p_target);

}  // namespace sculptor
