#include "sculptor/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sculptor/error.hpp"

namespace sculptor {

using nlohmann::json;

std::size_t GraphRecord::self_loop_count() const {
  std::size_t n = 0;
  for (const auto& [u, v] : edges)
    if (u == v) ++n;
  return n;
}

namespace {

std::string at_line(std::size_t line_no) { return ", line " + std::to_string(line_no); }

GraphRecord record_from_json(const json& obj, std::size_t line_no) {
  if (!obj.is_object()) throw ValidationError("expected an object" + at_line(line_no));

  GraphRecord rec;
  if (!obj.contains("id") || !obj["id"].is_string())
    throw ValidationError("missing or non-string \"id\"" + at_line(line_no));
  rec.id = obj["id"].get<std::string>();

  if (!obj.contains("num_nodes") || !obj["num_nodes"].is_number_integer())
    throw ValidationError("missing or non-integer \"num_nodes\"" + at_line(line_no));
  const auto n = obj["num_nodes"].get<std::int64_t>();
  if (n <= 0)
    throw ValidationError("num_nodes must be positive, got " + std::to_string(n) + at_line(line_no));
  rec.num_nodes = static_cast<std::uint32_t>(n);

  if (!obj.contains("edges") || !obj["edges"].is_array())
    throw ValidationError("missing or non-array \"edges\"" + at_line(line_no));
  for (const auto& e : obj["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ValidationError("edge must be a 2-element integer array" + at_line(line_no));
    const auto a = e[0].get<std::int64_t>();
    const auto b = e[1].get<std::int64_t>();
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw ValidationError("edge index out of range" + at_line(line_no));
    auto u = static_cast<std::uint32_t>(a);
    auto v = static_cast<std::uint32_t>(b);
    if (u > v) std::swap(u, v);
    rec.edges.emplace_back(u, v);
  }
  std::sort(rec.edges.begin(), rec.edges.end());
  if (std::adjacent_find(rec.edges.begin(), rec.edges.end()) != rec.edges.end())
    throw ValidationError("duplicate undirected edge" + at_line(line_no));

  if (obj.contains("text")) {
    if (!obj["text"].is_string()) throw ValidationError("\"text\" must be a string" + at_line(line_no));
    rec.text = obj["text"].get<std::string>();
  }
  if (obj.contains("node_features")) {
    const auto& nf = obj["node_features"];
    if (!nf.is_array()) throw ValidationError("\"node_features\" must be an array" + at_line(line_no));
    for (const auto& fv : nf) {
      if (!fv.is_array()) throw ValidationError("node feature row must be an array" + at_line(line_no));
      std::vector<double> row;
      for (const auto& x : fv) {
        if (!x.is_number()) throw ValidationError("node feature must be numeric" + at_line(line_no));
        row.push_back(x.get<double>());
      }
      rec.node_features.push_back(std::move(row));
    }
  }
  return rec;
}

json record_to_json(const GraphRecord& rec) {
  json obj;
  obj["id"] = rec.id;
  obj["num_nodes"] = rec.num_nodes;
  json edges = json::array();
  for (const auto& [u, v] : rec.edges) edges.push_back({u, v});
  obj["edges"] = std::move(edges);
  if (rec.text) obj["text"] = *rec.text;
  if (!rec.node_features.empty()) obj["node_features"] = rec.node_features;
  return obj;
}

}  // namespace

Dataset::Dataset(std::vector<GraphRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto [it, inserted] = index_.emplace(records_[i].id, i);
    if (!inserted) throw ValidationError("duplicate id " + records_[i].id);
    const std::size_t loops = records_[i].self_loop_count();
    if (loops > 0) {
      ++stats_.graphs_with_self_loops;
      stats_.self_loop_edges += loops;
    }
  }
}

Dataset Dataset::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset: " + path.string());

  std::vector<GraphRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw ValidationError("malformed JSON" + at_line(line_no));
    records.push_back(record_from_json(obj, line_no));
  }
  return Dataset(std::move(records));
}

void Dataset::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  for (const auto& rec : records_) out << record_to_json(rec).dump() << '\n';
}

std::optional<std::size_t> Dataset::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Dataset::ids() const {
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& rec : records_) out.push_back(rec.id);
  return out;
}

std::size_t target_count(std::size_t m, double p_target) {
  if (!(p_target > 0.0) || p_target > 1.0)
    throw ValidationError("retention ratio must be in (0, 1], got " + std::to_string(p_target));
  if (m == 0) throw ValidationError("dataset is empty");
  const auto t = static_cast<std::size_t>(std::floor(p_target * static_cast<double>(m)));
  return std::max<std::size_t>(t, 1);
}

std::size_t target_size(const Dataset& dataset, double p_target) {
  return target_count(dataset.size(), p_target);
}

}  // namespace sculptor
