#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sculptor {

// Dense row-major matrix of per-graph features. Row order always follows
// dataset order; ids travel separately (or in the container file).
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool empty() const { return rows == 0; }
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double dot(std::span<const double> a, std::span<const double> b);

// Binary matrix container. Layout, bit-exact:
//   magic (5 bytes, "GSFM1" for structural/fused, "GSEM1" for embeddings),
//   u32le row count, u32le dim,
//   count*dim IEEE-754 f32le values, row-major,
//   id list: exactly `count` newline-terminated UTF-8 lines.
inline constexpr const char* kStructMagic = "GSFM1";
inline constexpr const char* kEmbeddingMagic = "GSEM1";

struct MatrixFile {
  std::string magic;
  FeatureMatrix matrix;
  std::vector<std::string> ids;
};

void write_matrix_file(const std::filesystem::path& path, const std::string& magic,
                       const FeatureMatrix& matrix, const std::vector<std::string>& ids);
MatrixFile read_matrix_file(const std::filesystem::path& path);

}  // namespace sculptor
