#include "sculptor/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "sculptor/error.hpp"

namespace sculptor {

FeatureMatrix zscore(const FeatureMatrix& input, std::vector<ColumnStats>* stats) {
  const std::size_t rows = input.rows;
  const std::size_t cols = input.cols;

  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (!std::isfinite(input.at(i, j)))
        throw ValidationError("non-finite value at row " + std::to_string(i) + ", column " +
                              std::to_string(j));

  FeatureMatrix out(rows, cols);
  std::vector<ColumnStats> col_stats(cols);
  if (rows == 0) {
    for (auto& s : col_stats) s.constant = true;
    if (stats) *stats = std::move(col_stats);
    return out;
  }

  // Parallel across columns; within a column the accumulation runs serially in
  // row order, so worker count never changes the result.
  const auto num_cols = static_cast<std::int64_t>(cols);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t jj = 0; jj < num_cols; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    double sum = 0.0;
    for (std::size_t i = 0; i < rows; ++i) sum += input.at(i, j);
    const double mean = sum / static_cast<double>(rows);

    double sq = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double d = input.at(i, j) - mean;
      sq += d * d;
    }
    const double std_dev = std::sqrt(sq / static_cast<double>(rows));

    auto& s = col_stats[j];
    s.mean = mean;
    s.std = std_dev;
    s.constant = std_dev < kConstantColumnStd;
    if (s.constant) {
      for (std::size_t i = 0; i < rows; ++i) out.at(i, j) = 0.0;
    } else {
      const double inv = 1.0 / std_dev;
      for (std::size_t i = 0; i < rows; ++i) out.at(i, j) = (input.at(i, j) - mean) * inv;
    }
  }

  if (stats) *stats = std::move(col_stats);
  return out;
}

FusedMatrix fuse(const FeatureMatrix& structural, const FeatureMatrix& semantic) {
  if (structural.rows != semantic.rows)
    throw ValidationError("row count mismatch: structural has " + std::to_string(structural.rows) +
                          " rows, semantic has " + std::to_string(semantic.rows));

  FusedMatrix fused;
  fused.struct_cols = structural.cols;
  fused.semantic_cols = semantic.cols;

  const FeatureMatrix zs = zscore(structural, &fused.struct_stats);
  const FeatureMatrix zt = zscore(semantic, &fused.semantic_stats);

  fused.matrix = FeatureMatrix(structural.rows, structural.cols + semantic.cols);
  for (std::size_t i = 0; i < fused.matrix.rows; ++i) {
    auto dst = fused.matrix.row(i);
    const auto a = zs.row(i);
    const auto b = zt.row(i);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(structural.cols));
  }
  return fused;
}

}  // namespace sculptor
