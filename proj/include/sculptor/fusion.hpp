#pragma once

#include <cstddef>
#include <vector>

#include "sculptor/matrix.hpp"

namespace sculptor {

// Columns whose population std falls below this are treated as constant.
inline constexpr double kConstantColumnStd = 1e-12;

struct ColumnStats {
  double mean = 0.0;
  double std = 0.0;  // population (divide by row count)
  bool constant = false;
};

// Column-wise standardization to zero mean and unit population variance.
// Constant columns become all-zero and are flagged in `stats`.
FeatureMatrix zscore(const FeatureMatrix& input, std::vector<ColumnStats>* stats = nullptr);

struct FusedMatrix {
  FeatureMatrix matrix;  // structural columns first, then semantic columns
  std::vector<ColumnStats> struct_stats;
  std::vector<ColumnStats> semantic_stats;
  std::size_t struct_cols = 0;
  std::size_t semantic_cols = 0;
};

// Standardizes each block independently, then concatenates rows.
FusedMatrix fuse(const FeatureMatrix& structural, const FeatureMatrix& semantic);

}  // namespace sculptor
