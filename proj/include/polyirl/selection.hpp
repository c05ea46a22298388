#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polyirl/density.hpp"
#include "polyirl/features.hpp"

namespace polyirl {

// Sentinel F-statistic for a perfectly correlated column.
inline constexpr double kPerfectF = 1e18;

struct FeatureScore {
  std::size_t term_index = 0;
  std::string term_name;
  double f_statistic = 0.0;
  double correlation = 0.0;
};

struct SelectionResult {
  std::vector<FeatureScore> ranked;           // descending F, ties by ascending term_index
  std::vector<std::size_t> selected_indices;  // ascending term_index
  std::size_t k = 0;
};

// Univariate F = r^2 (n - 2) / (1 - r^2) for each column of X against y.
// Constant columns (or constant y) score 0.
std::vector<FeatureScore> score_features(std::span<const FeatureVector> X, std::span<const double> y,
                                         std::span<const std::string> names = {});

SelectionResult select_top_k(std::vector<FeatureScore> scores, std::size_t k);

}  // namespace polyirl
