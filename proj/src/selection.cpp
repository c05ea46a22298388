#include "polyirl/selection.hpp"

#include <algorithm>
#include <cmath>

#include "polyirl/error.hpp"
#include "polyirl/parallel.hpp"

namespace polyirl {

std::vector<FeatureScore> score_features(std::span<const FeatureVector> X, std::span<const double> y,
                                         std::span<const std::string> names) {
  const std::size_t n = y.size();
  if (X.size() != n)
    throw InputError("score_features: " + std::to_string(X.size()) + " feature rows for " + std::to_string(n) +
                     " labels");
  if (n < 3) throw InputError("score_features needs at least 3 trajectories, got " + std::to_string(n));
  const std::size_t p = X.front().size();
  for (const auto& row : X)
    if (row.size() != p) throw InputError("score_features: ragged feature matrix");
  if (!names.empty() && names.size() != p) throw InputError("score_features: name count does not match columns");

  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);
  double syy = 0.0;
  for (double v : y) syy += (v - y_mean) * (v - y_mean);

  std::vector<FeatureScore> out(p);
  parallel_for(p, [&](std::size_t j) {
    double x_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) x_mean += X[i][j];
    x_mean /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = X[i][j] - x_mean;
      sxx += dx * dx;
      sxy += dx * (y[i] - y_mean);
    }
    FeatureScore& fs = out[j];
    fs.term_index = j;
    fs.term_name = names.empty() ? std::to_string(j) : names[j];
    if (!(sxx > 0.0) || !(syy > 0.0)) return;
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    fs.correlation = r;
    const double r2 = r * r;
    fs.f_statistic = (1.0 - std::abs(r) <= 1e-12) ? kPerfectF : r2 * static_cast<double>(n - 2) / (1.0 - r2);
  });
  return out;
}

SelectionResult select_top_k(std::vector<FeatureScore> scores, std::size_t k) {
  if (k < 1 || k > scores.size())
    throw InputError("select_top_k: k=" + std::to_string(k) + " outside [1, " + std::to_string(scores.size()) + "]");
  std::stable_sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) {
    if (a.f_statistic != b.f_statistic) return a.f_statistic > b.f_statistic;
    return a.term_index < b.term_index;
  });
  SelectionResult out;
  out.k = k;
  for (std::size_t i = 0; i < k; ++i) out.selected_indices.push_back(scores[i].term_index);
  std::sort(out.selected_indices.begin(), out.selected_indices.end());
  out.ranked = std::move(scores);
  return out;
}

}  // namespace polyirl
