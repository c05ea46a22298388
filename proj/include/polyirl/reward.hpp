#pragma once

#include <memory>
#include <span>
#include <vector>

#include "polyirl/features.hpp"

namespace polyirl {

// R(s) = theta . standardize(phi(s)) over the selected features.
struct RewardModel {
  std::vector<double> theta;
  FeatureExtractor extractor;
  Standardizer standardizer;

  RewardModel(std::vector<double> theta, FeatureExtractor extractor, Standardizer standardizer);

  double operator()(std::span<const double> s) const;

  // Equivalent reward in raw feature units: R(s) = raw_weights . phi(s) + raw_offset.
  std::vector<double> raw_weights() const;
  double raw_offset() const;
  // Inverse of raw_weights for the same standardizer.
  static std::vector<double> standardized_from_raw(std::span<const double> raw, const Standardizer& standardizer);
};

// Reward used when stepping an environment: the task's own reward or a
// learned linear reward evaluated at the successor state.
struct RewardFn {
  enum class Kind { TrueReward, LinearFeatureReward };

  Kind kind = Kind::TrueReward;
  std::shared_ptr<const RewardModel> model;

  static RewardFn true_reward() { return {}; }
  static RewardFn linear(std::shared_ptr<const RewardModel> model);
  static RewardFn linear(RewardModel model) { return linear(std::make_shared<const RewardModel>(std::move(model))); }
};

}  // namespace polyirl
