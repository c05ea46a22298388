#include "polyirl/reward.hpp"

#include "polyirl/error.hpp"

namespace polyirl {

RewardModel::RewardModel(std::vector<double> theta_, FeatureExtractor extractor_, Standardizer standardizer_)
    : theta(std::move(theta_)), extractor(std::move(extractor_)), standardizer(std::move(standardizer_)) {
  if (theta.size() != extractor.size()) throw InputError("reward weights do not match the selected feature count");
  if (standardizer.size() != extractor.size()) throw InputError("standardizer does not match the selected features");
  for (double s : standardizer.scale)
    if (!(s > 0.0)) throw InputError("standardizer scales must be strictly positive");
}

double RewardModel::operator()(std::span<const double> s) const {
  if (static_cast<int>(s.size()) != extractor.state_dim()) throw InputError("reward: state dimension mismatch");
  double r = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double phi = extractor.active_term(k)(s);
    r += theta[k] * (phi - standardizer.mean[k]) / standardizer.scale[k];
  }
  return r;
}

std::vector<double> RewardModel::raw_weights() const {
  std::vector<double> out(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) out[k] = theta[k] / standardizer.scale[k];
  return out;
}

double RewardModel::raw_offset() const {
  double b = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k) b -= theta[k] * standardizer.mean[k] / standardizer.scale[k];
  return b;
}

std::vector<double> RewardModel::standardized_from_raw(std::span<const double> raw, const Standardizer& standardizer) {
  if (raw.size() != standardizer.size()) throw InputError("raw weights do not match the standardizer width");
  std::vector<double> out(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) out[k] = raw[k] * standardizer.scale[k];
  return out;
}

RewardFn RewardFn::linear(std::shared_ptr<const RewardModel> model) {
  if (!model) throw InputError("linear reward needs a reward model");
  return {Kind::LinearFeatureReward, std::move(model)};
}

}  // namespace polyirl
