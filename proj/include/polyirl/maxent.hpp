#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polyirl/error.hpp"
#include "polyirl/features.hpp"
#include "polyirl/policy.hpp"
#include "polyirl/reward.hpp"

namespace polyirl {

struct IrlConfig {
  int epochs = 100;
  double learning_rate = 0.2;
  double lr_decay = 0.97;
  int n_rollouts = 200;
  StandardizeMode standardize = StandardizeMode::Scale;
  OptBudget rl_budget;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IrlEpochRecord {
  int epoch = 0;                   // 1-based
  std::vector<double> theta;       // after the update
  std::vector<double> mu_expert;
  std::vector<double> mu_policy;
  double grad_norm = 0.0;          // ||mu_expert - mu_policy||_2
  double mean_true_return = 0.0;   // over this epoch's rollouts
  double alpha = 0.0;              // rate used for this epoch's update
  double wall_seconds = 0.0;
};

struct IrlTrace {
  std::vector<IrlEpochRecord> records;
};

// Raised when an epoch fails; carries the offending theta and the epochs
// completed so far.
class IrlError : public NumericalError {
 public:
  IrlError(const std::string& what, std::vector<double> theta, IrlTrace partial)
      : NumericalError(what), theta(std::move(theta)), partial(std::move(partial)) {}
  std::vector<double> theta;
  IrlTrace partial;
};

// Uniform on [-1, 1]^p.
std::vector<double> init_theta(std::size_t p, std::uint64_t seed);

// theta + alpha (mu_expert - mu_policy): ascent on the demonstration log-likelihood.
std::vector<double> apply_gradient_step(std::span<const double> theta, std::span<const double> mu_expert,
                                        std::span<const double> mu_policy, double alpha);

using PolicyOptimizer =
    std::function<OptResult(const Simulator&, const RewardFn&, const PolicyParams&, const OptBudget&)>;

struct IrlState {
  RewardModel reward;
  PolicyParams policy;
  double alpha = 0.0;
  int epoch = 0;  // epochs completed
};

struct IrlEpochResult {
  IrlState state;
  IrlEpochRecord record;
};

// One outer iteration: optimize the policy against the current reward
// (warm-started), roll it out, match feature expectations, step theta and
// decay the rate.
IrlEpochResult irl_epoch(const Simulator& sim, const IrlState& state, const FeatureExpectation& mu_expert,
                         const IrlConfig& cfg, const PolicyOptimizer& optimizer = optimize_policy);

struct IrlResult {
  RewardModel reward;
  PolicyParams policy;
  IrlTrace trace;
};

// Full loop over cfg.epochs from a seeded random theta on the given feature
// subset. The standardizer is fitted on the expert data per cfg.standardize.
IrlResult run_irl(const Simulator& sim, std::span<const Trajectory> expert, const FeatureExtractor& features,
                  const IrlConfig& cfg, const PolicyParams& init_policy,
                  const PolicyOptimizer& optimizer = optimize_policy);

}  // namespace polyirl
