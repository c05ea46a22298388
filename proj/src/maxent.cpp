#include "polyirl/maxent.hpp"

#include <chrono>
#include <cmath>

#include "polyirl/rng.hpp"
#include "polyirl/rollout.hpp"

namespace polyirl {

void IrlConfig::validate() const {
  if (epochs < 1) throw ConfigError("irl.epochs must be >= 1");
  if (n_rollouts < 1) throw ConfigError("irl.n_rollouts must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("irl.learning_rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("irl.lr_decay must lie in (0, 1]");
  rl_budget.validate();
}

std::vector<double> init_theta(std::size_t p, std::uint64_t seed) {
  if (p < 1) throw InputError("init_theta needs at least one feature");
  Rng rng(derive_seed(seed, "irl-theta"));
  std::vector<double> theta(p);
  for (auto& t : theta) t = rng.uniform(-1.0, 1.0);
  return theta;
}

std::vector<double> apply_gradient_step(std::span<const double> theta, std::span<const double> mu_expert,
                                        std::span<const double> mu_policy, double alpha) {
  if (mu_expert.size() != theta.size() || mu_policy.size() != theta.size())
    throw InputError("apply_gradient_step: size mismatch");
  std::vector<double> out(theta.begin(), theta.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * (mu_expert[i] - mu_policy[i]);
  return out;
}

IrlEpochResult irl_epoch(const Simulator& sim, const IrlState& state, const FeatureExpectation& mu_expert,
                         const IrlConfig& cfg, const PolicyOptimizer& optimizer) {
  const auto start = std::chrono::steady_clock::now();
  const RewardModel& reward = state.reward;
  if (mu_expert.values.size() != reward.theta.size())
    throw InputError("irl_epoch: expert feature expectation has " + std::to_string(mu_expert.values.size()) +
                     " entries for " + std::to_string(reward.theta.size()) + " weights");
  const int epoch = state.epoch + 1;

  OptBudget budget = cfg.rl_budget;
  budget.seed = derive_seed(cfg.seed, "irl-policy", epoch);
  const RewardFn reward_fn = RewardFn::linear(reward);
  OptResult opt;
  try {
    opt = optimizer(sim, reward_fn, state.policy, budget);
  } catch (const NumericalError& e) {
    throw IrlError("epoch " + std::to_string(epoch) + ": policy optimization failed: " + e.what(), reward.theta, {});
  }

  const auto rollouts = collect_rollouts(sim, opt.policy, static_cast<std::size_t>(cfg.n_rollouts),
                                         derive_seed(cfg.seed, "irl-rollouts", epoch), "episode");
  const FeatureExpectation mu_policy = dataset_feature_expectation(
      reward.extractor, rollouts, &reward.standardizer, ExpectationSource::PolicyRollouts);

  IrlEpochRecord rec;
  rec.epoch = epoch;
  rec.alpha = state.alpha;
  rec.mu_expert = mu_expert.values;
  rec.mu_policy = mu_policy.values;
  double sq = 0.0;
  for (std::size_t i = 0; i < rec.mu_expert.size(); ++i) {
    const double g = rec.mu_expert[i] - rec.mu_policy[i];
    sq += g * g;
  }
  rec.grad_norm = std::sqrt(sq);
  double ret = 0.0;
  for (const auto& t : rollouts) ret += t.true_return();
  rec.mean_true_return = ret / static_cast<double>(rollouts.size());

  std::vector<double> theta = apply_gradient_step(reward.theta, rec.mu_expert, rec.mu_policy, state.alpha);
  for (double t : theta)
    if (!std::isfinite(t)) throw IrlError("epoch " + std::to_string(epoch) + ": non-finite theta", theta, {});
  rec.theta = theta;

  IrlEpochResult out{
      IrlState{RewardModel(std::move(theta), reward.extractor, reward.standardizer), std::move(opt.policy),
               state.alpha * cfg.lr_decay, epoch},
      std::move(rec)};
  out.record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

IrlResult run_irl(const Simulator& sim, std::span<const Trajectory> expert, const FeatureExtractor& features,
                  const IrlConfig& cfg, const PolicyParams& init_policy, const PolicyOptimizer& optimizer) {
  cfg.validate();
  if (expert.empty()) throw InputError("run_irl: empty expert dataset");
  if (features.state_dim() != sim.state_dim())
    throw InputError("run_irl: feature extractor state dimension does not match the environment");
  check_policy(init_policy, sim.spec());

  Standardizer standardizer = Standardizer::fit(features, expert, cfg.standardize);
  const FeatureExpectation mu_expert = dataset_feature_expectation(features, expert, &standardizer);

  IrlState state{RewardModel(init_theta(features.size(), cfg.seed), features, standardizer), init_policy,
                 cfg.learning_rate, 0};
  IrlTrace trace;
  for (int e = 0; e < cfg.epochs; ++e) {
    try {
      IrlEpochResult r = irl_epoch(sim, state, mu_expert, cfg, optimizer);
      state = std::move(r.state);
      trace.records.push_back(std::move(r.record));
    } catch (IrlError& err) {
      throw IrlError(err.what(), err.theta, trace);
    }
  }
  return IrlResult{std::move(state.reward), std::move(state.policy), std::move(trace)};
}

}  // namespace polyirl
