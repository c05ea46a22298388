#pragma once

#include <cstdint>
#include <vector>

#include "polyirl/env.hpp"
#include "polyirl/policy.hpp"

namespace polyirl {

// One full episode; deterministic given (seed, policy, spec). The recorded
// true_rewards always come from the task reward, the reward_fn only shapes
// what the caller accumulates through `shaped_return`.
struct RolloutResult {
  Trajectory trajectory;
  double shaped_return = 0.0;
};

RolloutResult rollout_with_reward(const Simulator& sim, const PolicyParams& policy, const RewardFn& reward_fn,
                                  std::uint64_t seed, ActMode mode = ActMode::Deterministic);

Trajectory rollout(const Simulator& sim, const PolicyParams& policy, std::uint64_t seed,
                   ActMode mode = ActMode::Deterministic);
Trajectory rollout(const EnvSpec& spec, const PolicyParams& policy, const RewardFn& reward_fn, std::uint64_t seed,
                   ActMode mode = ActMode::Deterministic);

// Episodes for seeds derive_seed(master, purpose, i), i < n, run in parallel.
std::vector<Trajectory> collect_rollouts(const Simulator& sim, const PolicyParams& policy, std::size_t n,
                                         std::uint64_t master, std::string_view purpose,
                                         ActMode mode = ActMode::Deterministic);

}  // namespace polyirl
