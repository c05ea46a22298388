#include "polyirl/rollout.hpp"

#include "polyirl/parallel.hpp"

namespace polyirl {

RolloutResult rollout_with_reward(const Simulator& sim, const PolicyParams& policy, const RewardFn& reward_fn,
                                  std::uint64_t seed, ActMode mode) {
  check_policy(policy, sim.spec());
  const int cap = sim.spec().max_episode_steps;
  RolloutResult out;
  Trajectory& traj = out.trajectory;
  traj.env = sim.spec().id;
  traj.seed = seed;
  traj.states.reserve(cap + 1);
  traj.actions.reserve(cap);
  traj.true_rewards.reserve(cap);

  Rng init_rng(seed);
  Rng act_rng(derive_seed(seed, "act"));
  State s(sim.state_dim());
  sim.reset_into(init_rng, s);
  traj.states.push_back(s);
  State next(sim.state_dim());
  const bool shaped = reward_fn.kind == RewardFn::Kind::LinearFeatureReward;
  for (int t = 0; t < cap; ++t) {
    const double a = sim.admit_action(act(policy, s, act_rng, mode));
    const bool terminated = sim.advance(s, a, next);
    const double r_true = sim.true_reward(s, a, next, terminated);
    out.shaped_return += shaped ? sim.reward(reward_fn, s, a, next, terminated) : r_true;
    traj.actions.push_back(a);
    traj.true_rewards.push_back(r_true);
    traj.states.push_back(next);
    s = next;
    if (terminated) break;
  }
  return out;
}

Trajectory rollout(const Simulator& sim, const PolicyParams& policy, std::uint64_t seed, ActMode mode) {
  return rollout_with_reward(sim, policy, RewardFn::true_reward(), seed, mode).trajectory;
}

Trajectory rollout(const EnvSpec& spec, const PolicyParams& policy, const RewardFn& reward_fn, std::uint64_t seed,
                   ActMode mode) {
  return rollout_with_reward(Simulator(spec), policy, reward_fn, seed, mode).trajectory;
}

std::vector<Trajectory> collect_rollouts(const Simulator& sim, const PolicyParams& policy, std::size_t n,
                                         std::uint64_t master, std::string_view purpose, ActMode mode) {
  std::vector<Trajectory> out(n);
  parallel_for(n, [&](std::size_t i) { out[i] = rollout(sim, policy, derive_seed(master, purpose, i), mode); });
  return out;
}

}  // namespace polyirl
