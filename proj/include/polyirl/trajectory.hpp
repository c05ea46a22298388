#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace polyirl {

enum class EnvId { Pendulum, CartPole, Acrobot, DoubleIntegrator };

std::string_view env_name(EnvId id);
EnvId parse_env_id(std::string_view name);

// Observation vector. Pendulum: cos th, sin th, th_dot. CartPole: x, x_dot,
// th, th_dot. Acrobot: cos th1, sin th1, cos th2, sin th2, th1_dot, th2_dot.
// DoubleIntegrator: position, velocity.
using State = std::vector<double>;

// One episode. Every supported task has a scalar action: the clipped control
// for continuous spaces, the action index for discrete ones.
struct Trajectory {
  EnvId env = EnvId::Pendulum;
  std::vector<State> states;      // T + 1
  std::vector<double> actions;    // T
  std::vector<double> true_rewards;  // T
  std::uint64_t seed = 0;

  std::size_t transitions() const { return actions.size(); }
  double true_return() const;

  bool operator==(const Trajectory&) const = default;
};

// Throws DataError when the length relations or state widths are violated.
void check_trajectory(const Trajectory& traj, int state_dim);

}  // namespace polyirl
