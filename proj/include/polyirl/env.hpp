#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>

#include "polyirl/reward.hpp"
#include "polyirl/rng.hpp"
#include "polyirl/trajectory.hpp"

namespace polyirl {

struct ContinuousActions {
  double lo = -1.0;
  double hi = 1.0;
  bool operator==(const ContinuousActions&) const = default;
};

struct DiscreteActions {
  int n = 2;
  bool operator==(const DiscreteActions&) const = default;
};

using ActionSpace = std::variant<ContinuousActions, DiscreteActions>;

struct EnvSpec {
  EnvId id = EnvId::Pendulum;
  int state_dim = 3;
  ActionSpace actions = ContinuousActions{-2.0, 2.0};
  int max_episode_steps = 200;
  // Named physical constants; every entry strictly positive.
  std::map<std::string, double> dynamics;

  bool discrete() const { return std::holds_alternative<DiscreteActions>(actions); }
  bool operator==(const EnvSpec&) const = default;
};

// Reference-environment defaults (Gymnasium classic control constants).
EnvSpec make_env_spec(EnvId id);

// Throws ConfigError when the spec violates its invariants.
void validate(const EnvSpec& spec);

struct StepResult {
  State next;
  double reward = 0.0;
  bool terminated = false;  // task termination condition
  bool done = false;        // terminated or step cap reached
};

// Counts true-reward evaluations process-wide; lets callers verify that an
// optimizer driven by a learned reward never consults the task reward.
std::uint64_t true_reward_evaluations();
void reset_true_reward_evaluations();

// Precomputed dynamics for one EnvSpec. Immutable and safe to share.
class Simulator {
 public:
  explicit Simulator(EnvSpec spec);

  const EnvSpec& spec() const { return spec_; }
  int state_dim() const { return spec_.state_dim; }

  State reset(std::uint64_t seed) const;
  void reset_into(Rng& rng, std::span<double> out) const;

  // Continuous actions are clipped to bounds; discrete actions must be an
  // in-range integer index (InputError otherwise).
  double admit_action(double a) const;

  // Writes the successor of s under the admitted action a; returns whether
  // the termination condition holds in the successor.
  bool advance(std::span<const double> s, double a, std::span<double> next) const;

  double true_reward(std::span<const double> s, double a, std::span<const double> next, bool terminated) const;
  double reward(const RewardFn& fn, std::span<const double> s, double a, std::span<const double> next,
                bool terminated) const;

 private:
  EnvSpec spec_;
  // Unpacked from spec_.dynamics; unused fields stay zero for a given task.
  struct Constants {
    double gravity = 0, dt = 0, max_speed = 0, max_speed_2 = 0, max_control = 0;
    double mass_1 = 0, mass_2 = 0, length_1 = 0, length_2 = 0, com_1 = 0, com_2 = 0, inertia = 0;
    double x_threshold = 0, theta_threshold = 0, weight_position = 0, weight_velocity = 0;
  } k_;
};

State reset(const EnvSpec& spec, std::uint64_t seed);
StepResult step(const EnvSpec& spec, const State& s, double action, const RewardFn& reward_fn, int elapsed_steps = 0);

// atan2(sin th, cos th) of a Pendulum observation.
double pendulum_angle(std::span<const double> s);

}  // namespace polyirl
