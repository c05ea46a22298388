#include "polyirl/env.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include "polyirl/error.hpp"

namespace polyirl {

namespace {

constexpr double kPi = std::numbers::pi;

std::atomic<std::uint64_t> g_true_reward_calls{0};

const std::map<std::string, double>& default_dynamics(EnvId id) {
  static const std::map<std::string, double> pendulum{
      {"gravity", 10.0}, {"mass", 1.0}, {"length", 1.0}, {"dt", 0.05}, {"max_speed", 8.0}, {"max_torque", 2.0}};
  static const std::map<std::string, double> cartpole{
      {"gravity", 9.8},   {"masscart", 1.0},   {"masspole", 0.1},    {"length", 0.5},
      {"force_mag", 10.0}, {"tau", 0.02}, {"x_threshold", 2.4}, {"theta_threshold_radians", 12.0 * 2.0 * kPi / 360.0}};
  static const std::map<std::string, double> acrobot{
      {"gravity", 9.8},        {"link_length_1", 1.0},  {"link_length_2", 1.0},  {"link_mass_1", 1.0},
      {"link_mass_2", 1.0},    {"link_com_pos_1", 0.5}, {"link_com_pos_2", 0.5}, {"link_moi", 1.0},
      {"max_vel_1", 4.0 * kPi}, {"max_vel_2", 9.0 * kPi}, {"dt", 0.2},           {"torque", 1.0}};
  static const std::map<std::string, double> double_integrator{
      {"dt", 0.1}, {"max_speed", 5.0}, {"max_force", 2.0}, {"weight_position", 1.0}, {"weight_velocity", 0.1}};
  switch (id) {
    case EnvId::Pendulum:
      return pendulum;
    case EnvId::CartPole:
      return cartpole;
    case EnvId::Acrobot:
      return acrobot;
    case EnvId::DoubleIntegrator:
      return double_integrator;
  }
  throw ConfigError("unknown environment");
}

int expected_state_dim(EnvId id) {
  switch (id) {
    case EnvId::Pendulum:
      return 3;
    case EnvId::CartPole:
      return 4;
    case EnvId::Acrobot:
      return 6;
    case EnvId::DoubleIntegrator:
      return 2;
  }
  return 0;
}

double clip(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

// Wraps to [-pi, pi) as the reference acrobot does.
double wrap_angle(double x) {
  const double span = 2.0 * kPi;
  while (x > kPi) x -= span;
  while (x < -kPi) x += span;
  return x;
}

}  // namespace

std::string_view env_name(EnvId id) {
  switch (id) {
    case EnvId::Pendulum:
      return "pendulum";
    case EnvId::CartPole:
      return "cartpole";
    case EnvId::Acrobot:
      return "acrobot";
    case EnvId::DoubleIntegrator:
      return "double_integrator";
  }
  return "unknown";
}

EnvId parse_env_id(std::string_view name) {
  for (EnvId id : {EnvId::Pendulum, EnvId::CartPole, EnvId::Acrobot, EnvId::DoubleIntegrator})
    if (env_name(id) == name) return id;
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

double Trajectory::true_return() const { return std::accumulate(true_rewards.begin(), true_rewards.end(), 0.0); }

void check_trajectory(const Trajectory& traj, int state_dim) {
  if (traj.states.empty()) throw DataError("trajectory has no states");
  if (traj.states.size() != traj.actions.size() + 1 || traj.actions.size() != traj.true_rewards.size())
    throw DataError("trajectory lengths violate len(states) = len(actions) + 1 = len(true_rewards) + 1");
  for (const auto& s : traj.states) {
    if (static_cast<int>(s.size()) != state_dim)
      throw DataError("trajectory state has dimension " + std::to_string(s.size()) + ", expected " +
                      std::to_string(state_dim));
    for (double v : s)
      if (!std::isfinite(v)) throw DataError("trajectory contains a non-finite state value");
  }
}

EnvSpec make_env_spec(EnvId id) {
  EnvSpec spec;
  spec.id = id;
  spec.state_dim = expected_state_dim(id);
  spec.dynamics = default_dynamics(id);
  switch (id) {
    case EnvId::Pendulum:
      spec.actions = ContinuousActions{-2.0, 2.0};
      spec.max_episode_steps = 200;
      break;
    case EnvId::CartPole:
      spec.actions = DiscreteActions{2};
      spec.max_episode_steps = 500;
      break;
    case EnvId::Acrobot:
      spec.actions = DiscreteActions{3};
      spec.max_episode_steps = 500;
      break;
    case EnvId::DoubleIntegrator:
      spec.actions = ContinuousActions{-2.0, 2.0};
      spec.max_episode_steps = 50;
      break;
  }
  return spec;
}

void validate(const EnvSpec& spec) {
  const std::string name(env_name(spec.id));
  if (spec.state_dim != expected_state_dim(spec.id))
    throw ConfigError(name + ": state_dim must be " + std::to_string(expected_state_dim(spec.id)));
  if (spec.max_episode_steps <= 0) throw ConfigError(name + ": max_episode_steps must be positive");

  const EnvSpec reference = make_env_spec(spec.id);
  if (spec.discrete() != reference.discrete()) throw ConfigError(name + ": wrong action space kind");
  if (const auto* d = std::get_if<DiscreteActions>(&spec.actions)) {
    if (d->n != std::get<DiscreteActions>(reference.actions).n) throw ConfigError(name + ": wrong action count");
  } else {
    const auto& c = std::get<ContinuousActions>(spec.actions);
    if (!(c.lo < c.hi)) throw ConfigError(name + ": continuous action bounds must satisfy lo < hi");
  }

  const auto& defaults = default_dynamics(spec.id);
  for (const auto& [key, value] : spec.dynamics) {
    if (!defaults.contains(key)) throw ConfigError(name + ": unknown dynamics constant '" + key + "'");
    if (!(value > 0.0) || !std::isfinite(value))
      throw ConfigError(name + ": dynamics constant '" + key + "' must be strictly positive");
  }
  for (const auto& [key, value] : defaults)
    if (!spec.dynamics.contains(key)) throw ConfigError(name + ": missing dynamics constant '" + key + "'");
}

std::uint64_t true_reward_evaluations() { return g_true_reward_calls.load(); }
void reset_true_reward_evaluations() { g_true_reward_calls.store(0); }

double pendulum_angle(std::span<const double> s) { return std::atan2(s[1], s[0]); }

Simulator::Simulator(EnvSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  const auto& d = spec_.dynamics;
  switch (spec_.id) {
    case EnvId::Pendulum:
      k_.gravity = d.at("gravity");
      k_.mass_1 = d.at("mass");
      k_.length_1 = d.at("length");
      k_.dt = d.at("dt");
      k_.max_speed = d.at("max_speed");
      k_.max_control = d.at("max_torque");
      break;
    case EnvId::CartPole:
      k_.gravity = d.at("gravity");
      k_.mass_1 = d.at("masscart");
      k_.mass_2 = d.at("masspole");
      k_.length_1 = d.at("length");
      k_.max_control = d.at("force_mag");
      k_.dt = d.at("tau");
      k_.x_threshold = d.at("x_threshold");
      k_.theta_threshold = d.at("theta_threshold_radians");
      break;
    case EnvId::Acrobot:
      k_.gravity = d.at("gravity");
      k_.length_1 = d.at("link_length_1");
      k_.length_2 = d.at("link_length_2");
      k_.mass_1 = d.at("link_mass_1");
      k_.mass_2 = d.at("link_mass_2");
      k_.com_1 = d.at("link_com_pos_1");
      k_.com_2 = d.at("link_com_pos_2");
      k_.inertia = d.at("link_moi");
      k_.max_speed = d.at("max_vel_1");
      k_.max_speed_2 = d.at("max_vel_2");
      k_.dt = d.at("dt");
      k_.max_control = d.at("torque");
      break;
    case EnvId::DoubleIntegrator:
      k_.dt = d.at("dt");
      k_.max_speed = d.at("max_speed");
      k_.max_control = d.at("max_force");
      k_.weight_position = d.at("weight_position");
      k_.weight_velocity = d.at("weight_velocity");
      break;
  }
}

State Simulator::reset(std::uint64_t seed) const {
  Rng rng(seed);
  State s(spec_.state_dim);
  reset_into(rng, s);
  return s;
}

void Simulator::reset_into(Rng& rng, std::span<double> out) const {
  if (static_cast<int>(out.size()) != spec_.state_dim) throw InputError("reset: output has the wrong dimension");
  switch (spec_.id) {
    case EnvId::Pendulum: {
      const double th = rng.uniform(-kPi, kPi);
      const double thdot = rng.uniform(-1.0, 1.0);
      out[0] = std::cos(th);
      out[1] = std::sin(th);
      out[2] = thdot;
      break;
    }
    case EnvId::CartPole:
      for (auto& v : out) v = rng.uniform(-0.05, 0.05);
      break;
    case EnvId::Acrobot: {
      double raw[4];
      for (auto& v : raw) v = rng.uniform(-0.1, 0.1);
      out[0] = std::cos(raw[0]);
      out[1] = std::sin(raw[0]);
      out[2] = std::cos(raw[1]);
      out[3] = std::sin(raw[1]);
      out[4] = raw[2];
      out[5] = raw[3];
      break;
    }
    case EnvId::DoubleIntegrator:
      out[0] = rng.uniform(-1.0, 1.0);
      out[1] = rng.uniform(-1.0, 1.0);
      break;
  }
}

double Simulator::admit_action(double a) const {
  if (std::isnan(a)) throw InputError("action is NaN");
  if (const auto* d = std::get_if<DiscreteActions>(&spec_.actions)) {
    if (a != std::floor(a) || a < 0.0 || a >= d->n)
      throw InputError("discrete action " + std::to_string(a) + " outside {0.." + std::to_string(d->n - 1) + "}");
    return a;
  }
  const auto& c = std::get<ContinuousActions>(spec_.actions);
  return clip(a, c.lo, c.hi);
}

namespace {

struct AcrobotTerms {
  double m1, m2, l1, lc1, lc2, i1, i2, g;
};

// Time derivative of (th1, th2, dth1, dth2) under torque a, "book" dynamics.
void acrobot_dsdt(const AcrobotTerms& k, const double* s, double a, double* out) {
  const double th1 = s[0], th2 = s[1], dth1 = s[2], dth2 = s[3];
  const double d1 = k.m1 * k.lc1 * k.lc1 + k.m2 * (k.l1 * k.l1 + k.lc2 * k.lc2 + 2.0 * k.l1 * k.lc2 * std::cos(th2)) +
                    k.i1 + k.i2;
  const double d2 = k.m2 * (k.lc2 * k.lc2 + k.l1 * k.lc2 * std::cos(th2)) + k.i2;
  const double phi2 = k.m2 * k.lc2 * k.g * std::cos(th1 + th2 - kPi / 2.0);
  const double phi1 = -k.m2 * k.l1 * k.lc2 * dth2 * dth2 * std::sin(th2) -
                      2.0 * k.m2 * k.l1 * k.lc2 * dth2 * dth1 * std::sin(th2) +
                      (k.m1 * k.lc1 + k.m2 * k.l1) * k.g * std::cos(th1 - kPi / 2.0) + phi2;
  const double ddth2 = (a + d2 / d1 * phi1 - k.m2 * k.l1 * k.lc2 * dth1 * dth1 * std::sin(th2) - phi2) /
                       (k.m2 * k.lc2 * k.lc2 + k.i2 - d2 * d2 / d1);
  const double ddth1 = -(d2 * ddth2 + phi1) / d1;
  out[0] = dth1;
  out[1] = dth2;
  out[2] = ddth1;
  out[3] = ddth2;
}

}  // namespace

bool Simulator::advance(std::span<const double> s, double a, std::span<double> next) const {
  if (static_cast<int>(s.size()) != spec_.state_dim || static_cast<int>(next.size()) != spec_.state_dim)
    throw InputError("step: state dimension mismatch");
  switch (spec_.id) {
    case EnvId::Pendulum: {
      const double th = std::atan2(s[1], s[0]);
      const double thdot = s[2];
      const double g = k_.gravity, m = k_.mass_1, l = k_.length_1, dt = k_.dt;
      double newthdot = thdot + (3.0 * g / (2.0 * l) * std::sin(th) + 3.0 / (m * l * l) * a) * dt;
      newthdot = clip(newthdot, -k_.max_speed, k_.max_speed);
      const double newth = th + newthdot * dt;
      next[0] = std::cos(newth);
      next[1] = std::sin(newth);
      next[2] = newthdot;
      return false;
    }
    case EnvId::CartPole: {
      const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
      const double force = a == 1.0 ? k_.max_control : -k_.max_control;
      const double total_mass = k_.mass_1 + k_.mass_2;
      const double polemass_length = k_.mass_2 * k_.length_1;
      const double costheta = std::cos(theta), sintheta = std::sin(theta);
      const double temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass;
      const double thetaacc = (k_.gravity * sintheta - costheta * temp) /
                              (k_.length_1 * (4.0 / 3.0 - k_.mass_2 * costheta * costheta / total_mass));
      const double xacc = temp - polemass_length * thetaacc * costheta / total_mass;
      next[0] = x + k_.dt * x_dot;
      next[1] = x_dot + k_.dt * xacc;
      next[2] = theta + k_.dt * theta_dot;
      next[3] = theta_dot + k_.dt * thetaacc;
      return next[0] < -k_.x_threshold || next[0] > k_.x_threshold || next[2] < -k_.theta_threshold ||
             next[2] > k_.theta_threshold;
    }
    case EnvId::Acrobot: {
      const AcrobotTerms terms{k_.mass_1, k_.mass_2, k_.length_1, k_.com_1, k_.com_2, k_.inertia, k_.inertia,
                               k_.gravity};
      const double torque = (a - 1.0) * k_.max_control;
      const double y0[4] = {std::atan2(s[1], s[0]), std::atan2(s[3], s[2]), s[4], s[5]};
      const double dt = k_.dt;
      double k1[4], k2[4], k3[4], k4[4], tmp[4];
      acrobot_dsdt(terms, y0, torque, k1);
      for (int i = 0; i < 4; ++i) tmp[i] = y0[i] + dt / 2.0 * k1[i];
      acrobot_dsdt(terms, tmp, torque, k2);
      for (int i = 0; i < 4; ++i) tmp[i] = y0[i] + dt / 2.0 * k2[i];
      acrobot_dsdt(terms, tmp, torque, k3);
      for (int i = 0; i < 4; ++i) tmp[i] = y0[i] + dt * k3[i];
      acrobot_dsdt(terms, tmp, torque, k4);
      double y[4];
      for (int i = 0; i < 4; ++i) y[i] = y0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      const double th1 = wrap_angle(y[0]);
      const double th2 = wrap_angle(y[1]);
      next[0] = std::cos(th1);
      next[1] = std::sin(th1);
      next[2] = std::cos(th2);
      next[3] = std::sin(th2);
      next[4] = clip(y[2], -k_.max_speed, k_.max_speed);
      next[5] = clip(y[3], -k_.max_speed_2, k_.max_speed_2);
      return -std::cos(th1) - std::cos(th2 + th1) > 1.0;
    }
    case EnvId::DoubleIntegrator: {
      const double dt = k_.dt;
      next[0] = s[0] + s[1] * dt + 0.5 * a * dt * dt;
      next[1] = clip(s[1] + a * dt, -k_.max_speed, k_.max_speed);
      return false;
    }
  }
  return false;
}

double Simulator::true_reward(std::span<const double> s, double a, std::span<const double> next,
                              bool terminated) const {
  g_true_reward_calls.fetch_add(1, std::memory_order_relaxed);
  switch (spec_.id) {
    case EnvId::Pendulum: {
      // Cost of the pre-step state and applied torque, angle already in [-pi, pi].
      const double th = std::atan2(s[1], s[0]);
      return -(th * th + 0.1 * s[2] * s[2] + 0.001 * a * a);
    }
    case EnvId::CartPole:
      return 1.0;
    case EnvId::Acrobot:
      return terminated ? 0.0 : -1.0;
    case EnvId::DoubleIntegrator:
      return -(k_.weight_position * next[0] * next[0] + k_.weight_velocity * next[1] * next[1]);
  }
  return 0.0;
}

double Simulator::reward(const RewardFn& fn, std::span<const double> s, double a, std::span<const double> next,
                         bool terminated) const {
  if (fn.kind == RewardFn::Kind::LinearFeatureReward) return (*fn.model)(next);
  return true_reward(s, a, next, terminated);
}

State reset(const EnvSpec& spec, std::uint64_t seed) { return Simulator(spec).reset(seed); }

StepResult step(const EnvSpec& spec, const State& s, double action, const RewardFn& reward_fn, int elapsed_steps) {
  const Simulator sim(spec);
  const double a = sim.admit_action(action);
  StepResult out;
  out.next.resize(spec.state_dim);
  out.terminated = sim.advance(s, a, out.next);
  out.reward = sim.reward(reward_fn, s, a, out.next, out.terminated);
  out.done = out.terminated || elapsed_steps + 1 >= spec.max_episode_steps;
  return out;
}

}  // namespace polyirl
