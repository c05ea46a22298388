#include "polyirl/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "polyirl/error.hpp"
#include "polyirl/features.hpp"
#include "polyirl/parallel.hpp"

namespace polyirl {

namespace {

constexpr std::size_t kMaxInputs = 64;
constexpr std::size_t kMaxHidden = 64;
constexpr std::size_t kMaxOutputs = 8;

int feature_count(PolicyFeatureMode mode, int d) {
  return mode == PolicyFeatureMode::RawState ? d : d + d * (d + 1) / 2;
}

// x = (1, features(s)); returns the number of inputs written.
std::size_t policy_inputs(const PolicyParams& p, std::span<const double> s, double* x) {
  std::size_t n = 0;
  x[n++] = 1.0;
  const int d = p.state_dim;
  for (int i = 0; i < d; ++i) x[n++] = s[i];
  if (p.feature_mode == PolicyFeatureMode::CandidatePolynomial) {
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) x[n++] = s[i] * s[j];
  }
  return n;
}

void forward(const PolicyParams& p, std::span<const double> s, double* out) {
  if (static_cast<int>(s.size()) != p.state_dim) throw InputError("policy: state dimension mismatch");
  std::array<double, kMaxInputs> x;
  const std::size_t nin = policy_inputs(p, s, x.data());
  const double* w = p.weights.data();
  if (p.hidden == 0) {
    for (int o = 0; o < p.outputs; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < nin; ++i) acc += w[o * nin + i] * x[i];
      out[o] = acc;
    }
    return;
  }
  std::array<double, kMaxHidden + 1> h;
  h[0] = 1.0;
  for (int u = 0; u < p.hidden; ++u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < nin; ++i) acc += w[u * nin + i] * x[i];
    h[u + 1] = std::tanh(acc);
  }
  const double* w2 = w + p.hidden * nin;
  const std::size_t nh = static_cast<std::size_t>(p.hidden) + 1;
  for (int o = 0; o < p.outputs; ++o) {
    double acc = 0.0;
    for (std::size_t i = 0; i < nh; ++i) acc += w2[o * nh + i] * h[i];
    out[o] = acc;
  }
}

double clamped_std(double log_std) { return std::clamp(std::exp(log_std), 1e-3, 10.0); }

void softmax_inplace(double* z, int n) {
  const double top = *std::max_element(z, z + n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    z[i] = std::exp(z[i] - top);
    sum += z[i];
  }
  for (int i = 0; i < n; ++i) z[i] /= sum;
}

}  // namespace

std::string_view policy_kind_name(PolicyKind kind) {
  return kind == PolicyKind::LinearSoftmax ? "linear_softmax" : "linear_gaussian";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "linear_softmax") return PolicyKind::LinearSoftmax;
  if (name == "linear_gaussian") return PolicyKind::LinearGaussian;
  throw ConfigError("unknown policy kind '" + std::string(name) + "'");
}

std::string_view feature_mode_name(PolicyFeatureMode mode) {
  return mode == PolicyFeatureMode::RawState ? "raw_state" : "candidate_polynomial";
}

PolicyFeatureMode parse_feature_mode(std::string_view name) {
  if (name == "raw_state") return PolicyFeatureMode::RawState;
  if (name == "candidate_polynomial") return PolicyFeatureMode::CandidatePolynomial;
  throw ConfigError("unknown policy feature mode '" + std::string(name) + "'");
}

std::string_view opt_method_name(OptMethod m) { return m == OptMethod::CEM ? "cem" : "reinforce"; }

OptMethod parse_opt_method(std::string_view name) {
  if (name == "cem") return OptMethod::CEM;
  if (name == "reinforce") return OptMethod::Reinforce;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

int PolicyParams::inputs() const { return 1 + feature_count(feature_mode, state_dim); }

std::size_t PolicyParams::weight_count() const {
  const std::size_t nin = inputs();
  if (hidden == 0) return nin * outputs;
  return nin * hidden + (hidden + 1) * outputs;
}

PolicyParams make_policy(const EnvSpec& spec, PolicyFeatureMode mode, int hidden, double log_std) {
  PolicyParams p;
  p.feature_mode = mode;
  p.state_dim = spec.state_dim;
  p.hidden = hidden;
  if (const auto* d = std::get_if<DiscreteActions>(&spec.actions)) {
    p.kind = PolicyKind::LinearSoftmax;
    p.outputs = d->n;
  } else {
    const auto& c = std::get<ContinuousActions>(spec.actions);
    p.kind = PolicyKind::LinearGaussian;
    p.outputs = 1;
    p.log_std.assign(1, log_std);
    p.action_lo = c.lo;
    p.action_hi = c.hi;
  }
  p.weights.assign(p.weight_count(), 0.0);
  check_policy(p, spec);
  return p;
}

void check_policy(const PolicyParams& p, const EnvSpec& spec) {
  if (p.state_dim != spec.state_dim) throw InputError("policy state_dim does not match the environment");
  if (p.hidden < 0 || static_cast<std::size_t>(p.hidden) > kMaxHidden) throw InputError("policy hidden width out of range");
  if (static_cast<std::size_t>(p.inputs()) > kMaxInputs) throw InputError("policy input width exceeds the supported maximum");
  if (p.outputs < 1 || static_cast<std::size_t>(p.outputs) > kMaxOutputs) throw InputError("policy output count out of range");
  if (p.weights.size() != p.weight_count()) throw InputError("policy weight count does not match its shape");
  if (spec.discrete()) {
    if (p.kind != PolicyKind::LinearSoftmax) throw InputError("discrete action space needs a softmax policy");
    if (p.outputs != std::get<DiscreteActions>(spec.actions).n) throw InputError("policy logits do not match the action count");
    if (!p.log_std.empty()) throw InputError("softmax policy carries no log_std");
  } else {
    if (p.kind != PolicyKind::LinearGaussian) throw InputError("continuous action space needs a Gaussian policy");
    if (p.outputs != 1 || p.log_std.size() != 1) throw InputError("Gaussian policy must have one output and one log_std");
    if (!std::isfinite(p.log_std[0])) throw InputError("policy log_std must be finite");
    if (!(p.action_lo < p.action_hi)) throw InputError("policy action bounds must satisfy lo < hi");
  }
  for (double w : p.weights)
    if (!std::isfinite(w)) throw InputError("policy weights must be finite");
}

std::vector<double> policy_outputs(const PolicyParams& policy, std::span<const double> s) {
  std::vector<double> out(policy.outputs);
  forward(policy, s, out.data());
  return out;
}

std::vector<double> action_probabilities(const PolicyParams& policy, std::span<const double> s) {
  if (policy.kind != PolicyKind::LinearSoftmax) throw InputError("action_probabilities needs a softmax policy");
  auto z = policy_outputs(policy, s);
  softmax_inplace(z.data(), policy.outputs);
  return z;
}

double act(const PolicyParams& policy, std::span<const double> s, Rng& rng, ActMode mode) {
  std::array<double, kMaxOutputs> z;
  forward(policy, s, z.data());
  if (policy.kind == PolicyKind::LinearSoftmax) {
    if (mode == ActMode::Deterministic)
      return static_cast<double>(std::max_element(z.begin(), z.begin() + policy.outputs) - z.begin());
    softmax_inplace(z.data(), policy.outputs);
    double u = rng.uniform(0.0, 1.0);
    for (int i = 0; i < policy.outputs - 1; ++i) {
      if (u < z[i]) return i;
      u -= z[i];
    }
    return policy.outputs - 1;
  }
  double a = z[0];
  if (mode == ActMode::Stochastic) a += clamped_std(policy.log_std[0]) * rng.normal();
  return std::clamp(a, policy.action_lo, policy.action_hi);
}

void OptBudget::validate() const {
  if (iterations < 0) throw ConfigError("optimizer iterations must be >= 0");
  if (rollouts_per_eval < 1) throw ConfigError("rollouts_per_eval must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (method == OptMethod::CEM) {
    if (population < 4) throw ConfigError("CEM population must be >= 4");
    if (!(elite_frac > 0.0 && elite_frac < 1.0)) throw ConfigError("elite_frac must lie in (0, 1)");
    if (!(init_std > 0.0) || !(min_std >= 0.0)) throw ConfigError("CEM standard deviations must be positive");
  } else if (!(learning_rate > 0.0)) {
    throw ConfigError("Reinforce learning_rate must be positive");
  }
}

std::vector<std::uint64_t> evaluation_seeds(const OptBudget& budget) {
  std::vector<std::uint64_t> seeds(budget.rollouts_per_eval);
  for (int i = 0; i < budget.rollouts_per_eval; ++i) seeds[i] = derive_seed(budget.seed, "policy-eval", i);
  return seeds;
}

double policy_score(const Simulator& sim, const RewardFn& reward_fn, const PolicyParams& policy,
                    std::span<const std::uint64_t> seeds, double gamma) {
  const int d = sim.state_dim();
  const int cap = sim.spec().max_episode_steps;
  std::vector<double> s(d), next(d), rewards;
  rewards.reserve(cap);
  Rng unused(0);
  double total = 0.0;
  for (std::uint64_t seed : seeds) {
    Rng rng(seed);
    sim.reset_into(rng, s);
    rewards.clear();
    for (int t = 0; t < cap; ++t) {
      const double a = sim.admit_action(act(policy, s, unused, ActMode::Deterministic));
      const bool terminated = sim.advance(s, a, next);
      rewards.push_back(sim.reward(reward_fn, s, a, next, terminated));
      std::swap(s, next);
      if (terminated) break;
    }
    double to_go = 0.0;
    double episode = 0.0;
    for (auto it = rewards.rbegin(); it != rewards.rend(); ++it) {
      to_go = *it + gamma * to_go;
      episode += to_go;
    }
    total += episode;
  }
  const double score = total / static_cast<double>(seeds.size());
  if (!std::isfinite(score)) throw NumericalError("policy evaluation produced a non-finite return");
  return score;
}

namespace {

OptResult optimize_cem(const Simulator& sim, const RewardFn& reward_fn, const PolicyParams& init,
                       const OptBudget& budget) {
  const auto seeds = evaluation_seeds(budget);
  const std::size_t dim = init.weights.size();
  const int n_elite = std::max(1, static_cast<int>(std::ceil(budget.elite_frac * budget.population)));

  OptResult result{init, 0.0, 0.0, {}};
  result.init_score = result.score = policy_score(sim, reward_fn, init, seeds, budget.gamma);

  std::vector<double> mean = init.weights;
  std::vector<double> stddev(dim, budget.init_std);
  std::vector<PolicyParams> candidates(budget.population, init);
  std::vector<double> scores(budget.population);
  std::vector<int> order(budget.population);

  for (int it = 0; it < budget.iterations; ++it) {
    Rng rng(derive_seed(budget.seed, "cem-sample", it));
    for (auto& c : candidates)
      for (std::size_t k = 0; k < dim; ++k) c.weights[k] = mean[k] + stddev[k] * rng.normal();

    parallel_for(candidates.size(),
                 [&](std::size_t i) { scores[i] = policy_score(sim, reward_fn, candidates[i], seeds, budget.gamma); });

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
    if (scores[order[0]] > result.score) {
      result.score = scores[order[0]];
      result.policy = candidates[order[0]];
    }

    for (std::size_t k = 0; k < dim; ++k) {
      double m = 0.0;
      for (int e = 0; e < n_elite; ++e) m += candidates[order[e]].weights[k];
      m /= n_elite;
      double v = 0.0;
      for (int e = 0; e < n_elite; ++e) {
        const double dlt = candidates[order[e]].weights[k] - m;
        v += dlt * dlt;
      }
      v /= n_elite;
      mean[k] = m;
      stddev[k] = std::sqrt(v + budget.min_std * budget.min_std);
    }

    PolicyParams centre = init;
    centre.weights = mean;
    const double centre_score = policy_score(sim, reward_fn, centre, seeds, budget.gamma);
    if (centre_score > result.score) {
      result.score = centre_score;
      result.policy = std::move(centre);
    }
    result.best_history.push_back(result.score);
  }
  return result;
}

// Vanilla policy gradient with a per-timestep mean-return baseline.
OptResult optimize_reinforce(const Simulator& sim, const RewardFn& reward_fn, const PolicyParams& init,
                             const OptBudget& budget) {
  if (init.hidden != 0) throw InputError("Reinforce supports linear policies only");
  const auto seeds = evaluation_seeds(budget);
  OptResult result{init, 0.0, 0.0, {}};
  result.init_score = result.score = policy_score(sim, reward_fn, init, seeds, budget.gamma);

  const int d = sim.state_dim();
  const int cap = sim.spec().max_episode_steps;
  const std::size_t nin = init.inputs();
  PolicyParams current = init;

  struct Step {
    std::array<double, kMaxInputs> x;
    std::array<double, kMaxOutputs> dlogp;  // d log pi / d output
    double reward;
  };

  for (int it = 0; it < budget.iterations; ++it) {
    std::vector<std::vector<Step>> episodes(budget.rollouts_per_eval);
    for (int e = 0; e < budget.rollouts_per_eval; ++e) {
      Rng rng(derive_seed(budget.seed, "reinforce-episode", static_cast<std::uint64_t>(it) * 1000003u + e));
      std::vector<double> s(d), next(d);
      sim.reset_into(rng, s);
      for (int t = 0; t < cap; ++t) {
        Step st{};
        policy_inputs(current, s, st.x.data());
        std::array<double, kMaxOutputs> z;
        forward(current, s, z.data());
        double a;
        if (current.kind == PolicyKind::LinearSoftmax) {
          softmax_inplace(z.data(), current.outputs);
          double u = rng.uniform(0.0, 1.0);
          int choice = current.outputs - 1;
          for (int i = 0; i < current.outputs - 1; ++i) {
            if (u < z[i]) {
              choice = i;
              break;
            }
            u -= z[i];
          }
          for (int i = 0; i < current.outputs; ++i) st.dlogp[i] = (i == choice ? 1.0 : 0.0) - z[i];
          a = choice;
        } else {
          const double sd = clamped_std(current.log_std[0]);
          const double sample = z[0] + sd * rng.normal();
          st.dlogp[0] = (sample - z[0]) / (sd * sd);
          a = std::clamp(sample, current.action_lo, current.action_hi);
        }
        a = sim.admit_action(a);
        const bool terminated = sim.advance(s, a, next);
        st.reward = sim.reward(reward_fn, s, a, next, terminated);
        episodes[e].push_back(st);
        std::swap(s, next);
        if (terminated) break;
      }
    }

    // Discounted returns-to-go and their per-timestep mean.
    std::vector<std::vector<double>> returns(episodes.size());
    std::vector<double> baseline(cap, 0.0);
    std::vector<int> counts(cap, 0);
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      returns[e].resize(episodes[e].size());
      double g = 0.0;
      for (std::size_t t = episodes[e].size(); t-- > 0;) {
        g = episodes[e][t].reward + budget.gamma * g;
        returns[e][t] = g;
        baseline[t] += g;
        ++counts[t];
      }
    }
    for (int t = 0; t < cap; ++t)
      if (counts[t] > 0) baseline[t] /= counts[t];

    std::vector<double> grad(current.weights.size(), 0.0);
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      for (std::size_t t = 0; t < episodes[e].size(); ++t) {
        const double adv = returns[e][t] - baseline[t];
        const auto& st = episodes[e][t];
        for (int o = 0; o < current.outputs; ++o)
          for (std::size_t i = 0; i < nin; ++i) grad[o * nin + i] += adv * st.dlogp[o] * st.x[i];
      }
    }
    double norm = 0.0;
    for (auto& g : grad) {
      g /= static_cast<double>(episodes.size());
      norm += g * g;
    }
    norm = std::sqrt(norm);
    if (!std::isfinite(norm)) throw NumericalError("policy gradient is not finite");
    const double step = budget.learning_rate / std::max(1.0, norm);
    for (std::size_t k = 0; k < grad.size(); ++k) current.weights[k] += step * grad[k];

    const double score = policy_score(sim, reward_fn, current, seeds, budget.gamma);
    if (score > result.score) {
      result.score = score;
      result.policy = current;
    }
    result.best_history.push_back(result.score);
  }
  return result;
}

}  // namespace

OptResult optimize_policy(const Simulator& sim, const RewardFn& reward_fn, const PolicyParams& init,
                          const OptBudget& budget) {
  budget.validate();
  check_policy(init, sim.spec());
  return budget.method == OptMethod::CEM ? optimize_cem(sim, reward_fn, init, budget)
                                         : optimize_reinforce(sim, reward_fn, init, budget);
}

}  // namespace polyirl
