#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "polyirl/env.hpp"
#include "polyirl/rng.hpp"

namespace polyirl {

enum class PolicyKind { LinearSoftmax, LinearGaussian };
enum class PolicyFeatureMode { RawState, CandidatePolynomial };

std::string_view policy_kind_name(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);
std::string_view feature_mode_name(PolicyFeatureMode mode);
PolicyFeatureMode parse_feature_mode(std::string_view name);

// Stochastic policy over a feature map x(s) = (1, features(s)).
//
// hidden == 0: outputs = W x.
// hidden  > 0: outputs = W2 (1, tanh(W1 x)), a small two-layer map.
//
// Outputs are action logits (LinearSoftmax) or the action mean
// (LinearGaussian, exploration std = exp(log_std) clamped to [1e-3, 10]).
// weights holds W (or W1 then W2) row-major.
struct PolicyParams {
  PolicyKind kind = PolicyKind::LinearGaussian;
  PolicyFeatureMode feature_mode = PolicyFeatureMode::CandidatePolynomial;
  int state_dim = 0;
  int outputs = 1;
  int hidden = 0;
  std::vector<double> weights;
  std::vector<double> log_std;  // continuous only, one per output
  double action_lo = -1.0;      // continuous only
  double action_hi = 1.0;

  int inputs() const;
  std::size_t weight_count() const;
  bool operator==(const PolicyParams&) const = default;
};

// Zero-initialised policy shaped for the environment's action space.
PolicyParams make_policy(const EnvSpec& spec, PolicyFeatureMode mode, int hidden = 0, double log_std = -0.5);

// Throws InputError when the shapes are inconsistent or incompatible with spec.
void check_policy(const PolicyParams& policy, const EnvSpec& spec);

enum class ActMode { Deterministic, Stochastic };

// Raw network outputs (logits or mean) for state s.
std::vector<double> policy_outputs(const PolicyParams& policy, std::span<const double> s);
// Softmax over logits; LinearSoftmax only.
std::vector<double> action_probabilities(const PolicyParams& policy, std::span<const double> s);

// Deterministic: argmax logit (lowest index on ties) or the clipped mean.
// Stochastic: softmax sample or a clipped Gaussian sample.
double act(const PolicyParams& policy, std::span<const double> s, Rng& rng, ActMode mode);

enum class OptMethod { CEM, Reinforce };

std::string_view opt_method_name(OptMethod m);
OptMethod parse_opt_method(std::string_view name);

struct OptBudget {
  OptMethod method = OptMethod::CEM;
  int iterations = 20;
  int population = 32;         // CEM
  double elite_frac = 0.25;    // CEM
  int rollouts_per_eval = 8;
  double gamma = 0.99;
  std::uint64_t seed = 0;
  double init_std = 0.5;       // CEM sampling std at the first iteration
  double min_std = 0.05;       // CEM std floor added in quadrature after each refit
  double learning_rate = 0.05;  // Reinforce

  void validate() const;
};

// Mean over seeded deterministic episodes of the discounted return-to-go
// summed over every visited state, sum_t sum_{k>=t} gamma^(k-t) r_k.
// Each visited state counts as a start state, so short discount horizons
// still reward reaching good states late in the episode.
double policy_score(const Simulator& sim, const RewardFn& reward_fn, const PolicyParams& policy,
                    std::span<const std::uint64_t> seeds, double gamma);

struct OptResult {
  PolicyParams policy;
  double score = 0.0;       // policy_score of the returned policy on the evaluation seeds
  double init_score = 0.0;
  std::vector<double> best_history;  // best-so-far score after each iteration
};

// Improves init against reward_fn. The returned policy scores at least as
// well as init on the fixed evaluation seeds (best-seen elitism).
OptResult optimize_policy(const Simulator& sim, const RewardFn& reward_fn, const PolicyParams& init,
                          const OptBudget& budget);

std::vector<std::uint64_t> evaluation_seeds(const OptBudget& budget);

}  // namespace polyirl
