#include <doctest.h>

#include <random>

#include "polyirl/error.hpp"
#include "polyirl/maxent.hpp"
#include "polyirl/rollout.hpp"

using namespace polyirl;

namespace {

// Returns the warm-start policy unchanged; counts calls.
struct FrozenOptimizer {
  int* calls;
  int fail_on = -1;
  OptResult operator()(const Simulator&, const RewardFn& fn, const PolicyParams& init, const OptBudget&) const {
    ++*calls;
    if (*calls == fail_on) throw NumericalError("diverged");
    CHECK(fn.kind == RewardFn::Kind::LinearFeatureReward);
    OptResult r;
    r.policy = init;
    return r;
  }
};

IrlConfig small_config() {
  IrlConfig cfg;
  cfg.epochs = 2;
  cfg.n_rollouts = 6;
  cfg.rl_budget.iterations = 1;
  cfg.rl_budget.population = 4;
  cfg.rl_budget.rollouts_per_eval = 1;
  cfg.seed = 3;
  return cfg;
}

PolicyParams swing_policy(const EnvSpec& spec) {
  PolicyParams p = make_policy(spec, PolicyFeatureMode::CandidatePolynomial);
  for (std::size_t i = 0; i < p.weights.size(); ++i) p.weights[i] = 0.2 * std::sin(2.0 + i);
  return p;
}

}  // namespace

TEST_CASE("init_theta is seeded, bounded and centred") {
  CHECK(init_theta(3, 0) == init_theta(3, 0));
  CHECK(init_theta(3, 0) != init_theta(3, 1));
  std::vector<double> mean(3, 0.0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const auto t = init_theta(3, seed);
    for (int k = 0; k < 3; ++k) {
      CHECK((t[k] >= -1.0 && t[k] <= 1.0));
      mean[k] += t[k] / 10000;
    }
  }
  for (double m : mean) CHECK(std::abs(m) <= 0.05);
  CHECK_THROWS_AS(init_theta(0, 0), InputError);
}

TEST_CASE("the update ascends toward the expert feature expectation") {
  CHECK(apply_gradient_step(std::vector<double>{0, 0}, std::vector<double>{1, 0}, std::vector<double>{0, 0}, 0.2) ==
        std::vector<double>{0.2, 0.0});
  const std::vector<double> theta{0.3, -0.4};
  const std::vector<double> mu{1.5, 2.5};
  CHECK(apply_gradient_step(theta, mu, mu, 0.2) == theta);
}

TEST_CASE("matching feature expectations is a fixed point") {
  const EnvSpec spec = make_env_spec(EnvId::Pendulum);
  const Simulator sim(spec);
  const IrlConfig cfg = small_config();
  const PolicyParams policy = swing_policy(spec);
  const FeatureExtractor fx = make_candidate_extractor(3).select({0, 2, 8});
  // Expert data identical to the epoch's own rollouts.
  const auto same = collect_rollouts(sim, policy, cfg.n_rollouts, derive_seed(cfg.seed, "irl-rollouts", 1), "episode");
  const Standardizer st = Standardizer::fit(fx, same);
  const FeatureExpectation mu_e = dataset_feature_expectation(fx, same, &st);
  int calls = 0;
  const IrlState state{RewardModel({0.1, 0.2, 0.3}, fx, st), policy, 0.2, 0};
  const IrlEpochResult r = irl_epoch(sim, state, mu_e, cfg, FrozenOptimizer{&calls});
  CHECK(r.record.grad_norm == 0.0);
  CHECK(r.state.reward.theta == state.reward.theta);
  CHECK(r.record.mu_policy == mu_e.values);
}

TEST_CASE("epochs record the gradient norm of their own expectations and decay the rate") {
  const EnvSpec spec = make_env_spec(EnvId::Pendulum);
  const Simulator sim(spec);
  const IrlConfig cfg = small_config();
  const auto expert = collect_rollouts(sim, swing_policy(spec), 5, 77, "expert");
  const FeatureExtractor fx = make_candidate_extractor(3).select({0, 4, 8});
  const Standardizer st = Standardizer::fit(fx, expert);
  const FeatureExpectation mu_e = dataset_feature_expectation(fx, expert, &st);
  int calls = 0;
  IrlState state{RewardModel({0.5, -0.5, 0.1}, fx, st), make_policy(spec, PolicyFeatureMode::CandidatePolynomial),
                 0.2, 0};
  for (int e = 1; e <= 2; ++e) {
    const std::vector<double> before = state.reward.theta;
    const IrlEpochResult r = irl_epoch(sim, state, mu_e, cfg, FrozenOptimizer{&calls});
    double sq = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double g = r.record.mu_expert[k] - r.record.mu_policy[k];
      sq += g * g;
      CHECK(r.state.reward.theta[k] == doctest::Approx(before[k] + state.alpha * g).epsilon(1e-15));
    }
    CHECK(r.record.grad_norm == doctest::Approx(std::sqrt(sq)).epsilon(1e-15));
    CHECK(r.record.epoch == e);
    CHECK(r.record.theta == r.state.reward.theta);
    state = r.state;
  }
  CHECK(state.alpha == doctest::Approx(0.2 * 0.97 * 0.97).epsilon(1e-15));
  CHECK(state.alpha == doctest::Approx(0.18818).epsilon(1e-12));
  CHECK(calls == 2);
}

TEST_CASE("run_irl produces one record per epoch") {
  const EnvSpec spec = make_env_spec(EnvId::DoubleIntegrator);
  const Simulator sim(spec);
  const auto expert = collect_rollouts(sim, make_policy(spec, PolicyFeatureMode::RawState), 4, 1, "expert");
  for (int m : {1, 3}) {
    IrlConfig cfg = small_config();
    cfg.epochs = m;
    int calls = 0;
    const IrlResult r = run_irl(sim, expert, make_candidate_extractor(2), cfg,
                                make_policy(spec, PolicyFeatureMode::RawState), FrozenOptimizer{&calls});
    CHECK(r.trace.records.size() == static_cast<std::size_t>(m));
    CHECK(r.trace.records[0].alpha == cfg.learning_rate);
    CHECK(r.reward.theta == r.trace.records.back().theta);
  }
}

TEST_CASE("a failing epoch reports its theta and keeps the partial trace") {
  const EnvSpec spec = make_env_spec(EnvId::DoubleIntegrator);
  const Simulator sim(spec);
  const auto expert = collect_rollouts(sim, make_policy(spec, PolicyFeatureMode::RawState), 4, 1, "expert");
  IrlConfig cfg = small_config();
  cfg.epochs = 3;
  int calls = 0;
  try {
    run_irl(sim, expert, make_candidate_extractor(2), cfg, make_policy(spec, PolicyFeatureMode::RawState),
            FrozenOptimizer{&calls, 2});
    FAIL("expected IrlError");
  } catch (const IrlError& e) {
    CHECK(e.partial.records.size() == 1);
    CHECK(e.theta == e.partial.records[0].theta);
    CHECK(exit_code(e.kind()) == 4);
  }
}

TEST_CASE("positive rescaling of theta preserves reward orderings") {
  std::mt19937_64 gen(31);
  std::normal_distribution<double> nd;
  const FeatureExtractor fx = make_candidate_extractor(3);
  Standardizer st{std::vector<double>(9), std::vector<double>(9)};
  std::vector<double> theta(9);
  for (int k = 0; k < 9; ++k) {
    st.mean[k] = nd(gen);
    st.scale[k] = 0.5 + std::abs(nd(gen));
    theta[k] = nd(gen);
  }
  std::vector<double> tripled = theta;
  for (auto& t : tripled) t *= 3.0;
  const RewardModel a(theta, fx, st), b(tripled, fx, st);
  for (int i = 0; i < 100; ++i) {
    const State s1{nd(gen), nd(gen), nd(gen)}, s2{nd(gen), nd(gen), nd(gen)};
    CHECK((a(s1) < a(s2)) == (b(s1) < b(s2)));
  }
}

TEST_CASE("standardised and raw weights round-trip") {
  std::mt19937_64 gen(32);
  std::normal_distribution<double> nd;
  const FeatureExtractor fx = make_candidate_extractor(2);
  Standardizer st{std::vector<double>(5), std::vector<double>(5)};
  std::vector<double> theta(5);
  for (int k = 0; k < 5; ++k) {
    st.mean[k] = nd(gen);
    st.scale[k] = 0.1 + std::abs(nd(gen));
    theta[k] = nd(gen);
  }
  const RewardModel r(theta, fx, st);
  const auto back = RewardModel::standardized_from_raw(r.raw_weights(), st);
  for (int k = 0; k < 5; ++k) CHECK(std::abs(back[k] - theta[k]) <= 1e-12);
  const State s{0.4, -1.1};
  const auto phi = fx.evaluate(s);
  double raw = r.raw_offset();
  for (int k = 0; k < 5; ++k) raw += r.raw_weights()[k] * phi[k];
  CHECK(raw == doctest::Approx(r(s)).epsilon(1e-12));
}

TEST_CASE("IRL configs are validated") {
  IrlConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = IrlConfig{};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = IrlConfig{};
  cfg.lr_decay = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = IrlConfig{};
  cfg.n_rollouts = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
