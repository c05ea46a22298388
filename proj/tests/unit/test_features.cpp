#include <doctest.h>

#include <random>

#include "polyirl/error.hpp"
#include "polyirl/features.hpp"

using namespace polyirl;

TEST_CASE("candidate sets have d + d(d+1)/2 terms in canonical order") {
  CHECK(make_candidate_extractor(3).size() == 9);
  CHECK(make_candidate_extractor(4).size() == 14);
  CHECK(make_candidate_extractor(6).size() == 27);
  for (int d = 1; d <= 8; ++d) CHECK(make_candidate_extractor(d).size() == static_cast<std::size_t>(d + d * (d + 1) / 2));
  CHECK(make_candidate_extractor(2).candidate_names() ==
        std::vector<std::string>{"s0", "s1", "s0*s0", "s0*s1", "s1*s1"});
  CHECK_THROWS_AS(make_candidate_extractor(0), InputError);
}

TEST_CASE("term names parse back to the same term") {
  const FeatureExtractor fx = make_candidate_extractor(5);
  for (const Term& t : fx.candidate_terms()) CHECK(parse_term(t.name()) == t);
  CHECK_THROWS_AS(parse_term("s1*s0"), InputError);
  CHECK_THROWS_AS(parse_term("x0"), InputError);
}

TEST_CASE("evaluate expands monomials") {
  const auto fx2 = make_candidate_extractor(2);
  CHECK(fx2.evaluate(State{0, 0}) == FeatureVector{0, 0, 0, 0, 0});
  CHECK(fx2.evaluate(State{1, 2}) == FeatureVector{1, 2, 1, 2, 4});
  CHECK(make_candidate_extractor(1).evaluate(State{-3}) == FeatureVector{-3, 9});
  CHECK_THROWS_AS(fx2.evaluate(State{1, 2, 3}), InputError);
}

TEST_CASE("masked evaluation equals projection of the full vector") {
  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  const auto full = make_candidate_extractor(4);
  const auto masked = full.select({1, 4, 7, 13});
  CHECK(masked.active_names() == std::vector<std::string>{"s1", "s0*s0", "s0*s3", "s3*s3"});
  for (int i = 0; i < 100; ++i) {
    State s(4);
    for (auto& v : s) v = nd(gen);
    const auto all = full.evaluate(s);
    const auto sub = masked.evaluate(s);
    for (std::size_t k = 0; k < masked.size(); ++k) CHECK(sub[k] == all[masked.active_indices()[k]]);
  }
  CHECK_THROWS_AS(full.select({3, 3}), InputError);
  CHECK_THROWS_AS(full.select({14}), InputError);
  CHECK_THROWS_AS(full.select({}), InputError);
  CHECK(full.select_by_name({"s3*s3", "s1"}).active_indices() == std::vector<std::size_t>{1, 13});
}

TEST_CASE("features scale as c for linear terms and c^2 for quadratic terms") {
  const auto fx = make_candidate_extractor(3);
  const State s{0.3, -1.7, 2.25};
  const double c = 2.0;  // power of two keeps the products exact
  const auto a = fx.evaluate(s);
  const auto b = fx.evaluate(State{c * s[0], c * s[1], c * s[2]});
  for (std::size_t k = 0; k < fx.size(); ++k)
    CHECK(b[k] == (fx.active_term(k).quadratic() ? c * c * a[k] : c * a[k]));
}

TEST_CASE("trajectory features sum feature vectors over all states") {
  const auto fx = make_candidate_extractor(3);
  Trajectory one;
  one.states = {State{0.1, 0.2, 0.3}};
  CHECK(trajectory_features(fx, one) == fx.evaluate(one.states[0]));

  Trajectory t;
  t.states = {State{1, 0, 0.5}, State{0.8, 0.6, -1}, State{0, 1, 2}};
  t.actions = {0.1, 0.2};
  t.true_rewards = {0, 0};
  FeatureVector expect(9, 0.0);
  for (const auto& s : t.states) {
    const double v[9] = {s[0], s[1], s[2], s[0] * s[0], s[0] * s[1], s[0] * s[2], s[1] * s[1], s[1] * s[2], s[2] * s[2]};
    for (int k = 0; k < 9; ++k) expect[k] += v[k];
  }
  const auto got = trajectory_features(fx, t);
  for (int k = 0; k < 9; ++k) CHECK(got[k] == doctest::Approx(expect[k]).epsilon(1e-15));

  Trajectory twice = t;
  twice.states.insert(twice.states.end(), t.states.begin(), t.states.end());
  const auto doubled = trajectory_features(fx, twice);
  for (int k = 0; k < 9; ++k) CHECK(doubled[k] == doctest::Approx(2 * got[k]).epsilon(1e-15));

  Trajectory reversed = t;
  std::reverse(reversed.states.begin(), reversed.states.end());
  const auto rev = trajectory_features(fx, reversed);
  for (int k = 0; k < 9; ++k) CHECK(rev[k] == doctest::Approx(got[k]).epsilon(1e-14));

  CHECK_THROWS_AS(trajectory_features(fx, Trajectory{}), InputError);
}

TEST_CASE("dataset feature expectation is the mean trajectory feature sum") {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> nd;
  const auto fx = make_candidate_extractor(3);
  std::vector<Trajectory> data(200);
  for (auto& t : data) {
    const int len = 1 + static_cast<int>(gen() % 50);
    for (int i = 0; i < len; ++i) t.states.push_back(State{nd(gen), nd(gen), nd(gen)});
  }
  std::vector<long double> brute(9, 0.0L);
  for (const auto& t : data)
    for (const auto& s : t.states) {
      const auto phi = fx.evaluate(s);
      for (int k = 0; k < 9; ++k) brute[k] += phi[k];
    }
  const FeatureExpectation mu = dataset_feature_expectation(fx, data);
  CHECK(mu.n_trajectories == 200);
  for (int k = 0; k < 9; ++k)
    CHECK(mu.values[k] == doctest::Approx(static_cast<double>(brute[k] / 200)).epsilon(1e-9));

  const std::vector<Trajectory> same{data[0], data[0]};
  CHECK(dataset_feature_expectation(fx, same).values == trajectory_features(fx, data[0]));
  const std::vector<Trajectory> pair{data[0], data[1]};
  const auto a = trajectory_features(fx, data[0]);
  const auto b = trajectory_features(fx, data[1]);
  const auto m = dataset_feature_expectation(fx, pair).values;
  for (int k = 0; k < 9; ++k) CHECK(m[k] == doctest::Approx((a[k] + b[k]) / 2).epsilon(1e-15));
  CHECK_THROWS_AS(dataset_feature_expectation(fx, std::vector<Trajectory>{}), InputError);
}

TEST_CASE("candidate feature means determine the sample mean and covariance") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = std::vector<int>{2, 3, 4, 6}[trial % 4];
    const int n = 5 + static_cast<int>(gen() % 496);
    std::vector<State> states(n, State(d));
    for (auto& s : states)
      for (auto& v : s) v = ud(gen);
    Trajectory t;
    t.states = states;
    const auto fx = make_candidate_extractor(d);
    auto phi = trajectory_features(fx, t);
    for (auto& v : phi) v /= n;

    std::vector<double> mean(d, 0.0);
    for (const auto& s : states)
      for (int i = 0; i < d; ++i) mean[i] += s[i] / n;
    for (int i = 0; i < d; ++i) CHECK(phi[i] == doctest::Approx(mean[i]).epsilon(0).scale(0).epsilon(1e-10));
    std::size_t k = d;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j, ++k) {
        double cov = 0.0;
        for (const auto& s : states) cov += (s[i] - mean[i]) * (s[j] - mean[j]) / n;
        CHECK(std::abs((phi[k] - phi[i] * phi[j]) - cov) <= 1e-10);
      }
  }
}

TEST_CASE("standardizer pools per-state statistics") {
  const auto fx = make_candidate_extractor(1);
  Trajectory a, b;
  a.states = {State{1}, State{3}};
  b.states = {State{5}};
  const std::vector<Trajectory> data{a, b};
  const Standardizer st = Standardizer::fit(fx, data);
  CHECK(st.mean[0] == doctest::Approx(3.0));
  CHECK(st.scale[0] == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(st.mean[1] == doctest::Approx(35.0 / 3.0));

  Trajectory c;
  c.states = {State{2}, State{2}};
  const Standardizer flat = Standardizer::fit(fx, std::vector<Trajectory>{c});
  CHECK(flat.scale[0] == 1.0);
  std::vector<double> z{2.0, 4.0};
  flat.apply(z);
  CHECK(z[0] == 0.0);
}

TEST_CASE("standardize modes") {
  const auto fx = make_candidate_extractor(1);
  Trajectory a;
  a.states = {State{1}, State{3}, State{5}};
  const std::vector<Trajectory> data{a};
  const Standardizer affine = Standardizer::fit(fx, data, StandardizeMode::Affine);
  const Standardizer scale = Standardizer::fit(fx, data, StandardizeMode::Scale);
  const Standardizer none = Standardizer::fit(fx, data, StandardizeMode::None);
  CHECK(affine == Standardizer::fit(fx, data));
  CHECK(scale.scale == affine.scale);
  CHECK(scale.mean == std::vector<double>{0.0, 0.0});
  CHECK(none == Standardizer::identity(2));
  for (auto m : {StandardizeMode::None, StandardizeMode::Scale, StandardizeMode::Affine})
    CHECK(parse_standardize_mode(standardize_mode_name(m)) == m);
  CHECK_THROWS_AS(parse_standardize_mode("zscore"), InputError);
}

TEST_CASE("scale-only standardization keeps episode length in the feature sums") {
  const auto fx = make_candidate_extractor(1).select({1});
  Trajectory long_run, short_run;
  long_run.states.assign(10, State{1.0});
  short_run.states.assign(2, State{1.0});
  const std::vector<Trajectory> data{long_run};
  const Standardizer affine = Standardizer::fit(fx, data, StandardizeMode::Affine);
  const Standardizer scale = Standardizer::fit(fx, data, StandardizeMode::Scale);
  CHECK(trajectory_features(fx, long_run, &affine) == trajectory_features(fx, short_run, &affine));
  CHECK(trajectory_features(fx, long_run, &scale)[0] == 10.0);
  CHECK(trajectory_features(fx, short_run, &scale)[0] == 2.0);
}
