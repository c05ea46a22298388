#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "polyirl/density.hpp"
#include "polyirl/error.hpp"

using namespace polyirl;

namespace {

Trajectory states_only(std::vector<State> states) {
  Trajectory t;
  t.states = std::move(states);
  return t;
}

}  // namespace

TEST_CASE("single-kernel densities match the Gaussian closed form") {
  const KdeModel one({State{0.0}}, FixedBandwidth{{1.0}});
  CHECK(std::exp(one.log_density(State{0.0})) == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(one.log_density(State{0.0}) == doctest::Approx(-0.918938533204673).epsilon(1e-12));
  const KdeModel two({State{0.0, 0.0}}, FixedBandwidth{{1, 0, 0, 1}});
  CHECK(std::exp(two.log_density(State{0.0, 0.0})) == doctest::Approx(1.0 / (2 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("distant queries hit the density floor exactly") {
  const KdeModel one({State{0.0}}, FixedBandwidth{{1.0}});
  CHECK(one.log_density(State{100.0}) == std::log(kDensityFloor));
  CHECK(std::isfinite(one.log_density(State{1e6})));
}

TEST_CASE("symmetric support gives an even density") {
  const KdeModel m({State{-1.0}, State{1.0}}, ScottRule{});
  for (double x : {0.1, 0.5, 1.3, 2.7}) CHECK(m.log_density(State{x}) == doctest::Approx(m.log_density(State{-x})).epsilon(1e-14));
}

TEST_CASE("density moves monotonically down away from an isolated kernel") {
  const KdeModel m({State{0.5, -0.5}}, FixedBandwidth{{0.4, 0.1, 0.1, 0.3}});
  double prev = m.log_density(State{0.5, -0.5});
  for (double r = 0.05; r < 60.0; r += 0.05) {
    const double cur = m.log_density(State{0.5 + r, -0.5 + 0.5 * r});
    if (prev == std::log(kDensityFloor)) {
      CHECK(cur == prev);
    } else {
      CHECK(cur < prev);
    }
    prev = cur;
  }
}

TEST_CASE("grid quadrature of the density integrates to one") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  SUBCASE("d = 1") {
    std::vector<State> support(20);
    for (auto& s : support) s = State{nd(gen)};
    const double sigma = 0.6;
    const KdeModel m(support, FixedBandwidth{{sigma * sigma}});
    double lo = 1e9, hi = -1e9;
    for (auto& s : support) {
      lo = std::min(lo, s[0]);
      hi = std::max(hi, s[0]);
    }
    lo -= 8 * sigma;
    hi += 8 * sigma;
    const int n = 20000;
    const double h = (hi - lo) / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += std::exp(m.log_density(State{lo + (i + 0.5) * h})) * h;
    CHECK(std::abs(total - 1.0) <= 0.01);
  }
  SUBCASE("d = 2") {
    std::vector<State> support(10);
    for (auto& s : support) s = State{nd(gen), nd(gen)};
    const std::vector<double> cov{0.25, 0.05, 0.05, 0.16};
    const KdeModel m(support, FixedBandwidth{cov});
    double lo[2] = {1e9, 1e9}, hi[2] = {-1e9, -1e9};
    for (auto& s : support)
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], s[k] - 8 * std::sqrt(cov[k * 3]));
        hi[k] = std::max(hi[k], s[k] + 8 * std::sqrt(cov[k * 3]));
      }
    const int n = 400;
    const double hx = (hi[0] - lo[0]) / n, hy = (hi[1] - lo[1]) / n;
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        total += std::exp(m.log_density(State{lo[0] + (i + 0.5) * hx, lo[1] + (j + 0.5) * hy})) * hx * hy;
    CHECK(std::abs(total - 1.0) <= 0.01);
  }
}

TEST_CASE("log density matches direct summation with 1000 support points") {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> nd;
  for (int d : {1, 2, 3}) {
    std::vector<State> support(1000, State(d));
    for (auto& s : support)
      for (auto& v : s) v = nd(gen);
    std::vector<double> cov(d * d, 0.0);
    for (int i = 0; i < d; ++i) cov[i * d + i] = 0.3 + 0.1 * i;
    if (d > 1) cov[1] = cov[d] = 0.05;
    const KdeModel m(support, FixedBandwidth{cov});
    for (int q = 0; q < 100; ++q) {
      State s(d);
      for (auto& v : s) v = 1.5 * nd(gen);
      const double ref = static_cast<double>(std::log(oracle::kde_density(support, cov, s)));
      CHECK(std::abs(m.log_density(s) - ref) <= 1e-9);
    }
  }
}

TEST_CASE("bandwidth rules scale the sample variances") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  std::vector<State> support(500, State(2));
  for (auto& s : support) s = State{2 * nd(gen), 0.5 * nd(gen) + 3};
  double var[2] = {0, 0}, mean[2] = {0, 0};
  for (auto& s : support)
    for (int k = 0; k < 2; ++k) mean[k] += s[k] / 500;
  for (auto& s : support)
    for (int k = 0; k < 2; ++k) var[k] += (s[k] - mean[k]) * (s[k] - mean[k]) / 499;
  const double h_scott = std::pow(500.0, -1.0 / 6.0);
  const double h_silv = std::pow(500.0 * 4.0 / 4.0, -1.0 / 6.0);
  const KdeModel scott(support, ScottRule{});
  const KdeModel silv(support, SilvermanRule{});
  for (int k = 0; k < 2; ++k) {
    CHECK(scott.bandwidth_cov()[k * 3] == doctest::Approx(h_scott * h_scott * var[k]).epsilon(1e-12));
    CHECK(silv.bandwidth_cov()[k * 3] == doctest::Approx(h_silv * h_silv * var[k]).epsilon(1e-12));
  }
  CHECK(scott.bandwidth_cov()[1] == 0.0);
}

TEST_CASE("degenerate data and invalid bandwidths are rejected") {
  std::vector<State> flat{State{1.0, 2.0}, State{1.5, 2.0}, State{0.5, 2.0}};
  try {
    KdeModel m(flat, ScottRule{});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("dimension 1") != std::string::npos);
  }
  std::vector<State> collinear{State{1.0, 2.0, 0.0}, State{2.0, 4.0, 1.0}, State{0.0, 0.0, 3.0}, State{3.0, 6.0, -1.0}};
  try {
    KdeModel m(collinear, ScottRule{});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("dimension 1") != std::string::npos);
  }
  CHECK_THROWS_AS(KdeModel({State{0.0, 0.0}}, FixedBandwidth{{1, 2, 2, 1}}), InputError);
  CHECK_THROWS_AS(KdeModel({State{0.0, 0.0}}, FixedBandwidth{{1, 0.1, 0.2, 1}}), InputError);
  CHECK_THROWS_AS(KdeModel({State{0.0}}, FixedBandwidth{{1, 0, 0, 1}}), InputError);
  CHECK_THROWS_AS(KdeModel({State{0.0}}, ScottRule{}), DataError);
  const KdeModel ok({State{0.0}}, FixedBandwidth{{1.0}});
  CHECK_THROWS_AS(ok.log_density(State{0.0, 1.0}), InputError);
}

TEST_CASE("trajectory log probability sums per-state log densities") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> nd;
  std::vector<State> support(300, State(2));
  for (auto& s : support) s = State{nd(gen), nd(gen)};
  const KdeModel m(support, ScottRule{});

  const Trajectory single = states_only({State{0.2, -0.1}});
  CHECK(trajectory_log_prob(m, single) == m.log_density(single.states[0]));

  std::vector<State> s1, s2;
  for (int i = 0; i < 100; ++i) s1.push_back(State{nd(gen), nd(gen)});
  for (int i = 0; i < 100; ++i) s2.push_back(State{nd(gen), nd(gen)});
  std::vector<State> both = s1;
  both.insert(both.end(), s2.begin(), s2.end());
  const double lp1 = trajectory_log_prob(m, states_only(s1));
  const double lp2 = trajectory_log_prob(m, states_only(s2));
  CHECK(trajectory_log_prob(m, states_only(both)) == doctest::Approx(lp1 + lp2).epsilon(1e-12));

  // Product of 200 densities, then one log, in extended precision.
  const auto& cov = m.bandwidth_cov();
  long double product = 1.0L;
  for (const auto& s : both) product *= oracle::kde_density(support, cov, s);
  CHECK(std::abs(trajectory_log_prob(m, states_only(both)) - static_cast<double>(std::log(product))) <= 1e-6);
  CHECK_THROWS_AS(trajectory_log_prob(m, Trajectory{}), InputError);
}

TEST_CASE("labels align with the dataset") {
  std::mt19937_64 gen(13);
  std::normal_distribution<double> nd;
  std::vector<Trajectory> data;
  for (int t = 0; t < 6; ++t) {
    std::vector<State> st;
    for (int i = 0; i < 30; ++i) st.push_back(State{nd(gen), nd(gen)});
    data.push_back(states_only(st));
  }
  data.push_back(data[2]);
  const KdeModel m = fit_kde(data, ScottRule{});
  CHECK(m.support_size() == 7 * 30);
  const TrajectoryLabels labels = make_labels(m, data);
  REQUIRE(labels.values.size() == data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(labels.trajectory_ids[i] == i);
    CHECK(labels.values[i] == trajectory_log_prob(m, data[i]));
    CHECK(std::isfinite(labels.values[i]));
  }
  CHECK(labels.values[2] == labels.values[6]);
  CHECK_THROWS_AS(make_labels(m, std::span<const Trajectory>(data.data(), 1)), InputError);
}

TEST_CASE("changing the kernel width shifts equal-length labels by the Mahalanobis change") {
  std::mt19937_64 gen(14);
  std::normal_distribution<double> nd;
  std::vector<State> support{State{0.0}};
  const KdeModel narrow(support, FixedBandwidth{{1.0}});
  const KdeModel wide(support, FixedBandwidth{{4.0}});
  std::vector<Trajectory> data;
  for (int t = 0; t < 5; ++t) {
    std::vector<State> st;
    for (int i = 0; i < 10; ++i) st.push_back(State{nd(gen)});
    data.push_back(states_only(st));
  }
  const auto a = make_labels(narrow, data).values;
  const auto b = make_labels(wide, data).values;
  for (std::size_t i = 1; i < data.size(); ++i) {
    double q0 = 0, qi = 0;
    for (const auto& s : data[0].states) q0 += s[0] * s[0];
    for (const auto& s : data[i].states) qi += s[0] * s[0];
    // With one support point, the gap changes by -0.5 (1 - 1/4)(qi - q0).
    CHECK((b[i] - b[0]) - (a[i] - a[0]) == doctest::Approx(0.375 * (qi - q0)).epsilon(1e-10));
  }
}
