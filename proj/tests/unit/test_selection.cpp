#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "polyirl/error.hpp"
#include "polyirl/selection.hpp"

using namespace polyirl;

namespace {

struct Instance {
  std::vector<FeatureVector> X;
  std::vector<double> y;
};

Instance planted(std::mt19937_64& gen, std::size_t n, std::size_t p, std::size_t signal, double noise) {
  std::normal_distribution<double> nd;
  Instance in;
  in.X.assign(n, FeatureVector(p));
  for (auto& row : in.X)
    for (auto& v : row) v = nd(gen);
  for (std::size_t i = 0; i < n; ++i) in.y.push_back(2.0 * in.X[i][signal] + noise * nd(gen));
  return in;
}

std::vector<double> column(const std::vector<FeatureVector>& X, std::size_t j) {
  std::vector<double> c;
  for (const auto& r : X) c.push_back(r[j]);
  return c;
}

}  // namespace

TEST_CASE("F statistics match the least-squares F-test oracle") {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const Instance in = planted(gen, 50, 20, 1, 0.1 + trial * 0.05);
    const auto scores = score_features(in.X, in.y);
    for (std::size_t j = 0; j < 20; ++j) {
      const double ref = oracle::regression_f(column(in.X, j), in.y);
      CHECK(scores[j].f_statistic == doctest::Approx(ref).epsilon(1e-8));
      const double r = scores[j].correlation;
      CHECK(scores[j].f_statistic == doctest::Approx(r * r * 48 / (1 - r * r)).epsilon(1e-9));
    }
  }
}

TEST_CASE("perfect and constant columns get the sentinel and zero") {
  std::mt19937_64 gen(22);
  Instance in = planted(gen, 30, 5, 0, 0.1);
  for (std::size_t i = 0; i < 30; ++i) {
    in.X[i][3] = in.y[i];
    in.X[i][4] = 7.0;
  }
  const auto ranked = select_top_k(score_features(in.X, in.y), 5).ranked;
  CHECK(ranked.front().term_index == 3);
  CHECK(ranked.front().f_statistic == kPerfectF);
  CHECK(ranked.back().term_index == 4);
  CHECK(ranked.back().f_statistic == 0.0);
  CHECK(ranked.back().correlation == 0.0);
}

TEST_CASE("ranking is invariant to affine label maps and positive column scaling") {
  std::mt19937_64 gen(23);
  const Instance in = planted(gen, 40, 8, 2, 1.0);
  const auto base = score_features(in.X, in.y);
  std::vector<double> y2;
  for (double v : in.y) y2.push_back(3.5 * v - 120.0);
  auto X2 = in.X;
  for (auto& r : X2) r[5] *= 1e3;
  const auto shifted = score_features(in.X, y2);
  const auto scaled = score_features(X2, in.y);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(shifted[j].f_statistic == doctest::Approx(base[j].f_statistic).epsilon(1e-9));
    CHECK(scaled[j].f_statistic == doctest::Approx(base[j].f_statistic).epsilon(1e-9));
  }
}

TEST_CASE("select_top_k keeps the best k with a lower-index tie break") {
  std::vector<FeatureScore> s{{0, "a", 1.0, 0.1}, {1, "b", 5.0, 0.5}, {2, "c", 3.0, 0.3}, {3, "d", 3.0, -0.3}};
  const SelectionResult r = select_top_k(s, 2);
  CHECK(r.selected_indices == std::vector<std::size_t>{1, 2});
  CHECK(r.ranked[0].term_index == 1);
  CHECK(r.ranked[1].term_index == 2);
  CHECK(r.ranked[2].term_index == 3);
  CHECK(select_top_k(s, 4).selected_indices == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(select_top_k(s, 0), InputError);
  CHECK_THROWS_AS(select_top_k(s, 5), InputError);
}

TEST_CASE("score_features validates its inputs") {
  std::vector<FeatureVector> X{{1, 2}, {2, 3}};
  std::vector<double> y{1, 2};
  CHECK_THROWS_AS(score_features(X, y), InputError);
  X.push_back({3, 4});
  CHECK_THROWS_AS(score_features(X, y), InputError);
  y.push_back(5);
  CHECK_NOTHROW(score_features(X, y));
  const std::vector<std::string> names{"s0", "s1"};
  CHECK(score_features(X, y, names)[1].term_name == "s1");
}

TEST_CASE("a planted signal ranks first under small noise") {
  std::mt19937_64 gen(24);
  int first = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t signal = trial % 20;
    const Instance in = planted(gen, 50, 20, signal, 0.1);
    if (select_top_k(score_features(in.X, in.y), 1).selected_indices[0] == signal) ++first;
  }
  CHECK(first >= 95);
}
