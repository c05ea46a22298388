#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "polyirl/error.hpp"
#include "polyirl/metrics.hpp"
#include "polyirl/rollout.hpp"

using namespace polyirl;

namespace {

std::vector<Point2> random_points(std::mt19937_64& gen, std::size_t n, double shift = 0.0) {
  std::normal_distribution<double> nd;
  std::vector<Point2> out(n);
  for (auto& p : out) p = {nd(gen) + shift, nd(gen)};
  return out;
}

double w2(const std::vector<Point2>& a, const std::vector<Point2>& b, TransportSolver solver = TransportSolver::Exact) {
  WassersteinOptions opt;
  opt.solver = solver;
  return wasserstein_2d(a, b, opt).distance;
}

}  // namespace

TEST_CASE("W2 closed-form cases") {
  const std::vector<Point2> origin{{0, 0}}, far{{3, 4}};
  CHECK(w2(origin, far) == doctest::Approx(5.0).epsilon(1e-15));
  std::mt19937_64 gen(1);
  const auto a = random_points(gen, 40);
  CHECK(w2(a, a) == 0.0);
  auto shuffled = a;
  std::shuffle(shuffled.begin(), shuffled.end(), gen);
  CHECK(w2(a, shuffled) <= 1e-12);
}

TEST_CASE("exact assignment matches exhaustive permutations") {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 6;
    const auto a = random_points(gen, n), b = random_points(gen, n, 0.5);
    CHECK(std::abs(w2(a, b) - oracle::wasserstein_bruteforce(a, b)) <= 1e-10);
  }
}

TEST_CASE("solve_assignment returns a minimum-cost permutation") {
  const std::vector<double> cost{4, 1, 3, 2, 0, 5, 3, 2, 2};
  const auto assign = solve_assignment(cost, 3);
  CHECK(assign == std::vector<int>{1, 0, 2});
  CHECK_THROWS_AS(solve_assignment(cost, 2), InputError);
}

TEST_CASE("W2 metric axioms") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_points(gen, 12), b = random_points(gen, 12, 1.0), c = random_points(gen, 12, -0.7);
    const double ab = w2(a, b), ba = w2(b, a), bc = w2(b, c), ac = w2(a, c);
    CHECK(std::abs(ab - ba) <= 1e-10);
    CHECK(ac <= ab + bc + 1e-8);
  }
}

TEST_CASE("W2 is translation invariant and scales linearly") {
  std::mt19937_64 gen(4);
  const auto a = random_points(gen, 30), b = random_points(gen, 30, 2.0);
  auto at = a, bt = b, as = a, bs = b;
  for (auto* v : {&at, &bt})
    for (auto& p : *v) p = {p[0] + 5.0, p[1] - 3.0};
  for (auto* v : {&as, &bs})
    for (auto& p : *v) p = {p[0] * 2.5, p[1] * 2.5};
  const double base = w2(a, b);
  CHECK(w2(at, bt) == doctest::Approx(base).epsilon(1e-10));
  CHECK(w2(as, bs) == doctest::Approx(2.5 * base).epsilon(1e-10));
}

TEST_CASE("Sinkhorn approximates the exact distance") {
  std::mt19937_64 gen(5);
  const auto a = random_points(gen, 64), b = random_points(gen, 64, 1.5);
  const double exact = w2(a, b);
  WassersteinOptions opt;
  opt.solver = TransportSolver::Sinkhorn;
  const WassersteinResult r = wasserstein_2d(a, b, opt);
  CHECK(r.solver == TransportSolver::Sinkhorn);
  CHECK(r.residual <= opt.tolerance);
  CHECK(std::abs(r.distance - exact) <= 0.05 * exact);

  // Duplicating every point leaves the distribution, and so the distance, unchanged.
  auto doubled = b;
  doubled.insert(doubled.end(), b.begin(), b.end());
  const WassersteinResult u = wasserstein_2d(a, doubled);
  CHECK(u.solver == TransportSolver::Sinkhorn);
  CHECK(std::abs(u.distance - exact) <= 0.05 * exact);
}

TEST_CASE("W2 input validation") {
  const std::vector<Point2> one{{0, 0}}, two{{0, 0}, {1, 1}}, none;
  CHECK_THROWS_AS(w2(one, two), InputError);
  CHECK_THROWS_AS(w2(none, one), InputError);
  const std::vector<Point2> bad{{std::nan(""), 0}};
  CHECK_THROWS_AS(w2(bad, one), DataError);
}

TEST_CASE("evaluate_policy reports true returns over seeded episodes") {
  const EnvSpec spec = make_env_spec(EnvId::CartPole);
  const Simulator sim(spec);
  PolicyParams left = make_policy(spec, PolicyFeatureMode::RawState);
  left.weights[0] = 1.0;  // bias of action 0
  const EpisodeStats stats = evaluate_policy(sim, left, 10, 0);
  CHECK(stats.returns.size() == 10);
  CHECK(stats.mean < 30.0);
  for (std::size_t i = 0; i < stats.returns.size(); ++i)
    CHECK(stats.returns[i] == doctest::Approx(static_cast<double>(stats.episodes[i].actions.size())));
  const EpisodeStats again = evaluate_policy(sim, left, 10, 0);
  CHECK(again.returns == stats.returns);
  const EpisodeStats single = evaluate_policy(sim, left, 1, 4);
  CHECK(single.std == 0.0);
  CHECK(single.mean == stats.returns[4]);
  CHECK_THROWS_AS(evaluate_policy(sim, left, 0, 0), InputError);
}

TEST_CASE("default projections map states into the documented ranges") {
  const EnvSpec spec = make_env_spec(EnvId::Pendulum);
  const Simulator sim(spec);
  PolicyParams p = make_policy(spec, PolicyFeatureMode::RawState, 0, 0.5);
  const auto data = collect_rollouts(sim, p, 5, 9, "projection", ActMode::Stochastic);
  const Projection proj = default_projection(EnvId::Pendulum);
  CHECK(proj.label() == "atan2(s1,s0)|s2");
  const auto pts = project_states(data, proj, 3, 100000, 0);
  CHECK(pts.size() == 5 * 201);
  for (const auto& q : pts) {
    CHECK((q[0] >= -std::numbers::pi && q[0] <= std::numbers::pi));
    CHECK((q[1] >= -8.0 && q[1] <= 8.0));
  }
  CHECK(default_projection(EnvId::CartPole).label() == "s0|s2");
  CHECK(default_projection(EnvId::Acrobot).label() == "atan2(s1,s0)|s4");
  CHECK(default_projection(EnvId::DoubleIntegrator).label() == "s0|s1");
}

TEST_CASE("projection coordinates") {
  const State s{0.0, 0.0, 0.0};
  const Projection raw{parse_coord("s0"), parse_coord("s1")};
  CHECK(raw.x(s) == 0.0);
  CHECK(raw.y(s) == 0.0);
  const Coord angle = parse_coord("atan2(s1,s0)");
  CHECK(angle.label() == "atan2(s1,s0)");
  const State up{-1.0, 0.0};
  CHECK(angle(up) == doctest::Approx(std::numbers::pi));
  CHECK_THROWS_AS(parse_coord("x0"), InputError);
  CHECK_THROWS_AS(parse_coord("atan2(s1)"), InputError);
  const std::vector<Trajectory> none;
  CHECK_THROWS_AS(project_states(none, Projection{parse_coord("s3"), parse_coord("s0")}, 3, 10, 0), InputError);
}

TEST_CASE("subsampling is seeded and capped") {
  const EnvSpec spec = make_env_spec(EnvId::DoubleIntegrator);
  const Simulator sim(spec);
  const auto data = collect_rollouts(sim, make_policy(spec, PolicyFeatureMode::RawState), 4, 2, "subsample");
  const Projection proj = default_projection(EnvId::DoubleIntegrator);
  const auto a = project_states(data, proj, 2, 50, 7);
  const auto b = project_states(data, proj, 2, 50, 7);
  const auto c = project_states(data, proj, 2, 50, 8);
  CHECK(a.size() == 50);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(project_states(data, proj, 2, 1000, 7).size() == 4 * 51);
}

TEST_CASE("results rows follow the CSV header") {
  CHECK(std::string(kResultsHeader) == "env,feature_set,mean_return,std_return,n_episodes,wasserstein2d,projection");
  const EvalReport r{EnvId::Acrobot, "proposed", -120.5, 10.25, 10, 0.5, "atan2(s1,s0)|s4"};
  CHECK(results_csv_row(r) == "acrobot,proposed,-120.5,10.25,10,0.5,\"atan2(s1,s0)|s4\"");
  const EvalReport d{EnvId::DoubleIntegrator, "all", -3, 0, 1, 0.125, "s0|s1"};
  CHECK(results_csv_row(d) == "double_integrator,all,-3,0,1,0.125,s0|s1");
}
