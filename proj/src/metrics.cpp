#include "polyirl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <regex>

#include "polyirl/error.hpp"
#include "polyirl/parallel.hpp"
#include "polyirl/rng.hpp"
#include "polyirl/rollout.hpp"
#include "polyirl/simd/kernels.hpp"

namespace polyirl {

EpisodeStats evaluate_policy(const Simulator& sim, const PolicyParams& policy, int n_episodes, std::uint64_t seed) {
  if (n_episodes < 1) throw InputError("evaluate_policy needs at least one episode");
  EpisodeStats out;
  out.episodes.resize(n_episodes);
  parallel_for(static_cast<std::size_t>(n_episodes),
               [&](std::size_t i) { out.episodes[i] = rollout(sim, policy, seed + i, ActMode::Deterministic); });
  for (const auto& e : out.episodes) out.returns.push_back(e.true_return());
  out.mean = std::accumulate(out.returns.begin(), out.returns.end(), 0.0) / n_episodes;
  double ss = 0.0;
  for (double r : out.returns) ss += (r - out.mean) * (r - out.mean);
  out.std = std::sqrt(ss / n_episodes);
  return out;
}

double Coord::operator()(std::span<const double> s) const { return angle() ? std::atan2(s[index], s[cos_index]) : s[index]; }

std::string Coord::label() const {
  if (angle()) return "atan2(s" + std::to_string(index) + ",s" + std::to_string(cos_index) + ")";
  return "s" + std::to_string(index);
}

Coord parse_coord(const std::string& label) {
  static const std::regex raw(R"(s(\d+))");
  static const std::regex ang(R"(atan2\(s(\d+),s(\d+)\))");
  std::smatch m;
  if (std::regex_match(label, m, raw)) return Coord{std::stoi(m[1]), -1};
  if (std::regex_match(label, m, ang)) return Coord{std::stoi(m[1]), std::stoi(m[2])};
  throw InputError("invalid projection coordinate '" + label + "' (expected s<i> or atan2(s<i>,s<j>))");
}

std::string Projection::label() const { return x.label() + "|" + y.label(); }

Projection default_projection(EnvId env) {
  switch (env) {
    case EnvId::Pendulum:
      return {Coord{1, 0}, Coord{2, -1}};
    case EnvId::CartPole:
      return {Coord{0, -1}, Coord{2, -1}};
    case EnvId::Acrobot:
      return {Coord{1, 0}, Coord{4, -1}};
    case EnvId::DoubleIntegrator:
      return {Coord{0, -1}, Coord{1, -1}};
  }
  return {};
}

std::vector<Point2> project_states(std::span<const Trajectory> data, const Projection& projection, int state_dim,
                                   std::size_t cap, std::uint64_t seed) {
  for (const Coord* c : {&projection.x, &projection.y})
    if (c->index < 0 || c->index >= state_dim || c->cos_index >= state_dim)
      throw InputError("projection coordinate " + c->label() + " is out of range for state dimension " +
                       std::to_string(state_dim));
  std::vector<Point2> pts;
  for (const auto& traj : data)
    for (const auto& s : traj.states) {
      if (static_cast<int>(s.size()) != state_dim) throw DataError("project_states: state dimension mismatch");
      pts.push_back({projection.x(s), projection.y(s)});
    }
  if (cap > 0 && pts.size() > cap) {
    Rng rng(derive_seed(seed, "project-subsample"));
    for (std::size_t i = 0; i < cap; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.next() % (pts.size() - i));
      std::swap(pts[i], pts[j]);
    }
    pts.resize(cap);
  }
  return pts;
}

std::vector<int> solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw InputError("solve_assignment: cost matrix is not square");
  // Shortest augmenting paths with potentials (1-based, column 0 is a sentinel).
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      const double* row = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = static_cast<int>(j - 1);
  return assignment;
}

namespace {

struct Columns {
  std::vector<double> x, y;
  std::array<const double*, 2> ptrs{};

  explicit Columns(std::span<const Point2> pts) {
    for (const auto& p : pts) {
      x.push_back(p[0]);
      y.push_back(p[1]);
    }
    ptrs = {x.data(), y.data()};
  }
};

void cost_row(const Columns& cols, const Point2& q, std::span<double> out) {
  simd::squared_distances(cols.ptrs, out.size(), q, out);
}

WassersteinResult exact(std::span<const Point2> a, std::span<const Point2> b) {
  const std::size_t n = a.size();
  const Columns cb(b);
  std::vector<double> cost(n * n);
  parallel_for(n, [&](std::size_t i) { cost_row(cb, a[i], std::span<double>(cost.data() + i * n, n)); });
  const auto assignment = solve_assignment(cost, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i * n + assignment[i]];
  WassersteinResult out;
  out.solver = TransportSolver::Exact;
  out.distance = std::sqrt(std::max(0.0, total / static_cast<double>(n)));
  return out;
}

// Log-domain Sinkhorn with uniform marginals and epsilon scaling. Cost rows
// are recomputed on the fly so memory stays O(n + m).
WassersteinResult sinkhorn(std::span<const Point2> a, std::span<const Point2> b, const WassersteinOptions& opt) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const Columns ca(a);
  const Columns cb(b);

  std::vector<double> row_sums(n), row_max(n);
  parallel_for(n, [&](std::size_t i) {
    thread_local std::vector<double> row;
    row.resize(m);
    cost_row(cb, a[i], row);
    row_sums[i] = std::accumulate(row.begin(), row.end(), 0.0);
    row_max[i] = *std::max_element(row.begin(), row.end());
  });
  const double mean_cost = std::accumulate(row_sums.begin(), row_sums.end(), 0.0) / static_cast<double>(n * m);
  const double max_cost = *std::max_element(row_max.begin(), row_max.end());
  WassersteinResult out;
  out.solver = TransportSolver::Sinkhorn;
  if (!(max_cost > 0.0)) return out;
  const double eps_target = opt.epsilon > 0.0 ? opt.epsilon : opt.relative_epsilon * mean_cost;
  out.epsilon = eps_target;

  const double log_n = std::log(static_cast<double>(n));
  const double log_m = std::log(static_cast<double>(m));
  std::vector<double> f(n, 0.0), g(m, 0.0), bias_g(m), bias_f(n);

  auto update_f = [&](double eps) {
    for (std::size_t j = 0; j < m; ++j) bias_g[j] = g[j] / eps;
    parallel_for(n, [&](std::size_t i) {
      thread_local std::vector<double> row;
      row.resize(m);
      cost_row(cb, a[i], row);
      f[i] = -eps * (simd::log_sum_exp(row, bias_g, -1.0 / eps) - log_m);
    });
  };
  auto update_g = [&](double eps) {
    for (std::size_t i = 0; i < n; ++i) bias_f[i] = f[i] / eps;
    parallel_for(m, [&](std::size_t j) {
      thread_local std::vector<double> col;
      col.resize(n);
      cost_row(ca, b[j], col);
      g[j] = -eps * (simd::log_sum_exp(col, bias_f, -1.0 / eps) - log_n);
    });
  };
  // L1 deviation of the plan's row sums from 1/n, valid right after update_g.
  auto row_residual = [&](double eps) {
    for (std::size_t j = 0; j < m; ++j) bias_g[j] = g[j] / eps;
    std::vector<double> dev(n);
    parallel_for(n, [&](std::size_t i) {
      thread_local std::vector<double> row;
      row.resize(m);
      cost_row(cb, a[i], row);
      const double log_row = f[i] / eps + simd::log_sum_exp(row, bias_g, -1.0 / eps) - log_m - log_n;
      dev[i] = std::abs(std::exp(log_row) - 1.0 / static_cast<double>(n));
    });
    return std::accumulate(dev.begin(), dev.end(), 0.0);
  };

  int iterations = 0;
  for (double eps = max_cost; eps > eps_target; eps *= 0.5) {
    for (int k = 0; k < 10 && iterations < opt.max_iterations; ++k, ++iterations) {
      update_f(eps);
      update_g(eps);
    }
  }
  double residual = std::numeric_limits<double>::infinity();
  while (iterations < opt.max_iterations) {
    update_f(eps_target);
    update_g(eps_target);
    ++iterations;
    if (iterations % 10 == 0 || iterations == opt.max_iterations) {
      residual = row_residual(eps_target);
      if (residual < opt.tolerance) break;
    }
  }
  out.iterations = iterations;
  out.residual = residual;
  if (!(residual < opt.tolerance))
    throw NumericalError("Sinkhorn did not converge within " + std::to_string(opt.max_iterations) +
                         " iterations (marginal residual " + std::to_string(residual) + ", epsilon " +
                         std::to_string(eps_target) + ")");

  for (std::size_t j = 0; j < m; ++j) bias_g[j] = g[j] / eps_target;
  std::vector<double> contrib(n);
  parallel_for(n, [&](std::size_t i) {
    thread_local std::vector<double> row;
    row.resize(m);
    cost_row(cb, a[i], row);
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      s += std::exp((f[i] + g[j] - row[j]) / eps_target - log_n - log_m) * row[j];
    contrib[i] = s;
  });
  out.distance = std::sqrt(std::max(0.0, std::accumulate(contrib.begin(), contrib.end(), 0.0)));
  return out;
}

}  // namespace

WassersteinResult wasserstein_2d(std::span<const Point2> a, std::span<const Point2> b,
                                 const WassersteinOptions& options) {
  if (a.empty() || b.empty()) throw InputError("wasserstein_2d: empty sample set");
  for (auto set : {a, b})
    for (const auto& p : set)
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw DataError("wasserstein_2d: non-finite sample");
  TransportSolver solver = options.solver;
  if (solver == TransportSolver::Auto)
    solver = (a.size() == b.size() && a.size() <= kExactAssignmentLimit) ? TransportSolver::Exact
                                                                          : TransportSolver::Sinkhorn;
  if (solver == TransportSolver::Exact) {
    if (a.size() != b.size())
      throw InputError("exact assignment needs equal sample sizes, got " + std::to_string(a.size()) + " and " +
                       std::to_string(b.size()));
    return exact(a, b);
  }
  return sinkhorn(a, b, options);
}

std::string results_csv_row(const EvalReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.10g,%.10g,%d,%.10g", r.mean_return, r.std_return, r.n_episodes, r.wasserstein2d);
  std::string proj = r.projection;
  if (proj.find_first_of(",\"") != std::string::npos) {
    std::string q = "\"";
    for (char c : proj) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    proj = q + "\"";
  }
  return std::string(env_name(r.env)) + "," + r.feature_set + "," + buf + "," + proj;
}

}  // namespace polyirl
