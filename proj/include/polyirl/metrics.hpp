#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyirl/policy.hpp"

namespace polyirl {

struct EpisodeStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::vector<double> returns;
  std::vector<Trajectory> episodes;
};

// True-reward episodes of the deterministic policy on seeds seed, ..., seed + n - 1.
EpisodeStats evaluate_policy(const Simulator& sim, const PolicyParams& policy, int n_episodes, std::uint64_t seed);

using Point2 = std::array<double, 2>;

// One projected coordinate: s<i> or atan2(s<sin>, s<cos>).
struct Coord {
  int index = 0;
  int cos_index = -1;  // >= 0 for an angle recovered from (sin, cos) components

  bool angle() const { return cos_index >= 0; }
  double operator()(std::span<const double> s) const;
  std::string label() const;
  bool operator==(const Coord&) const = default;
};

Coord parse_coord(const std::string& label);

struct Projection {
  Coord x;
  Coord y;

  std::string label() const;  // "<x>|<y>"
  bool operator==(const Projection&) const = default;
};

Projection default_projection(EnvId env);

// Every state of every trajectory, projected and, when more than cap points
// exist, subsampled uniformly without replacement with a seeded shuffle.
std::vector<Point2> project_states(std::span<const Trajectory> data, const Projection& projection, int state_dim,
                                   std::size_t cap, std::uint64_t seed);

enum class TransportSolver { Auto, Exact, Sinkhorn };

inline constexpr std::size_t kExactAssignmentLimit = 2048;

struct WassersteinOptions {
  TransportSolver solver = TransportSolver::Auto;  // Exact when n == m <= kExactAssignmentLimit
  double epsilon = 0.0;            // absolute; <= 0 means relative_epsilon * mean pairwise cost
  double relative_epsilon = 1e-3;
  int max_iterations = 20000;
  double tolerance = 1e-4;         // L1 marginal residual
};

struct WassersteinResult {
  double distance = 0.0;  // sqrt of the optimal squared-Euclidean transport cost
  TransportSolver solver = TransportSolver::Exact;
  double epsilon = 0.0;   // Sinkhorn only
  int iterations = 0;     // Sinkhorn only
  double residual = 0.0;  // Sinkhorn only
};

WassersteinResult wasserstein_2d(std::span<const Point2> a, std::span<const Point2> b,
                                 const WassersteinOptions& options = {});

// Minimum-cost perfect matching of a square row-major cost matrix. Returns
// assignment[i] = column of row i.
std::vector<int> solve_assignment(std::span<const double> cost, std::size_t n);

struct EvalReport {
  EnvId env = EnvId::Pendulum;
  std::string feature_set;
  double mean_return = 0.0;
  double std_return = 0.0;
  int n_episodes = 0;
  double wasserstein2d = 0.0;
  std::string projection;
};

inline constexpr const char* kResultsHeader = "env,feature_set,mean_return,std_return,n_episodes,wasserstein2d,projection";

std::string results_csv_row(const EvalReport& report);

}  // namespace polyirl
