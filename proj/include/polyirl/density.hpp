#pragma once

#include <span>
#include <variant>
#include <vector>

#include "polyirl/trajectory.hpp"

namespace polyirl {

struct ScottRule {};
struct SilvermanRule {};
struct FixedBandwidth {
  std::vector<double> cov;  // d x d row-major, symmetric positive definite
};
using BandwidthRule = std::variant<ScottRule, SilvermanRule, FixedBandwidth>;

// Per-state density floor applied before taking logs.
inline constexpr double kDensityFloor = 1e-300;

// Gaussian KDE with one kernel per expert state and shared covariance
// Sigma = L L^T. Support points are stored whitened (L^-1 t) in
// structure-of-arrays layout for the vectorized distance kernel.
class KdeModel {
 public:
  KdeModel(std::vector<State> support, const BandwidthRule& rule);

  int dim() const { return dim_; }
  std::size_t support_size() const { return n_; }
  const std::vector<double>& bandwidth_cov() const { return cov_; }
  // log((2 pi)^(d/2) |Sigma|^(1/2))
  double log_norm_const() const { return log_norm_; }

  // log of the mean kernel value at s, floored at log(kDensityFloor).
  double log_density(std::span<const double> s) const;

 private:
  void whiten(std::span<const double> s, double* out) const;

  int dim_ = 0;
  std::size_t n_ = 0;
  std::vector<double> cov_;
  std::vector<double> chol_;  // lower-triangular L, row-major
  double log_norm_ = 0.0;
  std::vector<std::vector<double>> columns_;
  std::vector<const double*> column_ptrs_;
};

// Pools every state of every trajectory as support.
KdeModel fit_kde(std::span<const Trajectory> data, const BandwidthRule& rule);

// Sum of per-state log densities over all states of the trajectory.
double trajectory_log_prob(const KdeModel& model, const Trajectory& traj);

struct TrajectoryLabels {
  std::vector<double> values;
  std::vector<std::size_t> trajectory_ids;
};

TrajectoryLabels make_labels(const KdeModel& model, std::span<const Trajectory> data);

}  // namespace polyirl
