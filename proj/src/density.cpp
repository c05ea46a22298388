#include "polyirl/density.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "polyirl/error.hpp"
#include "polyirl/parallel.hpp"
#include "polyirl/simd/kernels.hpp"

namespace polyirl {

namespace {

// In-place lower Cholesky of a d x d row-major matrix. Returns the first
// pivot index whose residual is not positive (relative to its diagonal), or
// -1 on success.
int cholesky(std::vector<double>& a, int d, double rel_tol) {
  for (int j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    const double original = diag;
    for (int k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
    if (!(diag > rel_tol * std::abs(original)) || !(diag > 0.0)) return j;
    const double ljj = std::sqrt(diag);
    a[j * d + j] = ljj;
    for (int i = j + 1; i < d; ++i) {
      double v = a[i * d + j];
      for (int k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = v / ljj;
    }
    for (int k = j + 1; k < d; ++k) a[j * d + k] = 0.0;
  }
  return -1;
}

}  // namespace

KdeModel::KdeModel(std::vector<State> support, const BandwidthRule& rule) {
  if (support.empty()) throw DataError("KDE support is empty");
  dim_ = static_cast<int>(support.front().size());
  n_ = support.size();
  if (dim_ < 1) throw DataError("KDE support points have zero dimension");
  for (const auto& s : support) {
    if (static_cast<int>(s.size()) != dim_) throw DataError("KDE support points have inconsistent dimensions");
    for (double v : s)
      if (!std::isfinite(v)) throw DataError("KDE support contains a non-finite value");
  }
  const int d = dim_;

  if (const auto* fixed = std::get_if<FixedBandwidth>(&rule)) {
    if (fixed->cov.size() != static_cast<std::size_t>(d * d))
      throw InputError("fixed KDE bandwidth must be a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < i; ++j)
        if (fixed->cov[i * d + j] != fixed->cov[j * d + i]) throw InputError("fixed KDE bandwidth is not symmetric");
    cov_ = fixed->cov;
    chol_ = cov_;
    if (cholesky(chol_, d, 0.0) >= 0) throw InputError("fixed KDE bandwidth is not positive definite");
  } else {
    if (n_ < 2) throw DataError("bandwidth rule needs at least two support points");
    std::vector<double> mean(d, 0.0);
    for (const auto& s : support)
      for (int k = 0; k < d; ++k) mean[k] += s[k];
    for (auto& m : mean) m /= static_cast<double>(n_);
    std::vector<double> sample_cov(d * d, 0.0);
    for (const auto& s : support)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j) sample_cov[i * d + j] += (s[i] - mean[i]) * (s[j] - mean[j]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        sample_cov[i * d + j] /= static_cast<double>(n_ - 1);
        sample_cov[j * d + i] = sample_cov[i * d + j];
      }
    for (int k = 0; k < d; ++k)
      if (!(sample_cov[k * d + k] > 0.0))
        throw DataError("degenerate expert data: state dimension " + std::to_string(k) + " has zero variance");
    std::vector<double> probe = sample_cov;
    if (const int bad = cholesky(probe, d, 1e-12); bad >= 0)
      throw DataError("degenerate expert data: state dimension " + std::to_string(bad) +
                      " is linearly dependent on lower dimensions (singular sample covariance)");

    const double nn = static_cast<double>(n_);
    const double h = std::holds_alternative<ScottRule>(rule) ? std::pow(nn, -1.0 / (d + 4))
                                                              : std::pow(nn * (d + 2) / 4.0, -1.0 / (d + 4));
    cov_.assign(d * d, 0.0);
    for (int k = 0; k < d; ++k) cov_[k * d + k] = h * h * sample_cov[k * d + k];
    chol_ = cov_;
    cholesky(chol_, d, 0.0);
  }

  double log_det_half = 0.0;
  for (int k = 0; k < d; ++k) log_det_half += std::log(chol_[k * d + k]);
  log_norm_ = 0.5 * d * std::log(2.0 * std::numbers::pi) + log_det_half;

  columns_.assign(d, std::vector<double>(n_));
  std::vector<double> w(d);
  for (std::size_t j = 0; j < n_; ++j) {
    whiten(support[j], w.data());
    for (int k = 0; k < d; ++k) columns_[k][j] = w[k];
  }
  for (const auto& c : columns_) column_ptrs_.push_back(c.data());
}

void KdeModel::whiten(std::span<const double> s, double* out) const {
  const int d = dim_;
  for (int i = 0; i < d; ++i) {
    double v = s[i];
    for (int k = 0; k < i; ++k) v -= chol_[i * d + k] * out[k];
    out[i] = v / chol_[i * d + i];
  }
}

double KdeModel::log_density(std::span<const double> s) const {
  if (static_cast<int>(s.size()) != dim_)
    throw InputError("log_density: query has dimension " + std::to_string(s.size()) + ", model has " +
                     std::to_string(dim_));
  thread_local std::vector<double> dist;
  thread_local std::vector<double> query;
  dist.resize(n_);
  query.resize(dim_);
  whiten(s, query.data());
  simd::squared_distances(column_ptrs_, n_, query, dist);
  const double lse = simd::log_sum_exp(std::span<const double>(dist.data(), n_), -0.5);
  const double value = lse - std::log(static_cast<double>(n_)) - log_norm_;
  const double floor = std::log(kDensityFloor);
  return value > floor ? value : floor;
}

KdeModel fit_kde(std::span<const Trajectory> data, const BandwidthRule& rule) {
  std::vector<State> support;
  for (const auto& traj : data) support.insert(support.end(), traj.states.begin(), traj.states.end());
  return KdeModel(std::move(support), rule);
}

double trajectory_log_prob(const KdeModel& model, const Trajectory& traj) {
  if (traj.states.empty()) throw InputError("trajectory_log_prob: empty trajectory");
  double total = 0.0;
  for (const auto& s : traj.states) total += model.log_density(s);
  return total;
}

TrajectoryLabels make_labels(const KdeModel& model, std::span<const Trajectory> data) {
  if (data.size() < 2) throw InputError("make_labels needs at least two trajectories");
  TrajectoryLabels out;
  out.values.resize(data.size());
  out.trajectory_ids.resize(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    out.values[i] = trajectory_log_prob(model, data[i]);
    out.trajectory_ids[i] = i;
  });
  return out;
}

}  // namespace polyirl
