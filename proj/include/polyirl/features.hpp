#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polyirl/trajectory.hpp"

namespace polyirl {

// A monomial of the state: s_i (linear) or s_i * s_j with i <= j.
struct Term {
  int i = 0;
  int j = -1;  // -1 for a linear term

  bool quadratic() const { return j >= 0; }
  double operator()(std::span<const double> s) const { return quadratic() ? s[i] * s[j] : s[i]; }
  std::string name() const;
  bool operator==(const Term&) const = default;
};

Term parse_term(const std::string& name);

using FeatureVector = std::vector<double>;

// Quadratic polynomial basis over a d-dimensional state: the d linear terms
// followed by the d(d+1)/2 unique products in row-major upper-triangular
// order. An optional selection restricts evaluation to a subset of terms,
// kept in ascending candidate order.
class FeatureExtractor {
 public:
  static FeatureExtractor candidate(int state_dim);

  FeatureExtractor select(std::vector<std::size_t> candidate_indices) const;
  FeatureExtractor select_by_name(const std::vector<std::string>& names) const;

  int state_dim() const { return state_dim_; }
  std::size_t candidate_count() const { return terms_.size(); }
  std::size_t size() const { return active_.size(); }
  bool masked() const { return active_.size() != terms_.size(); }

  const std::vector<Term>& candidate_terms() const { return terms_; }
  const std::vector<std::size_t>& active_indices() const { return active_; }
  const Term& active_term(std::size_t k) const { return terms_[active_[k]]; }
  std::vector<std::string> candidate_names() const;
  std::vector<std::string> active_names() const;

  FeatureVector evaluate(std::span<const double> s) const;
  void evaluate_into(std::span<const double> s, std::span<double> out) const;

  bool operator==(const FeatureExtractor&) const = default;

 private:
  FeatureExtractor(int state_dim, std::vector<Term> terms, std::vector<std::size_t> active)
      : state_dim_(state_dim), terms_(std::move(terms)), active_(std::move(active)) {}

  void check_state(std::span<const double> s) const;

  int state_dim_ = 0;
  std::vector<Term> terms_;
  std::vector<std::size_t> active_;
};

inline FeatureExtractor make_candidate_extractor(int state_dim) { return FeatureExtractor::candidate(state_dim); }

enum class StandardizeMode { None, Scale, Affine };

StandardizeMode parse_standardize_mode(const std::string& name);
std::string standardize_mode_name(StandardizeMode mode);

// Per-feature affine map z = (phi - mean) / scale. Scales are strictly
// positive; the identity map has mean 0 and scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer identity(std::size_t n);
  // Pooled per-state statistics over every state of every trajectory.
  static Standardizer fit(const FeatureExtractor& fx, std::span<const Trajectory> data);
  // Scale mode keeps the fitted scales but leaves the mean at zero.
  static Standardizer fit(const FeatureExtractor& fx, std::span<const Trajectory> data, StandardizeMode mode);

  std::size_t size() const { return mean.size(); }
  void apply(std::span<double> phi) const;
  bool operator==(const Standardizer&) const = default;
};

// Sum of (optionally standardized) feature vectors over every state of the
// trajectory, initial state included. Undiscounted.
FeatureVector trajectory_features(const FeatureExtractor& fx, const Trajectory& traj,
                                  const Standardizer* standardizer = nullptr);

enum class ExpectationSource { ExpertData, PolicyRollouts };

struct FeatureExpectation {
  FeatureVector values;
  ExpectationSource source = ExpectationSource::ExpertData;
  std::size_t n_trajectories = 0;
};

// Mean over trajectories of trajectory_features, merged by pairwise summation.
FeatureExpectation dataset_feature_expectation(const FeatureExtractor& fx, std::span<const Trajectory> data,
                                               const Standardizer* standardizer = nullptr,
                                               ExpectationSource source = ExpectationSource::ExpertData);

// Row i = trajectory_features of data[i]; used as the selection design matrix.
std::vector<FeatureVector> trajectory_feature_matrix(const FeatureExtractor& fx, std::span<const Trajectory> data);

}  // namespace polyirl
