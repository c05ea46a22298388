#include "polyirl/features.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <unordered_map>

#include "polyirl/error.hpp"

namespace polyirl {

std::string Term::name() const {
  std::string out = "s" + std::to_string(i);
  if (quadratic()) out += "*s" + std::to_string(j);
  return out;
}

Term parse_term(const std::string& name) {
  static const std::regex pattern(R"(s(\d+)(?:\*s(\d+))?)");
  std::smatch m;
  if (!std::regex_match(name, m, pattern)) throw InputError("malformed feature term '" + name + "'");
  Term t{std::stoi(m[1].str()), m[2].matched ? std::stoi(m[2].str()) : -1};
  if (t.quadratic() && t.j < t.i) throw InputError("feature term '" + name + "' is not in canonical i<=j form");
  return t;
}

FeatureExtractor FeatureExtractor::candidate(int state_dim) {
  if (state_dim < 1) throw InputError("candidate extractor needs state_dim >= 1, got " + std::to_string(state_dim));
  std::vector<Term> terms;
  terms.reserve(state_dim + state_dim * (state_dim + 1) / 2);
  for (int i = 0; i < state_dim; ++i) terms.push_back({i, -1});
  for (int i = 0; i < state_dim; ++i)
    for (int j = i; j < state_dim; ++j) terms.push_back({i, j});
  std::vector<std::size_t> active(terms.size());
  for (std::size_t k = 0; k < active.size(); ++k) active[k] = k;
  return FeatureExtractor(state_dim, std::move(terms), std::move(active));
}

FeatureExtractor FeatureExtractor::select(std::vector<std::size_t> candidate_indices) const {
  std::sort(candidate_indices.begin(), candidate_indices.end());
  if (candidate_indices.empty()) throw InputError("feature selection must keep at least one term");
  if (std::adjacent_find(candidate_indices.begin(), candidate_indices.end()) != candidate_indices.end())
    throw InputError("feature selection contains duplicate indices");
  if (candidate_indices.back() >= terms_.size())
    throw InputError("feature index " + std::to_string(candidate_indices.back()) + " out of range");
  return FeatureExtractor(state_dim_, terms_, std::move(candidate_indices));
}

FeatureExtractor FeatureExtractor::select_by_name(const std::vector<std::string>& names) const {
  std::unordered_map<std::string, std::size_t> lookup;
  for (std::size_t k = 0; k < terms_.size(); ++k) lookup.emplace(terms_[k].name(), k);
  std::vector<std::size_t> idx;
  for (const auto& n : names) {
    auto it = lookup.find(n);
    if (it == lookup.end()) throw InputError("unknown feature term '" + n + "'");
    idx.push_back(it->second);
  }
  return select(std::move(idx));
}

std::vector<std::string> FeatureExtractor::candidate_names() const {
  std::vector<std::string> out;
  for (const auto& t : terms_) out.push_back(t.name());
  return out;
}

std::vector<std::string> FeatureExtractor::active_names() const {
  std::vector<std::string> out;
  for (auto k : active_) out.push_back(terms_[k].name());
  return out;
}

void FeatureExtractor::check_state(std::span<const double> s) const {
  if (static_cast<int>(s.size()) != state_dim_)
    throw InputError("state has dimension " + std::to_string(s.size()) + ", extractor expects " +
                     std::to_string(state_dim_));
}

FeatureVector FeatureExtractor::evaluate(std::span<const double> s) const {
  FeatureVector out(active_.size());
  evaluate_into(s, out);
  return out;
}

void FeatureExtractor::evaluate_into(std::span<const double> s, std::span<double> out) const {
  check_state(s);
  if (out.size() != active_.size()) throw InputError("feature output buffer has the wrong length");
  for (std::size_t k = 0; k < active_.size(); ++k) out[k] = terms_[active_[k]](s);
}

Standardizer Standardizer::identity(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }

Standardizer Standardizer::fit(const FeatureExtractor& fx, std::span<const Trajectory> data) {
  const std::size_t p = fx.size();
  std::vector<double> sum(p, 0.0);
  std::size_t count = 0;
  FeatureVector phi(p);
  for (const auto& traj : data) {
    for (const auto& s : traj.states) {
      fx.evaluate_into(s, phi);
      for (std::size_t k = 0; k < p; ++k) sum[k] += phi[k];
      ++count;
    }
  }
  if (count < 2) throw DataError("standardizer needs at least two states");

  Standardizer out{std::vector<double>(p), std::vector<double>(p)};
  for (std::size_t k = 0; k < p; ++k) out.mean[k] = sum[k] / static_cast<double>(count);
  std::vector<double> sq(p, 0.0);
  for (const auto& traj : data) {
    for (const auto& s : traj.states) {
      fx.evaluate_into(s, phi);
      for (std::size_t k = 0; k < p; ++k) {
        const double d = phi[k] - out.mean[k];
        sq[k] += d * d;
      }
    }
  }
  for (std::size_t k = 0; k < p; ++k) {
    const double var = sq[k] / static_cast<double>(count);
    // Constant features keep unit scale; they only shift by their mean.
    const double floor = 1e-24 * (1.0 + out.mean[k] * out.mean[k]);
    out.scale[k] = var > floor ? std::sqrt(var) : 1.0;
  }
  return out;
}

Standardizer Standardizer::fit(const FeatureExtractor& fx, std::span<const Trajectory> data, StandardizeMode mode) {
  switch (mode) {
    case StandardizeMode::None:
      return identity(fx.size());
    case StandardizeMode::Scale: {
      Standardizer out = fit(fx, data);
      std::fill(out.mean.begin(), out.mean.end(), 0.0);
      return out;
    }
    case StandardizeMode::Affine:
      break;
  }
  return fit(fx, data);
}

StandardizeMode parse_standardize_mode(const std::string& name) {
  if (name == "none") return StandardizeMode::None;
  if (name == "scale") return StandardizeMode::Scale;
  if (name == "affine") return StandardizeMode::Affine;
  throw InputError("unknown standardize mode '" + name + "' (expected none, scale or affine)");
}

std::string standardize_mode_name(StandardizeMode mode) {
  switch (mode) {
    case StandardizeMode::None:
      return "none";
    case StandardizeMode::Scale:
      return "scale";
    case StandardizeMode::Affine:
      break;
  }
  return "affine";
}

void Standardizer::apply(std::span<double> phi) const {
  if (phi.size() != mean.size()) throw InputError("standardizer width does not match the feature vector");
  for (std::size_t k = 0; k < phi.size(); ++k) phi[k] = (phi[k] - mean[k]) / scale[k];
}

namespace {

// Pairwise summation of rows[lo, hi) into out.
void pairwise_accumulate(std::span<const FeatureVector> rows, FeatureVector& out) {
  constexpr std::size_t kLeaf = 8;
  if (rows.size() <= kLeaf) {
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& r : rows)
      for (std::size_t k = 0; k < out.size(); ++k) out[k] += r[k];
    return;
  }
  const std::size_t half = rows.size() / 2;
  FeatureVector right(out.size());
  pairwise_accumulate(rows.first(half), out);
  pairwise_accumulate(rows.subspan(half), right);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] += right[k];
}

}  // namespace

FeatureVector trajectory_features(const FeatureExtractor& fx, const Trajectory& traj, const Standardizer* standardizer) {
  if (traj.states.empty()) throw InputError("trajectory_features: empty trajectory");
  if (standardizer && standardizer->size() != fx.size())
    throw InputError("standardizer width does not match the extractor");
  std::vector<FeatureVector> rows;
  rows.reserve(traj.states.size());
  for (const auto& s : traj.states) {
    rows.push_back(fx.evaluate(s));
    if (standardizer) standardizer->apply(rows.back());
  }
  FeatureVector out(fx.size());
  pairwise_accumulate(rows, out);
  return out;
}

std::vector<FeatureVector> trajectory_feature_matrix(const FeatureExtractor& fx, std::span<const Trajectory> data) {
  std::vector<FeatureVector> rows;
  rows.reserve(data.size());
  for (const auto& traj : data) rows.push_back(trajectory_features(fx, traj));
  return rows;
}

FeatureExpectation dataset_feature_expectation(const FeatureExtractor& fx, std::span<const Trajectory> data,
                                               const Standardizer* standardizer, ExpectationSource source) {
  if (data.empty()) throw InputError("dataset_feature_expectation: empty dataset");
  std::vector<FeatureVector> rows;
  rows.reserve(data.size());
  for (const auto& traj : data) rows.push_back(trajectory_features(fx, traj, standardizer));
  FeatureExpectation out{FeatureVector(fx.size()), source, data.size()};
  pairwise_accumulate(rows, out.values);
  for (auto& v : out.values) v /= static_cast<double>(data.size());
  return out;
}

}  // namespace polyirl
