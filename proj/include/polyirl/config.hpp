#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "polyirl/density.hpp"
#include "polyirl/env.hpp"
#include "polyirl/io.hpp"
#include "polyirl/maxent.hpp"
#include "polyirl/metrics.hpp"
#include "polyirl/policy.hpp"

namespace polyirl {

struct PolicyInit {
  PolicyFeatureMode feature_mode = PolicyFeatureMode::CandidatePolynomial;
  int hidden = 0;
  double log_std = -0.5;
};

struct ExpertConfig {
  int n_trajectories = 0;
  double gate = 0.0;          // minimum mean true return over gate_episodes
  int gate_episodes = 10;
  PolicyInit policy;
  OptBudget optimizer;
};

struct FeatureConfig {
  std::size_t k_selected = 0;
  StandardizeMode standardize = StandardizeMode::Scale;
};

struct EvalConfig {
  int n_episodes = 10;
  Projection projection;
  std::size_t sample_cap = 1024;
  std::string hand_picked;  // path, relative to the config file
};

struct RunConfig {
  EnvSpec env;
  std::uint64_t seed = 0;
  ExpertConfig expert;
  FeatureConfig features;
  BandwidthRule kde = ScottRule{};
  IrlConfig irl;           // irl.rl_budget comes from the "policy" section
  PolicyInit learner;
  EvalConfig eval;
  std::string output_dir;
  std::filesystem::path base_dir;  // directory of the config file
  Json source;                     // the parsed document

  // Child seeds below are derived from `seed`; this re-derives them.
  void set_seed(std::uint64_t master);
};

// Strict: every key is required and unknown keys are rejected (ConfigError).
RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace polyirl
