#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyirl/config.hpp"
#include "polyirl/maxent.hpp"
#include "polyirl/metrics.hpp"
#include "polyirl/selection.hpp"

namespace polyirl {

// In-process stages; the cmd_* wrappers below add file I/O.

struct ExpertResult {
  PolicyParams policy;
  EpisodeStats gate;  // true-reward evaluation checked against the gate
  std::vector<Trajectory> data;
};

// Trains on the true reward, enforces the expert gate (NumericalError naming
// the achieved return), then records n_trajectories deterministic episodes.
ExpertResult generate_expert(const RunConfig& cfg);

struct FeatureSelection {
  FeatureExtractor candidate;
  SelectionResult selection;
  std::vector<double> bandwidth_cov;
  TrajectoryLabels labels;
};

FeatureSelection select_features(const RunConfig& cfg, std::span<const Trajectory> data);

enum class FeatureSet { Linear, All, Random, HandPicked, Proposed };

std::string_view feature_set_name(FeatureSet set);
FeatureSet parse_feature_set(std::string_view name);

// Feature subset for a baseline label. Proposed needs `selection`.
FeatureExtractor feature_set_extractor(const RunConfig& cfg, FeatureSet set, const SelectionResult* selection);

IrlResult train_irl(const RunConfig& cfg, std::span<const Trajectory> data, const FeatureExtractor& features);

struct ManifestInputs {
  const RunConfig* config = nullptr;
  FeatureSet feature_set = FeatureSet::Proposed;
  const SelectionResult* selection = nullptr;  // may be null for baselines
  std::string dataset_path;
  std::string dataset_sha1;
  std::size_t dataset_size = 0;
};

Json make_manifest(const ManifestInputs& in, const IrlResult& result);

struct ManifestPolicy {
  EnvSpec env;
  PolicyParams policy;
  std::string feature_set;
};

ManifestPolicy manifest_policy(const Json& manifest);

// True-reward score plus 2D Wasserstein distance between the expert states
// and the states of as many fresh policy episodes as there are expert
// trajectories, both subsampled to a common size.
EvalReport evaluate_run(const RunConfig& cfg, const EnvSpec& env, const PolicyParams& policy,
                        std::span<const Trajectory> expert, std::string_view feature_set);

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> selection;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::string label = "proposed";
};

// Each returns the process exit code; failures surface as polyirl::Error.
int cmd_gen_expert(const CommandOptions& opts);
int cmd_select_features(const CommandOptions& opts);
int cmd_train_irl(const CommandOptions& opts);
int cmd_eval(const CommandOptions& opts);
int cmd_plot_data(const CommandOptions& opts);

}  // namespace polyirl
