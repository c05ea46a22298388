#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyirl/env.hpp"
#include "polyirl/features.hpp"
#include "polyirl/maxent.hpp"
#include "polyirl/policy.hpp"
#include "polyirl/selection.hpp"

namespace polyirl {

using Json = nlohmann::ordered_json;

// Whole-file read; InputError naming the path when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
// Writes to a sibling temporary file, then renames over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Hex SHA-1 of "blob <size>\0" + content, as git hashes file contents.
std::string git_blob_sha1(const std::string& content);

std::string trajectory_to_jsonl(const Trajectory& traj);
// line_no is used in error messages only.
Trajectory trajectory_from_jsonl(const std::string& line, std::size_t line_no);

std::string trajectories_to_jsonl(std::span<const Trajectory> data);
std::vector<Trajectory> trajectories_from_jsonl(const std::string& text);

void write_trajectories(const std::filesystem::path& path, std::span<const Trajectory> data);
std::vector<Trajectory> read_trajectories(const std::filesystem::path& path);

Json policy_to_json(const PolicyParams& policy);
PolicyParams policy_from_json(const Json& j);

Json env_spec_to_json(const EnvSpec& spec);
EnvSpec env_spec_from_json(const Json& j);

Json selection_to_json(const SelectionResult& selection, const FeatureExtractor& candidate);
SelectionResult selection_from_json(const Json& j);

Json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const Json& j);

Json reward_to_json(const RewardModel& reward);
RewardModel reward_from_json(const Json& j, int state_dim);

// "epoch,grad_norm,mean_true_return,alpha" plus one row per record.
std::string trace_to_csv(const IrlTrace& trace);

std::string dump_json(const Json& j);

}  // namespace polyirl
