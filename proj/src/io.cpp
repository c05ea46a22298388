#include "polyirl/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "polyirl/error.hpp"

namespace polyirl {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw InputError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string git_blob_sha1(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) && EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("SHA-1 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char c = digest[i];
    std::snprintf(buf, sizeof buf, "%02x", c);
    hex += buf;
  }
  return hex;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

std::string trajectory_to_jsonl(const Trajectory& traj) {
  Json j;
  j["env"] = env_name(traj.env);
  j["seed"] = traj.seed;
  j["states"] = traj.states;
  Json actions = Json::array();
  for (double a : traj.actions) actions.push_back(Json::array({a}));
  j["actions"] = std::move(actions);
  j["true_rewards"] = traj.true_rewards;
  return j.dump();
}

namespace {

std::vector<double> number_array(const Json& j, const std::string& what) {
  if (!j.is_array()) throw DataError(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw DataError(what + " must contain only numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

const Json& field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

}  // namespace

Trajectory trajectory_from_jsonl(const std::string& line, std::size_t line_no) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  try {
    const Json j = Json::parse(line);
    if (!j.is_object()) throw DataError("record is not a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "env" && it.key() != "seed" && it.key() != "states" && it.key() != "actions" &&
          it.key() != "true_rewards")
        throw DataError("unknown field '" + it.key() + "'");
    Trajectory t;
    const Json& env = field(j, "env");
    if (!env.is_string()) throw DataError("env must be a string");
    try {
      t.env = parse_env_id(env.get<std::string>());
    } catch (const Error& e) {
      throw DataError(e.what());
    }
    const Json& seed = field(j, "seed");
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() && seed.get<std::int64_t>() < 0))
      throw DataError("seed must be a non-negative integer");
    t.seed = seed.get<std::uint64_t>();
    const Json& states = field(j, "states");
    if (!states.is_array()) throw DataError("states must be an array");
    for (const auto& s : states) t.states.push_back(number_array(s, "each state"));
    const Json& actions = field(j, "actions");
    if (!actions.is_array()) throw DataError("actions must be an array");
    for (const auto& a : actions) {
      const auto v = number_array(a, "each action");
      if (v.size() != 1) throw DataError("each action must have exactly one component");
      t.actions.push_back(v[0]);
    }
    t.true_rewards = number_array(field(j, "true_rewards"), "true_rewards");
    if (t.states.empty()) throw DataError("trajectory has no states");
    check_trajectory(t, static_cast<int>(t.states.front().size()));
    return t;
  } catch (const Json::exception& e) {
    throw DataError(where + "malformed JSON: " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  }
}

std::string trajectories_to_jsonl(std::span<const Trajectory> data) {
  std::string out;
  for (const auto& t : data) {
    out += trajectory_to_jsonl(t);
    out += '\n';
  }
  return out;
}

std::vector<Trajectory> trajectories_from_jsonl(const std::string& text) {
  std::vector<Trajectory> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(trajectory_from_jsonl(line, line_no));
    if (out.back().env != out.front().env || out.back().states.front().size() != out.front().states.front().size())
      throw DataError("line " + std::to_string(line_no) + ": trajectory does not match the first record's environment");
  }
  if (out.empty()) throw DataError("trajectory file contains no records");
  return out;
}

void write_trajectories(const fs::path& path, std::span<const Trajectory> data) {
  write_file_atomic(path, trajectories_to_jsonl(data));
}

std::vector<Trajectory> read_trajectories(const fs::path& path) {
  try {
    return trajectories_from_jsonl(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

Json policy_to_json(const PolicyParams& p) {
  Json j;
  j["kind"] = policy_kind_name(p.kind);
  j["feature_mode"] = feature_mode_name(p.feature_mode);
  j["state_dim"] = p.state_dim;
  j["inputs"] = p.inputs();
  j["outputs"] = p.outputs;
  j["hidden"] = p.hidden;
  j["weights"] = p.weights;
  j["log_std"] = p.log_std;
  j["action_lo"] = p.action_lo;
  j["action_hi"] = p.action_hi;
  return j;
}

PolicyParams policy_from_json(const Json& j) {
  try {
    PolicyParams p;
    p.kind = parse_policy_kind(j.at("kind").get<std::string>());
    p.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    p.state_dim = j.at("state_dim").get<int>();
    p.outputs = j.at("outputs").get<int>();
    p.hidden = j.at("hidden").get<int>();
    p.weights = j.at("weights").get<std::vector<double>>();
    p.log_std = j.at("log_std").get<std::vector<double>>();
    p.action_lo = j.at("action_lo").get<double>();
    p.action_hi = j.at("action_hi").get<double>();
    if (p.state_dim < 1 || p.weights.size() != p.weight_count())
      throw DataError("policy weight count does not match its shape");
    if (j.contains("inputs") && j.at("inputs").get<int>() != p.inputs())
      throw DataError("policy input count does not match its feature mode");
    return p;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid policy record: ") + e.what());
  }
}

Json env_spec_to_json(const EnvSpec& spec) {
  Json j;
  j["id"] = env_name(spec.id);
  j["state_dim"] = spec.state_dim;
  if (const auto* c = std::get_if<ContinuousActions>(&spec.actions))
    j["actions"] = Json{{"type", "continuous"}, {"lo", c->lo}, {"hi", c->hi}};
  else
    j["actions"] = Json{{"type", "discrete"}, {"n", std::get<DiscreteActions>(spec.actions).n}};
  j["max_episode_steps"] = spec.max_episode_steps;
  Json dyn = Json::object();
  for (const auto& [k, v] : spec.dynamics) dyn[k] = v;
  j["dynamics"] = std::move(dyn);
  return j;
}

EnvSpec env_spec_from_json(const Json& j) {
  try {
    EnvSpec spec = make_env_spec(parse_env_id(j.at("id").get<std::string>()));
    spec.state_dim = j.at("state_dim").get<int>();
    const Json& a = j.at("actions");
    if (a.at("type").get<std::string>() == "continuous")
      spec.actions = ContinuousActions{a.at("lo").get<double>(), a.at("hi").get<double>()};
    else
      spec.actions = DiscreteActions{a.at("n").get<int>()};
    spec.max_episode_steps = j.at("max_episode_steps").get<int>();
    spec.dynamics = j.at("dynamics").get<std::map<std::string, double>>();
    validate(spec);
    return spec;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid environment record: ") + e.what());
  } catch (const Error& e) {
    throw DataError(std::string("invalid environment record: ") + e.what());
  }
}

Json selection_to_json(const SelectionResult& sel, const FeatureExtractor& candidate) {
  Json j;
  j["candidate_names"] = candidate.candidate_names();
  j["k"] = sel.k;
  Json ranked = Json::array();
  for (const auto& fs : sel.ranked) {
    const bool selected =
        std::find(sel.selected_indices.begin(), sel.selected_indices.end(), fs.term_index) != sel.selected_indices.end();
    ranked.push_back(Json{{"term_index", fs.term_index},
                          {"term_name", fs.term_name},
                          {"f_statistic", fs.f_statistic},
                          {"correlation", fs.correlation},
                          {"selected", selected}});
  }
  j["ranked"] = std::move(ranked);
  j["selected_indices"] = sel.selected_indices;
  std::vector<std::string> names;
  for (auto i : sel.selected_indices) names.push_back(candidate.candidate_terms().at(i).name());
  j["selected_names"] = names;
  return j;
}

SelectionResult selection_from_json(const Json& j) {
  try {
    SelectionResult s;
    s.k = j.at("k").get<std::size_t>();
    for (const auto& r : j.at("ranked"))
      s.ranked.push_back(FeatureScore{r.at("term_index").get<std::size_t>(), r.at("term_name").get<std::string>(),
                                      r.at("f_statistic").get<double>(), r.at("correlation").get<double>()});
    s.selected_indices = j.at("selected_indices").get<std::vector<std::size_t>>();
    if (s.selected_indices.size() != s.k) throw DataError("selection: k does not match selected_indices");
    return s;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid selection record: ") + e.what());
  }
}

Json standardizer_to_json(const Standardizer& s) { return Json{{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer standardizer_from_json(const Json& j) {
  try {
    Standardizer s{j.at("mean").get<std::vector<double>>(), j.at("scale").get<std::vector<double>>()};
    if (s.mean.size() != s.scale.size()) throw DataError("standardizer mean and scale differ in length");
    return s;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid standardizer record: ") + e.what());
  }
}

Json reward_to_json(const RewardModel& r) {
  Json j;
  j["feature_names"] = r.extractor.active_names();
  j["theta"] = r.theta;
  j["theta_raw"] = r.raw_weights();
  j["raw_offset"] = r.raw_offset();
  j["standardizer"] = standardizer_to_json(r.standardizer);
  return j;
}

RewardModel reward_from_json(const Json& j, int state_dim) {
  try {
    const auto names = j.at("feature_names").get<std::vector<std::string>>();
    FeatureExtractor fx = FeatureExtractor::candidate(state_dim).select_by_name(names);
    if (fx.active_names() != names) throw DataError("reward feature names are not in canonical order");
    return RewardModel(j.at("theta").get<std::vector<double>>(), std::move(fx),
                       standardizer_from_json(j.at("standardizer")));
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid reward record: ") + e.what());
  } catch (const InputError& e) {
    throw DataError(std::string("invalid reward record: ") + e.what());
  }
}

std::string trace_to_csv(const IrlTrace& trace) {
  std::string out = "epoch,grad_norm,mean_true_return,alpha\n";
  char buf[160];
  for (const auto& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", r.epoch, r.grad_norm, r.mean_true_return, r.alpha);
    out += buf;
  }
  return out;
}

}  // namespace polyirl
