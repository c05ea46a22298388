#include "polyirl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include "polyirl/error.hpp"
#include "polyirl/io.hpp"
#include "polyirl/rollout.hpp"

namespace polyirl {

namespace fs = std::filesystem;

namespace {

PolicyParams initial_policy(const EnvSpec& env, const PolicyInit& init) {
  return make_policy(env, init.feature_mode, init.hidden, init.log_std);
}

void require_env(const RunConfig& cfg, std::span<const Trajectory> data) {
  if (data.empty()) throw DataError("dataset is empty");
  for (const auto& t : data) {
    if (t.env != cfg.env.id)
      throw InputError("dataset environment '" + std::string(env_name(t.env)) + "' does not match config environment '" +
                       std::string(env_name(cfg.env.id)) + "'");
    check_trajectory(t, cfg.env.state_dim);
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

ExpertResult generate_expert(const RunConfig& cfg) {
  const Simulator sim(cfg.env);
  const OptResult opt =
      optimize_policy(sim, RewardFn::true_reward(), initial_policy(cfg.env, cfg.expert.policy), cfg.expert.optimizer);
  ExpertResult out;
  out.policy = opt.policy;
  out.gate = evaluate_policy(sim, out.policy, cfg.expert.gate_episodes, derive_seed(cfg.seed, "expert-gate"));
  if (!(out.gate.mean >= cfg.expert.gate)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "expert gate unmet: mean true return %.3f over %d episodes, gate %.3f",
                  out.gate.mean, cfg.expert.gate_episodes, cfg.expert.gate);
    throw NumericalError(buf);
  }
  out.data = collect_rollouts(sim, out.policy, static_cast<std::size_t>(cfg.expert.n_trajectories),
                              derive_seed(cfg.seed, "expert-data"), "trajectory");
  return out;
}

FeatureSelection select_features(const RunConfig& cfg, std::span<const Trajectory> data) {
  require_env(cfg, data);
  FeatureSelection out{make_candidate_extractor(cfg.env.state_dim), {}, {}, {}};
  const KdeModel kde = fit_kde(data, cfg.kde);
  out.bandwidth_cov = kde.bandwidth_cov();
  out.labels = make_labels(kde, data);
  const auto X = trajectory_feature_matrix(out.candidate, data);
  const auto names = out.candidate.candidate_names();
  out.selection = select_top_k(score_features(X, out.labels.values, names), cfg.features.k_selected);
  return out;
}

std::string_view feature_set_name(FeatureSet set) {
  switch (set) {
    case FeatureSet::Linear:
      return "linear";
    case FeatureSet::All:
      return "all";
    case FeatureSet::Random:
      return "random";
    case FeatureSet::HandPicked:
      return "hand-picked";
    case FeatureSet::Proposed:
      return "proposed";
  }
  return "?";
}

FeatureSet parse_feature_set(std::string_view name) {
  for (auto s : {FeatureSet::Linear, FeatureSet::All, FeatureSet::Random, FeatureSet::HandPicked, FeatureSet::Proposed})
    if (feature_set_name(s) == name) return s;
  throw InputError("unknown feature-set label '" + std::string(name) +
                   "' (expected linear, all, random, hand-picked or proposed)");
}

FeatureExtractor feature_set_extractor(const RunConfig& cfg, FeatureSet set, const SelectionResult* selection) {
  const FeatureExtractor candidate = make_candidate_extractor(cfg.env.state_dim);
  switch (set) {
    case FeatureSet::Linear: {
      std::vector<std::size_t> idx(cfg.env.state_dim);
      std::iota(idx.begin(), idx.end(), 0);
      return candidate.select(idx);
    }
    case FeatureSet::All:
      return candidate;
    case FeatureSet::Random: {
      std::vector<std::size_t> idx(candidate.candidate_count());
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(derive_seed(cfg.seed, "random-features"));
      for (std::size_t i = 0; i < cfg.features.k_selected; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next() % (idx.size() - i));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(cfg.features.k_selected);
      return candidate.select(idx);
    }
    case FeatureSet::HandPicked: {
      const fs::path path = cfg.base_dir / cfg.eval.hand_picked;
      Json j;
      try {
        j = Json::parse(read_file(path));
        if (j.at("env").get<std::string>() != env_name(cfg.env.id))
          throw ConfigError(path.string() + ": hand-picked list is for a different environment");
        return candidate.select_by_name(j.at("features").get<std::vector<std::string>>());
      } catch (const Json::exception& e) {
        throw ConfigError(path.string() + ": invalid hand-picked feature list: " + e.what());
      } catch (const InputError& e) {
        throw ConfigError(path.string() + ": " + e.what());
      }
    }
    case FeatureSet::Proposed:
      if (!selection) throw InputError("the proposed feature set needs a selection result");
      return candidate.select(selection->selected_indices);
  }
  return candidate;
}

IrlResult train_irl(const RunConfig& cfg, std::span<const Trajectory> data, const FeatureExtractor& features) {
  require_env(cfg, data);
  const Simulator sim(cfg.env);
  return run_irl(sim, data, features, cfg.irl, initial_policy(cfg.env, cfg.learner));
}

Json make_manifest(const ManifestInputs& in, const IrlResult& result) {
  const RunConfig& cfg = *in.config;
  Json m;
  m["format"] = "polyirl-manifest/1";
  m["feature_set"] = feature_set_name(in.feature_set);
  Json config = cfg.source;
  config["seed"] = cfg.seed;
  m["config"] = std::move(config);
  m["env"] = env_spec_to_json(cfg.env);
  m["dataset"] = Json{{"path", in.dataset_path}, {"sha1", in.dataset_sha1}, {"n_trajectories", in.dataset_size}};
  const FeatureExtractor candidate = make_candidate_extractor(cfg.env.state_dim);
  m["candidate_features"] = candidate.candidate_names();
  m["selection"] = in.selection ? selection_to_json(*in.selection, candidate) : Json(nullptr);
  m["reward"] = reward_to_json(result.reward);
  m["policy"] = policy_to_json(result.policy);
  Json irl;
  irl["epochs_completed"] = result.trace.records.size();
  irl["final_grad_norm"] = result.trace.records.empty() ? 0.0 : result.trace.records.back().grad_norm;
  irl["final_mean_true_return"] = result.trace.records.empty() ? 0.0 : result.trace.records.back().mean_true_return;
  m["irl"] = std::move(irl);
  return m;
}

ManifestPolicy manifest_policy(const Json& manifest) {
  try {
    ManifestPolicy out{env_spec_from_json(manifest.at("env")), policy_from_json(manifest.at("policy")),
                       manifest.at("feature_set").get<std::string>()};
    check_policy(out.policy, out.env);
    return out;
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid manifest: ") + e.what());
  } catch (const InputError& e) {
    throw DataError(std::string("invalid manifest: ") + e.what());
  }
}

EvalReport evaluate_run(const RunConfig& cfg, const EnvSpec& env, const PolicyParams& policy,
                        std::span<const Trajectory> expert, std::string_view feature_set) {
  const Simulator sim(env);
  const EpisodeStats stats = evaluate_policy(sim, policy, cfg.eval.n_episodes, derive_seed(cfg.seed, "eval"));
  const auto episodes =
      collect_rollouts(sim, policy, expert.size(), derive_seed(cfg.seed, "eval-distribution"), "episode");

  std::size_t n_expert = 0, n_policy = 0;
  for (const auto& t : expert) n_expert += t.states.size();
  for (const auto& t : episodes) n_policy += t.states.size();
  const std::size_t n = std::min({cfg.eval.sample_cap, n_expert, n_policy});
  const auto a = project_states(expert, cfg.eval.projection, env.state_dim, n, derive_seed(cfg.seed, "w2-expert"));
  const auto b = project_states(episodes, cfg.eval.projection, env.state_dim, n, derive_seed(cfg.seed, "w2-policy"));

  EvalReport r;
  r.env = env.id;
  r.feature_set = std::string(feature_set);
  r.mean_return = stats.mean;
  r.std_return = stats.std;
  r.n_episodes = cfg.eval.n_episodes;
  r.wasserstein2d = wasserstein_2d(a, b).distance;
  r.projection = cfg.eval.projection.label();
  return r;
}

namespace {

struct Loaded {
  RunConfig cfg;
  fs::path out;
};

Loaded load(const CommandOptions& opts) {
  Loaded l{load_run_config(opts.config), {}};
  if (opts.seed) l.cfg.set_seed(*opts.seed);
  l.out = opts.out ? *opts.out : fs::path(l.cfg.output_dir);
  return l;
}

fs::path dataset_path(const CommandOptions& opts, const fs::path& out) {
  const fs::path p = opts.dataset ? *opts.dataset : out / "expert.jsonl";
  if (!fs::exists(p)) throw InputError("dataset not found: " + p.string());
  return p;
}

void info(const std::string& msg) { std::fprintf(stderr, "%s\n", msg.c_str()); }

Json timing_record(const IrlTrace& trace, const std::string& started) {
  Json t;
  t["started_utc"] = started;
  t["finished_utc"] = utc_now();
  Json epochs = Json::array();
  for (const auto& r : trace.records) epochs.push_back(r.wall_seconds);
  t["epoch_wall_seconds"] = std::move(epochs);
  return t;
}

// Runs IRL on the features and writes manifest, trace and timing sidecar.
// On failure the partial trace is still written before rethrowing.
IrlResult train_and_record(const RunConfig& cfg, std::span<const Trajectory> data, const fs::path& data_path,
                           const std::string& data_text, FeatureSet set, const SelectionResult* selection,
                           const fs::path& manifest_path, const fs::path& trace_path) {
  const FeatureExtractor features = feature_set_extractor(cfg, set, selection);
  const std::string started = utc_now();
  std::optional<IrlResult> trained;
  try {
    trained = train_irl(cfg, data, features);
  } catch (const IrlError& e) {
    write_file_atomic(trace_path, trace_to_csv(e.partial));
    throw;
  }
  IrlResult& result = *trained;
  write_file_atomic(trace_path, trace_to_csv(result.trace));
  // Relative to the manifest so identical runs in different directories match.
  const fs::path base = fs::absolute(manifest_path).parent_path().lexically_normal();
  fs::path stored = fs::absolute(data_path).lexically_normal().lexically_relative(base);
  if (stored.empty()) stored = data_path;
  ManifestInputs in{&cfg, set, selection, stored.generic_string(), git_blob_sha1(data_text), data.size()};
  write_file_atomic(manifest_path, dump_json(make_manifest(in, result)));
  fs::path timing = manifest_path;
  timing.replace_extension(".timing.json");
  write_file_atomic(timing, dump_json(timing_record(result.trace, started)));
  return std::move(result);
}

void append_result(const fs::path& path, const EvalReport& report) {
  std::string content;
  if (fs::exists(path)) {
    content = read_file(path);
    if (content.rfind(kResultsHeader, 0) != 0) throw DataError(path.string() + ": unexpected results header");
    if (!content.empty() && content.back() != '\n') content += '\n';
  } else {
    content = std::string(kResultsHeader) + "\n";
  }
  content += results_csv_row(report) + "\n";
  write_file_atomic(path, content);
}

}  // namespace

int cmd_gen_expert(const CommandOptions& opts) {
  const Loaded l = load(opts);
  const ExpertResult r = generate_expert(l.cfg);
  write_trajectories(l.out / "expert.jsonl", r.data);
  Json p;
  p["env"] = env_spec_to_json(l.cfg.env);
  p["policy"] = policy_to_json(r.policy);
  p["gate"] = Json{{"threshold", l.cfg.expert.gate}, {"mean_return", r.gate.mean}, {"std_return", r.gate.std},
                   {"returns", r.gate.returns}};
  write_file_atomic(l.out / "expert_policy.json", dump_json(p));
  char buf[128];
  std::snprintf(buf, sizeof buf, "expert mean return %.3f (gate %.3f); wrote %zu trajectories", r.gate.mean,
                l.cfg.expert.gate, r.data.size());
  info(buf);
  return 0;
}

int cmd_select_features(const CommandOptions& opts) {
  const Loaded l = load(opts);
  const fs::path dpath = dataset_path(opts, l.out);
  const std::string text = read_file(dpath);
  std::vector<Trajectory> data;
  try {
    data = trajectories_from_jsonl(text);
  } catch (const DataError& e) {
    throw DataError(dpath.string() + ": " + e.what());
  }
  const FeatureSelection fsel = select_features(l.cfg, data);
  Json j = selection_to_json(fsel.selection, fsel.candidate);
  j["dataset_sha1"] = git_blob_sha1(text);
  j["kde_bandwidth_cov"] = fsel.bandwidth_cov;
  write_file_atomic(opts.selection ? *opts.selection : l.out / "selection.json", dump_json(j));
  std::string names;
  for (auto i : fsel.selection.selected_indices) names += " " + fsel.candidate.candidate_terms()[i].name();
  info("selected" + names);
  return 0;
}

int cmd_train_irl(const CommandOptions& opts) {
  const Loaded l = load(opts);
  const fs::path dpath = dataset_path(opts, l.out);
  const fs::path spath = opts.selection ? *opts.selection : l.out / "selection.json";
  if (!fs::exists(spath)) throw InputError("selection not found: " + spath.string());
  const std::string text = read_file(dpath);
  Json sj;
  try {
    sj = Json::parse(read_file(spath));
  } catch (const Json::exception& e) {
    throw DataError(spath.string() + ": invalid JSON: " + e.what());
  }
  const SelectionResult selection = selection_from_json(sj);
  if (sj.contains("dataset_sha1") && sj["dataset_sha1"] != git_blob_sha1(text))
    throw InputError("selection " + spath.string() + " was not produced from dataset " + dpath.string());
  std::vector<Trajectory> data;
  try {
    data = trajectories_from_jsonl(text);
  } catch (const DataError& e) {
    throw DataError(dpath.string() + ": " + e.what());
  }
  const fs::path mpath = opts.manifest ? *opts.manifest : l.out / "manifest.json";
  const IrlResult r = train_and_record(l.cfg, data, dpath, text, FeatureSet::Proposed, &selection, mpath,
                                       l.out / "trace.csv");
  char buf[128];
  std::snprintf(buf, sizeof buf, "IRL finished %zu epochs; final mean true return %.3f", r.trace.records.size(),
                r.trace.records.back().mean_true_return);
  info(buf);
  return 0;
}

int cmd_eval(const CommandOptions& opts) {
  const Loaded l = load(opts);
  const FeatureSet set = parse_feature_set(opts.label);
  const fs::path dpath = dataset_path(opts, l.out);
  const std::string text = read_file(dpath);
  std::vector<Trajectory> data;
  try {
    data = trajectories_from_jsonl(text);
  } catch (const DataError& e) {
    throw DataError(dpath.string() + ": " + e.what());
  }
  require_env(l.cfg, data);

  EnvSpec env = l.cfg.env;
  PolicyParams policy;
  if (set == FeatureSet::Proposed) {
    const fs::path mpath = opts.manifest ? *opts.manifest : l.out / "manifest.json";
    if (!fs::exists(mpath)) throw InputError("manifest not found: " + mpath.string());
    Json mj;
    try {
      mj = Json::parse(read_file(mpath));
    } catch (const Json::exception& e) {
      throw DataError(mpath.string() + ": invalid JSON: " + e.what());
    }
    ManifestPolicy mp = manifest_policy(mj);
    env = std::move(mp.env);
    policy = std::move(mp.policy);
  } else {
    const std::string tag(feature_set_name(set));
    policy = train_and_record(l.cfg, data, dpath, text, set, nullptr, l.out / ("manifest_" + tag + ".json"),
                              l.out / ("trace_" + tag + ".csv"))
                 .policy;
  }
  const EvalReport report = evaluate_run(l.cfg, env, policy, data, feature_set_name(set));
  append_result(l.out / "results.csv", report);
  info(results_csv_row(report));
  return 0;
}

int cmd_plot_data(const CommandOptions& opts) {
  const Loaded l = load(opts);
  // Learning curves: every trace CSV in the output directory, tagged by label.
  std::vector<std::pair<std::string, fs::path>> traces;
  if (fs::exists(l.out / "trace.csv")) traces.emplace_back("proposed", l.out / "trace.csv");
  for (auto set : {FeatureSet::Linear, FeatureSet::All, FeatureSet::Random, FeatureSet::HandPicked}) {
    const std::string tag(feature_set_name(set));
    const fs::path p = l.out / ("trace_" + tag + ".csv");
    if (fs::exists(p)) traces.emplace_back(tag, p);
  }
  const fs::path results = l.out / "results.csv";
  if (traces.empty() && !fs::exists(results))
    throw InputError("no trace or results files in " + l.out.string());

  std::string curves = "feature_set,epoch,grad_norm,mean_true_return,alpha\n";
  for (const auto& [tag, path] : traces) {
    std::istringstream in(read_file(path));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line))
      if (!line.empty()) curves += tag + "," + line + "\n";
  }
  write_file_atomic(l.out / "plot_learning_curves.csv", curves);

  std::string bars = "env,feature_set,wasserstein2d,mean_return\n";
  if (fs::exists(results)) {
    std::istringstream in(read_file(results));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::stringstream ls(line);
      std::string cell;
      for (int i = 0; i < 6 && std::getline(ls, cell, ','); ++i) f.push_back(cell);
      if (f.size() < 6) throw DataError(results.string() + ": malformed row: " + line);
      bars += f[0] + "," + f[1] + "," + f[5] + "," + f[2] + "\n";
    }
  }
  write_file_atomic(l.out / "plot_wasserstein.csv", bars);
  info("wrote plot_learning_curves.csv and plot_wasserstein.csv to " + l.out.string());
  return 0;
}

}  // namespace polyirl
