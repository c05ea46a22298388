#include "polyirl/config.hpp"

#include <map>
#include <set>

#include "polyirl/error.hpp"

namespace polyirl {

namespace {

// Object view that records which keys were read, so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  const Json& at(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw ConfigError("missing required key " + where(key));
    seen_.insert(key);
    return *it;
  }
  Section sub(const std::string& key) { return Section(at(key), where(key)); }

  double number(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    return v.get<double>();
  }
  std::int64_t integer(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    return v.get<std::int64_t>();
  }
  std::uint64_t unsigned_integer(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  std::string string(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key) {
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return v.get<bool>();
  }

  // Every entry as a number; used for open-ended maps.
  std::map<std::string, double> numbers() {
    std::map<std::string, double> out;
    for (auto it = j_.begin(); it != j_.end(); ++it) out[it.key()] = number(it.key());
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError("unknown key " + where(it.key()));
  }

  std::string where(const std::string& key) const { return path_.empty() ? "'" + key + "'" : "'" + path_ + "." + key + "'"; }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class F>
auto translate(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

OptBudget parse_budget(Section s) {
  OptBudget b;
  b.method = translate(s.where("method"), [&] { return parse_opt_method(s.string("method")); });
  b.iterations = static_cast<int>(s.integer("iterations"));
  b.population = static_cast<int>(s.integer("population"));
  b.elite_frac = s.number("elite_frac");
  b.rollouts_per_eval = static_cast<int>(s.integer("rollouts_per_eval"));
  b.gamma = s.number("gamma");
  b.init_std = s.number("init_std");
  b.min_std = s.number("min_std");
  b.learning_rate = s.number("learning_rate");
  s.finish();
  translate(s.where("optimizer"), [&] {
    b.validate();
    return 0;
  });
  return b;
}

PolicyInit parse_policy_init(Section& s) {
  PolicyInit p;
  p.feature_mode = translate(s.where("feature_mode"), [&] { return parse_feature_mode(s.string("feature_mode")); });
  p.hidden = static_cast<int>(s.integer("hidden"));
  if (p.hidden < 0) throw ConfigError(s.where("hidden") + " must be >= 0");
  p.log_std = s.number("log_std");
  return p;
}

EnvSpec parse_env(Section s) {
  const EnvId id = translate(s.where("id"), [&] { return parse_env_id(s.string("id")); });
  EnvSpec spec = make_env_spec(id);
  spec.max_episode_steps = static_cast<int>(s.integer("max_episode_steps"));
  Section dyn = s.sub("dynamics");
  spec.dynamics.clear();
  spec.dynamics = dyn.numbers();
  s.finish();
  if (auto* c = std::get_if<ContinuousActions>(&spec.actions)) {
    const char* bound = id == EnvId::Pendulum ? "max_torque" : "max_force";
    if (auto it = spec.dynamics.find(bound); it != spec.dynamics.end()) *c = ContinuousActions{-it->second, it->second};
  }
  validate(spec);
  return spec;
}

}  // namespace

void RunConfig::set_seed(std::uint64_t master) {
  seed = master;
  expert.optimizer.seed = derive_seed(master, "expert-optimizer");
  irl.seed = derive_seed(master, "irl");
}

RunConfig parse_run_config(const Json& doc, const std::filesystem::path& base_dir) {
  Section root(doc, "");
  RunConfig cfg;
  cfg.source = doc;
  cfg.base_dir = base_dir;
  cfg.env = parse_env(root.sub("env"));
  cfg.output_dir = root.string("output_dir");

  {
    Section s = root.sub("expert");
    cfg.expert.n_trajectories = static_cast<int>(s.integer("n_trajectories"));
    if (cfg.expert.n_trajectories < 2) throw ConfigError(s.where("n_trajectories") + " must be >= 2");
    cfg.expert.gate = s.number("gate");
    cfg.expert.gate_episodes = static_cast<int>(s.integer("gate_episodes"));
    if (cfg.expert.gate_episodes < 1) throw ConfigError(s.where("gate_episodes") + " must be >= 1");
    Section p = s.sub("policy");
    cfg.expert.policy = parse_policy_init(p);
    p.finish();
    cfg.expert.optimizer = parse_budget(s.sub("optimizer"));
    s.finish();
  }
  {
    Section s = root.sub("features");
    const auto k = s.integer("k_selected");
    const auto p = make_candidate_extractor(cfg.env.state_dim).candidate_count();
    if (k < 1 || static_cast<std::size_t>(k) > p)
      throw ConfigError(s.where("k_selected") + " must lie in [1, " + std::to_string(p) + "]");
    cfg.features.k_selected = static_cast<std::size_t>(k);
    try {
      cfg.features.standardize = parse_standardize_mode(s.string("standardize"));
    } catch (const InputError& e) {
      throw ConfigError(s.where("standardize") + ": " + e.what());
    }
    s.finish();
  }
  {
    Section s = root.sub("kde");
    const std::string rule = s.string("bandwidth_rule");
    if (rule == "scott") {
      cfg.kde = ScottRule{};
    } else if (rule == "silverman") {
      cfg.kde = SilvermanRule{};
    } else if (rule == "fixed") {
      const Json& m = s.at("covariance");
      const int d = cfg.env.state_dim;
      FixedBandwidth fixed;
      if (!m.is_array() || static_cast<int>(m.size()) != d)
        throw ConfigError(s.where("covariance") + " must be a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
      for (const auto& row : m) {
        if (!row.is_array() || static_cast<int>(row.size()) != d)
          throw ConfigError(s.where("covariance") + " must be a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
        for (const auto& v : row) {
          if (!v.is_number()) throw ConfigError(s.where("covariance") + " entries must be numbers");
          fixed.cov.push_back(v.get<double>());
        }
      }
      cfg.kde = std::move(fixed);
    } else {
      throw ConfigError(s.where("bandwidth_rule") + " must be one of scott, silverman, fixed");
    }
    s.finish();
  }
  {
    Section s = root.sub("irl");
    cfg.irl.epochs = static_cast<int>(s.integer("epochs"));
    cfg.irl.learning_rate = s.number("learning_rate");
    cfg.irl.lr_decay = s.number("lr_decay");
    cfg.irl.n_rollouts = static_cast<int>(s.integer("n_rollouts"));
    s.finish();
  }
  {
    Section s = root.sub("policy");
    cfg.learner = parse_policy_init(s);
    cfg.irl.rl_budget = parse_budget(s.sub("optimizer"));
    s.finish();
  }
  cfg.irl.standardize = cfg.features.standardize;
  {
    Section s = root.sub("eval");
    cfg.eval.n_episodes = static_cast<int>(s.integer("n_episodes"));
    if (cfg.eval.n_episodes < 1) throw ConfigError(s.where("n_episodes") + " must be >= 1");
    const Json& proj = s.at("projection");
    if (!proj.is_array() || proj.size() != 2 || !proj[0].is_string() || !proj[1].is_string())
      throw ConfigError(s.where("projection") + " must be a pair of coordinate labels");
    cfg.eval.projection = translate(s.where("projection"), [&] {
      return Projection{parse_coord(proj[0].get<std::string>()), parse_coord(proj[1].get<std::string>())};
    });
    for (const Coord* c : {&cfg.eval.projection.x, &cfg.eval.projection.y})
      if (c->index >= cfg.env.state_dim || c->cos_index >= cfg.env.state_dim)
        throw ConfigError(s.where("projection") + ": coordinate " + c->label() + " exceeds the state dimension");
    const auto cap = s.integer("sample_cap");
    if (cap < 1) throw ConfigError(s.where("sample_cap") + " must be >= 1");
    cfg.eval.sample_cap = static_cast<std::size_t>(cap);
    cfg.eval.hand_picked = s.string("hand_picked");
    s.finish();
  }
  cfg.set_seed(root.unsigned_integer("seed"));
  cfg.irl.validate();
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  try {
    return parse_run_config(doc, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace polyirl
