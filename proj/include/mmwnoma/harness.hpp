#pragma once

// Experiment orchestration: flat key=value configuration, per-seed random
// streams, training/evaluation runs, parameter sweeps and CSV reporting.
//
// Config files hold one `key = value` per line; `#` starts a comment. Lists
// are comma separated. Unknown keys are rejected so that a typo cannot
// silently fall back to a default.

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "mmwnoma/agents.hpp"
#include "mmwnoma/baselines.hpp"
#include "mmwnoma/environment.hpp"

namespace mmwnoma {

enum class Algorithm { kSac, kDdpg };

inline std::string to_string(Algorithm a) { return a == Algorithm::kSac ? "sac" : "ddpg"; }

inline Algorithm parse_algorithm(const std::string& text) {
  if (text == "sac") return Algorithm::kSac;
  if (text == "ddpg") return Algorithm::kDdpg;
  throw Error("unknown algorithm '" + text + "' (expected sac or ddpg)");
}

enum class Profile { kPaper, kDesk };

inline Profile parse_profile(const std::string& text) {
  if (text == "paper") return Profile::kPaper;
  if (text == "desk") return Profile::kDesk;
  throw Error("unknown profile '" + text + "' (expected paper or desk)");
}

struct ExperimentConfig {
  int n_users = 2;
  int n_antennas = 32;
  double snr_db = 30.0;     // transmit budget P = noise_var * 10^(snr_db / 10)
  double noise_var = 1e-3;  // watts
  double min_rate = 3.0;    // applied to every user unless min_rates is set
  std::vector<double> min_rates;
  int steps_per_episode = 1000;
  AlphaMode alpha_mode = AlphaMode::kSoft;
  int paths_per_user = 3;

  Algorithm algorithm = Algorithm::kSac;
  AgentConfig agent{};
  int updates_per_step = 1;
  int episodes = 100;
  int moving_average = 25;

  long eval_samples = 250'000;
  std::vector<Seed> seeds{1, 2, 3};

  std::string sweep_param;  // snr_db | min_rate | n_antennas | n_users
  std::vector<double> sweep_values;
  std::string checkpoint_dir;  // sweep: load drl checkpoints from here instead of training

  double power_budget() const { return noise_var * std::pow(10.0, snr_db / 10.0); }

  EnvConfig env_config() const {
    EnvConfig env;
    env.n_users = n_users;
    env.n_antennas = n_antennas;
    env.power_budget = power_budget();
    env.noise_var = noise_var;
    env.min_rates = min_rates.empty() ? std::vector<double>(static_cast<std::size_t>(std::max(n_users, 0)), min_rate)
                                      : min_rates;
    env.steps_per_episode = steps_per_episode;
    env.alpha_mode = alpha_mode;
    env.channel.paths_per_user = paths_per_user;
    return env;
  }

  void validate() const {
    require(std::isfinite(snr_db), "snr_db must be finite");
    require(min_rate > 0.0, "min_rate must be positive");
    env_config().validate();
    agent.validate();
    require(updates_per_step >= 1, "updates_per_step must be positive");
    require(episodes >= 1, "episodes must be positive");
    require(moving_average >= 1, "moving_average must be positive");
    require(eval_samples >= 1, "eval_samples must be positive");
    require(!seeds.empty(), "seeds must not be empty");
    if (!sweep_param.empty()) {
      require(sweep_param == "snr_db" || sweep_param == "min_rate" || sweep_param == "n_antennas" ||
                  sweep_param == "n_users",
              "sweep_param must be one of snr_db, min_rate, n_antennas, n_users");
    }
  }
};

inline ExperimentConfig profile_config(Profile profile) {
  ExperimentConfig cfg;
  if (profile == Profile::kDesk) {
    cfg.n_antennas = 8;
    cfg.episodes = 50;
    cfg.steps_per_episode = 200;
    cfg.eval_samples = 5000;
  }
  return cfg;
}

/// Grid used when sweep_values is not given.
inline std::vector<double> default_sweep_values(const std::string& param) {
  std::vector<double> out;
  if (param == "snr_db") {
    for (int v = 0; v <= 30; v += 5) out.push_back(v);
  } else if (param == "min_rate") {
    for (int i = 0; i <= 6; ++i) out.push_back(1.0 + 0.5 * i);
  } else if (param == "n_antennas") {
    out = {16, 32, 64};
  } else if (param == "n_users") {
    for (int k = 2; k <= 8; ++k) out.push_back(k);
  } else {
    throw Error("no default grid for sweep_param '" + param + "'");
  }
  return out;
}

/// Copy of `cfg` with one swept parameter replaced.
inline ExperimentConfig with_sweep_value(ExperimentConfig cfg, const std::string& param, double value) {
  auto as_count = [&](const char* name) {
    require(value >= 1.0 && value == std::floor(value), std::string(name) + " sweep values must be positive integers");
    return static_cast<int>(value);
  };
  if (param == "snr_db") {
    cfg.snr_db = value;
  } else if (param == "min_rate") {
    cfg.min_rate = value;
    cfg.min_rates.clear();
  } else if (param == "n_antennas") {
    cfg.n_antennas = as_count("n_antennas");
  } else if (param == "n_users") {
    cfg.n_users = as_count("n_users");
    cfg.min_rates.clear();
  } else {
    throw Error("unknown sweep_param '" + param + "'");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Number formatting and parsing

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw Error("config key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

template <typename Int>
Int parse_integer(const std::string& key, const std::string& text) {
  Int v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size() || text.empty()) {
    throw Error("config key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw Error("config key '" + key + "': expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw Error("config key '" + key + "': empty list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

inline const std::map<std::string, Setter>& config_setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto integer = [](int ExperimentConfig::*field) -> Setter {
      return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_integer<int>(k, v);
      };
    };
    auto real = [](double ExperimentConfig::*field) -> Setter {
      return [field](ExperimentConfig& c, const std::string& k, const std::string& v) { c.*field = parse_real(k, v); };
    };
    auto agent_real = [](double AgentConfig::*field) -> Setter {
      return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.agent.*field = parse_real(k, v);
      };
    };
    auto agent_size = [](std::size_t AgentConfig::*field) -> Setter {
      return [field](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.agent.*field = parse_integer<std::size_t>(k, v);
      };
    };
    t["n_users"] = integer(&ExperimentConfig::n_users);
    t["n_antennas"] = integer(&ExperimentConfig::n_antennas);
    t["snr_db"] = real(&ExperimentConfig::snr_db);
    t["noise_var"] = real(&ExperimentConfig::noise_var);
    t["min_rate"] = real(&ExperimentConfig::min_rate);
    t["min_rates"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.min_rates = parse_real_list(k, v);
    };
    t["steps_per_episode"] = integer(&ExperimentConfig::steps_per_episode);
    t["alpha_mode"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.alpha_mode = parse_alpha_mode(v);
    };
    t["paths_per_user"] = integer(&ExperimentConfig::paths_per_user);
    t["algorithm"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.algorithm = parse_algorithm(v);
    };
    t["hidden_width"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.agent.hidden_width = parse_integer<int>(k, v);
    };
    t["discount"] = agent_real(&AgentConfig::discount);
    t["actor_learn_rate"] = agent_real(&AgentConfig::actor_learn_rate);
    t["critic_learn_rate"] = agent_real(&AgentConfig::critic_learn_rate);
    t["target_smoothing"] = agent_real(&AgentConfig::target_smoothing);
    t["entropy_temp"] = agent_real(&AgentConfig::entropy_temp);
    t["buffer_capacity"] = agent_size(&AgentConfig::buffer_capacity);
    t["batch_size"] = agent_size(&AgentConfig::batch_size);
    t["warmup"] = agent_size(&AgentConfig::warmup);
    t["twin_critic"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.agent.twin_critic = parse_bool(k, v);
    };
    t["explore_noise"] = agent_real(&AgentConfig::explore_noise);
    t["updates_per_step"] = integer(&ExperimentConfig::updates_per_step);
    t["episodes"] = integer(&ExperimentConfig::episodes);
    t["moving_average"] = integer(&ExperimentConfig::moving_average);
    t["eval_samples"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.eval_samples = parse_integer<long>(k, v);
    };
    t["seeds"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.seeds.clear();
      for (const auto& item : split(v, ',')) c.seeds.push_back(parse_integer<Seed>(k, item));
      if (c.seeds.empty()) throw Error("config key 'seeds': empty list");
    };
    t["sweep_param"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.sweep_param = v; };
    t["sweep_values"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.sweep_values = parse_real_list(k, v);
    };
    t["checkpoint_dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.checkpoint_dir = v;
    };
    return t;
  }();
  return table;
}

}  // namespace detail

inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, setter] : detail::config_setters()) keys.push_back(key);
  return keys;
}

inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = detail::config_setters();
  const auto it = table.find(key);
  if (it == table.end()) throw Error("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

/// Applies `key = value` lines from `is` on top of `cfg`. The result is validated.
inline void apply_config_text(ExperimentConfig& cfg, std::istream& is) {
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("config line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_config_entry(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  cfg.validate();
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path, Profile profile) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config file '" + path.string() + "'");
  ExperimentConfig cfg = profile_config(profile);
  apply_config_text(cfg, is);
  return cfg;
}

/// Canonical text form; parsing it back reproduces the configuration.
inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
  auto list = [](const auto& values) {
    std::string out;
    for (const auto& v : values) {
      if (!out.empty()) out += ',';
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
        out += format_double(v);
      } else {
        out += std::to_string(v);
      }
    }
    return out;
  };
  const AgentConfig& a = cfg.agent;
  os << "n_users = " << cfg.n_users << '\n'
     << "n_antennas = " << cfg.n_antennas << '\n'
     << "snr_db = " << format_double(cfg.snr_db) << '\n'
     << "noise_var = " << format_double(cfg.noise_var) << '\n'
     << "min_rate = " << format_double(cfg.min_rate) << '\n';
  if (!cfg.min_rates.empty()) os << "min_rates = " << list(cfg.min_rates) << '\n';
  os << "steps_per_episode = " << cfg.steps_per_episode << '\n'
     << "alpha_mode = " << to_string(cfg.alpha_mode) << '\n'
     << "paths_per_user = " << cfg.paths_per_user << '\n'
     << "algorithm = " << to_string(cfg.algorithm) << '\n'
     << "hidden_width = " << a.hidden_width << '\n'
     << "discount = " << format_double(a.discount) << '\n'
     << "actor_learn_rate = " << format_double(a.actor_learn_rate) << '\n'
     << "critic_learn_rate = " << format_double(a.critic_learn_rate) << '\n'
     << "target_smoothing = " << format_double(a.target_smoothing) << '\n'
     << "entropy_temp = " << format_double(a.entropy_temp) << '\n'
     << "buffer_capacity = " << a.buffer_capacity << '\n'
     << "batch_size = " << a.batch_size << '\n'
     << "warmup = " << a.warmup << '\n'
     << "twin_critic = " << (a.twin_critic ? "true" : "false") << '\n'
     << "explore_noise = " << format_double(a.explore_noise) << '\n'
     << "updates_per_step = " << cfg.updates_per_step << '\n'
     << "episodes = " << cfg.episodes << '\n'
     << "moving_average = " << cfg.moving_average << '\n'
     << "eval_samples = " << cfg.eval_samples << '\n'
     << "seeds = " << list(cfg.seeds) << '\n';
  if (!cfg.sweep_param.empty()) os << "sweep_param = " << cfg.sweep_param << '\n';
  if (!cfg.sweep_values.empty()) os << "sweep_values = " << list(cfg.sweep_values) << '\n';
  if (!cfg.checkpoint_dir.empty()) os << "checkpoint_dir = " << cfg.checkpoint_dir << '\n';
}

// ---------------------------------------------------------------------------
// Seeding

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t { kTrainChannels = 1, kAgentInit = 2, kTrainLoop = 3, kEvalChannels = 4 };

/// Independent generator seed for one purpose within a run.
inline Seed derive_seed(Seed run_seed, Stream stream) {
  return splitmix64(splitmix64(run_seed) ^ static_cast<std::uint64_t>(stream));
}

// ---------------------------------------------------------------------------
// CSV

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw Error("csv has no column '" + name + "'");
  }
  double number(std::size_t row, const std::string& name) const {
    return detail::parse_real(name, rows.at(row).at(column(name)));
  }
  const std::string& text(std::size_t row, const std::string& name) const { return rows.at(row).at(column(name)); }
};

inline CsvTable read_csv(std::istream& is) {
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw Error("csv is empty");
  table.header = detail::split(line, ',');
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = detail::split(line, ',');
    if (fields.size() != table.header.size()) {
      throw Error("csv row " + std::to_string(table.rows.size() + 1) + " has " + std::to_string(fields.size()) +
                  " fields, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  return read_csv(is);
}

namespace detail {

inline void write_row(std::ostream& os, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    if (!first) os << ',';
    os << f;
    first = false;
  }
  os << '\n';
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  return os;
}

}  // namespace detail

inline std::string curve_header(int moving_average) {
  return "episode,mean_reward,moving_avg_" + std::to_string(moving_average);
}

inline void write_curve(std::ostream& os, const LearningCurve& curve, int moving_average) {
  os << curve_header(moving_average) << '\n';
  for (std::size_t e = 0; e < curve.episodes(); ++e) {
    detail::write_row(os, {std::to_string(e + 1), format_double(curve.mean_reward[e]), format_double(curve.moving_avg[e])});
  }
}

// ---------------------------------------------------------------------------
// Statistics

struct SampleStats {
  double mean = 0.0;
  double std_err = 0.0;
  long n = 0;
};

class RunningStats {
 public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  SampleStats result() const {
    SampleStats s{mean_, 0.0, n_};
    if (n_ > 1) s.std_err = std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_));
    return s;
  }

 private:
  long n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// ---------------------------------------------------------------------------
// Agents

/// Either algorithm behind one interface for the harness.
class AnyAgent {
 public:
  AnyAgent(Algorithm algorithm, const EnvConfig& env, const AgentConfig& cfg, Seed seed) : algorithm_(algorithm) {
    if (algorithm == Algorithm::kSac) {
      sac_.emplace(env.observation_size(), env.action_size(), cfg, seed);
    } else {
      ddpg_.emplace(env.observation_size(), env.action_size(), cfg, seed);
    }
  }

  Algorithm algorithm() const { return algorithm_; }

  LearningCurve train(Environment& env, const TrainOptions& opts, Seed seed) {
    return sac_ ? mmwnoma::train(*sac_, env, opts, seed) : mmwnoma::train(*ddpg_, env, opts, seed);
  }
  ActionVector policy_action(const Observation& obs) { return sac_ ? sac_->act(obs, false) : ddpg_->act(obs, false); }
  void save(std::ostream& os) const { sac_ ? sac_->save(os) : ddpg_->save(os); }
  void load(std::istream& is) { sac_ ? sac_->load(is) : ddpg_->load(is); }

 private:
  Algorithm algorithm_;
  std::optional<SacAgent> sac_;
  std::optional<DdpgAgent> ddpg_;
};

inline AnyAgent make_agent(const ExperimentConfig& cfg, Seed seed) {
  return AnyAgent(cfg.algorithm, cfg.env_config(), cfg.agent, derive_seed(seed, Stream::kAgentInit));
}

inline void save_checkpoint(const AnyAgent& agent, const std::filesystem::path& path) {
  auto os = detail::open_output(path);
  agent.save(os);
  if (!os) throw Error("failed writing checkpoint '" + path.string() + "'");
}

inline AnyAgent load_checkpoint(const ExperimentConfig& cfg, Seed seed, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("missing checkpoint '" + path.string() + "'");
  AnyAgent agent = make_agent(cfg, seed);
  agent.load(is);
  return agent;
}

// ---------------------------------------------------------------------------
// Training

inline std::filesystem::path curve_path(const std::filesystem::path& dir, Seed seed) {
  return dir / ("curve_seed" + std::to_string(seed) + ".csv");
}

inline std::filesystem::path checkpoint_path(const std::filesystem::path& dir, Seed seed) {
  return dir / ("checkpoint_seed" + std::to_string(seed) + ".txt");
}

struct TrainingRun {
  Seed seed = 0;
  LearningCurve curve;
  double wall_seconds = 0.0;
};

/// Trains one agent from scratch; `log` receives per-episode progress.
inline TrainingRun train_agent(const ExperimentConfig& cfg, Seed seed, AnyAgent& agent, std::ostream* log = nullptr) {
  cfg.validate();
  Environment env(cfg.env_config(), derive_seed(seed, Stream::kTrainChannels));
  TrainOptions opts;
  opts.episodes = cfg.episodes;
  opts.moving_average = static_cast<std::size_t>(cfg.moving_average);
  opts.updates_per_step = cfg.updates_per_step;
  if (log) {
    opts.on_episode = [&](int e, double mean, double avg) {
      *log << "seed " << seed << " episode " << e + 1 << "/" << cfg.episodes << " mean_reward " << mean
           << " moving_avg " << avg << '\n'
           << std::flush;
    };
  }
  const auto start = std::chrono::steady_clock::now();
  TrainingRun run{seed, agent.train(env, opts, derive_seed(seed, Stream::kTrainLoop)), 0.0};
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

/// Trains every configured seed, writing curve_seed<s>.csv and checkpoint_seed<s>.txt under `out_dir`.
inline std::vector<TrainingRun> run_training(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                             std::ostream* log = nullptr) {
  cfg.validate();
  std::vector<TrainingRun> runs;
  for (Seed seed : cfg.seeds) {
    AnyAgent agent = make_agent(cfg, seed);
    TrainingRun run = train_agent(cfg, seed, agent, log);
    auto curve_os = detail::open_output(curve_path(out_dir, seed));
    write_curve(curve_os, run.curve, cfg.moving_average);
    save_checkpoint(agent, checkpoint_path(out_dir, seed));
    if (log) {
      *log << "seed " << seed << " done in " << run.wall_seconds << " s, final moving_avg "
           << run.curve.moving_avg.back() << '\n';
    }
    runs.push_back(std::move(run));
  }
  return runs;
}

// ---------------------------------------------------------------------------
// Evaluation

struct PolicyEvaluation {
  SampleStats sum_rate;
  SampleStats reward;
  double violation_fraction = 0.0;  // share of samples with any alpha factor below 1
};

/// Deterministic-policy rollout over `eval_samples` i.i.d. channels from the seed's evaluation stream.
inline PolicyEvaluation evaluate_policy(AnyAgent& agent, const ExperimentConfig& cfg, Seed seed) {
  EnvConfig env_cfg = cfg.env_config();
  env_cfg.steps_per_episode = static_cast<int>(std::min<long>(cfg.eval_samples, INT32_MAX));
  Environment env(env_cfg, derive_seed(seed, Stream::kEvalChannels));
  RunningStats rate, reward;
  long violations = 0;
  Observation obs = env.reset();
  for (long i = 0; i < cfg.eval_samples; ++i) {
    const StepResult r = env.step(agent.policy_action(obs));
    rate.add(r.report.sum_rate);
    reward.add(r.reward);
    if (r.breakdown.alpha_factors.minCoeff() < 1.0) ++violations;
    obs = r.observation;
  }
  PolicyEvaluation out{rate.result(), reward.result(), 0.0};
  out.violation_fraction = static_cast<double>(violations) / static_cast<double>(cfg.eval_samples);
  return out;
}

struct BaselineEvaluation {
  SampleStats tdma;
  SampleStats strongest_path;
};

/// Both comparison methods on the same channel sequence evaluate_policy sees.
inline BaselineEvaluation evaluate_baselines(const ExperimentConfig& cfg, Seed seed) {
  const EnvConfig env = cfg.env_config();
  ChannelGenerator gen(derive_seed(seed, Stream::kEvalChannels), env.channel);
  RunningStats tdma, strongest;
  for (long i = 0; i < cfg.eval_samples; ++i) {
    const auto ch = gen.draw(env.n_users, env.n_antennas);
    tdma.add(tdma_sum_rate(ch, env.power_budget, env.noise_var));
    strongest.add(strongest_path_noma(ch, env.power_budget, env.noise_var, env.min_rates).report.sum_rate);
  }
  return {tdma.result(), strongest.result()};
}

inline std::filesystem::path eval_path(const std::filesystem::path& dir, Seed seed) {
  return dir / ("eval_seed" + std::to_string(seed) + ".csv");
}

inline const char* kEvalHeader =
    "seed,n_samples,mean_sum_rate,std_err_sum_rate,mean_reward,std_err_reward,violation_fraction";

/// Loads checkpoint_seed<s>.txt from `checkpoint_dir` for every seed and writes eval_seed<s>.csv.
inline std::vector<PolicyEvaluation> run_evaluation(const ExperimentConfig& cfg,
                                                    const std::filesystem::path& checkpoint_dir,
                                                    const std::filesystem::path& out_dir) {
  cfg.validate();
  std::vector<PolicyEvaluation> out;
  for (Seed seed : cfg.seeds) {
    AnyAgent agent = load_checkpoint(cfg, seed, checkpoint_path(checkpoint_dir, seed));
    const PolicyEvaluation ev = evaluate_policy(agent, cfg, seed);
    auto os = detail::open_output(eval_path(out_dir, seed));
    os << kEvalHeader << '\n';
    detail::write_row(os, {std::to_string(seed), std::to_string(ev.sum_rate.n), format_double(ev.sum_rate.mean),
                           format_double(ev.sum_rate.std_err), format_double(ev.reward.mean),
                           format_double(ev.reward.std_err), format_double(ev.violation_fraction)});
    out.push_back(ev);
  }
  return out;
}

inline const char* kComparisonHeader = "method,seed,mean_sum_rate,std_err,n_samples";

/// Writes baseline.csv with one tdma and one strongest_path_noma row per seed.
inline void run_baselines(const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  auto os = detail::open_output(out_dir / "baseline.csv");
  os << kComparisonHeader << '\n';
  for (Seed seed : cfg.seeds) {
    const BaselineEvaluation b = evaluate_baselines(cfg, seed);
    for (const auto& [name, s] : {std::pair{"tdma", b.tdma}, std::pair{"strongest_path_noma", b.strongest_path}}) {
      detail::write_row(os, {name, std::to_string(seed), format_double(s.mean), format_double(s.std_err),
                             std::to_string(s.n)});
    }
  }
}

// ---------------------------------------------------------------------------
// Sweeps

inline const char* kSweepHeader = "sweep_param,value,method,seed,mean_sum_rate,std_err,n_samples";

inline std::filesystem::path sweep_checkpoint_path(const std::filesystem::path& dir, const std::string& param,
                                                   double value, Seed seed) {
  return dir / ("checkpoint_" + param + "_" + format_double(value) + "_seed" + std::to_string(seed) + ".txt");
}

/// For every sweep value and seed: obtains a policy (trained in place, or
/// loaded from checkpoint_dir), then evaluates drl, tdma and
/// strongest_path_noma on a shared set of evaluation channels. Writes
/// sweep_<param>.csv and, when training in place, the per-point checkpoints.
inline std::filesystem::path run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                                       std::ostream* log = nullptr) {
  cfg.validate();
  require(!cfg.sweep_param.empty(), "sweep_param must be set for a sweep");
  const std::vector<double> values =
      cfg.sweep_values.empty() ? default_sweep_values(cfg.sweep_param) : cfg.sweep_values;
  const auto path = out_dir / ("sweep_" + cfg.sweep_param + ".csv");

  // Fail on missing checkpoints before spending time on any point.
  if (!cfg.checkpoint_dir.empty()) {
    for (double v : values)
      for (Seed seed : cfg.seeds) {
        const auto ckpt = sweep_checkpoint_path(cfg.checkpoint_dir, cfg.sweep_param, v, seed);
        if (!std::filesystem::exists(ckpt)) throw Error("missing checkpoint '" + ckpt.string() + "'");
      }
  }

  std::ostringstream table;
  table << kSweepHeader << '\n';
  for (double v : values) {
    const ExperimentConfig point = with_sweep_value(cfg, cfg.sweep_param, v);
    point.validate();
    for (Seed seed : cfg.seeds) {
      std::optional<AnyAgent> agent;
      if (cfg.checkpoint_dir.empty()) {
        agent.emplace(make_agent(point, seed));
        train_agent(point, seed, *agent);
        save_checkpoint(*agent, sweep_checkpoint_path(out_dir, cfg.sweep_param, v, seed));
      } else {
        agent.emplace(load_checkpoint(point, seed, sweep_checkpoint_path(cfg.checkpoint_dir, cfg.sweep_param, v, seed)));
      }
      const PolicyEvaluation drl = evaluate_policy(*agent, point, seed);
      const BaselineEvaluation base = evaluate_baselines(point, seed);
      for (const auto& [name, s] : {std::pair{"drl", drl.sum_rate}, std::pair{"tdma", base.tdma},
                                    std::pair{"strongest_path_noma", base.strongest_path}}) {
        detail::write_row(table, {cfg.sweep_param, format_double(v), name, std::to_string(seed),
                                  format_double(s.mean), format_double(s.std_err), std::to_string(s.n)});
      }
      if (log) {
        *log << cfg.sweep_param << " = " << v << " seed " << seed << ": drl " << drl.sum_rate.mean << " tdma "
             << base.tdma.mean << " strongest_path_noma " << base.strongest_path.mean << '\n'
             << std::flush;
      }
    }
  }
  auto os = detail::open_output(path);
  os << table.str();
  return path;
}

}  // namespace mmwnoma
