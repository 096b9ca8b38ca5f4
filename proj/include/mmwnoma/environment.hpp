#pragma once

// The joint power-allocation / hybrid-beamforming MDP.
//
// Observation: [Re h_1, Im h_1, ..., Re h_K, Im h_K, previous alpha], length 2NK+1.
// Action (every entry in [-1, 1]), length 2K^2 + 2NK + K, laid out per user:
//   [Re d_1, Im d_1, Re a_1, Im a_1, ..., Re d_K, Im d_K, Re a_K, Im a_K, x_1..x_K]
// where d_k is column k of the digital matrix (K entries), a_k column k of the
// analog matrix (N entries) and x_k maps to power p_k = P (x_k + 1) / 2.
//
// Reward is alpha * sum-rate. In soft mode alpha is the product of the per-user
// rate ratios min(R_k / r_k, 1) and the power ratio min(P / sum p, 1); in hard
// mode each factor is 1 when its constraint holds and 0 otherwise.

#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mmwnoma/channel_model.hpp"
#include "mmwnoma/common.hpp"
#include "mmwnoma/noma_phy.hpp"

namespace mmwnoma {

enum class AlphaMode { kSoft, kHard };

inline std::string to_string(AlphaMode mode) { return mode == AlphaMode::kSoft ? "soft" : "hard"; }

inline AlphaMode parse_alpha_mode(const std::string& text) {
  if (text == "soft") return AlphaMode::kSoft;
  if (text == "hard") return AlphaMode::kHard;
  throw Error("alpha_mode must be 'soft' or 'hard', got '" + text + "'");
}

struct EnvConfig {
  int n_users = 2;
  int n_antennas = 32;
  double power_budget = 1.0;  // watts
  double noise_var = 1e-3;    // watts
  std::vector<double> min_rates{3.0, 3.0};
  int steps_per_episode = 1000;
  AlphaMode alpha_mode = AlphaMode::kSoft;
  ChannelModelConfig channel{};

  void validate() const {
    require(n_users >= 1, "n_users must be positive");
    require(n_antennas >= 1, "n_antennas must be positive");
    require(n_users <= n_antennas, "more users than antennas");
    require(power_budget > 0.0, "power_budget must be positive");
    require(noise_var > 0.0, "noise_var must be positive");
    require(static_cast<int>(min_rates.size()) == n_users, "min_rates must have n_users entries");
    for (double r : min_rates) require(r > 0.0, "min_rates must be positive");
    require(steps_per_episode >= 1, "steps_per_episode must be positive");
    require(channel.paths_per_user >= 1, "paths_per_user must be positive");
  }

  int observation_size() const { return 2 * n_antennas * n_users + 1; }
  int action_size() const { return 2 * n_users * n_users + 2 * n_antennas * n_users + n_users; }
};

using Observation = Vector;
using ActionVector = Vector;

struct RewardBreakdown {
  Vector alpha_factors;  // K rate factors followed by the power factor
  double alpha = 1.0;
  double raw_sum_rate = 0.0;
  double reward = 0.0;
};

inline Observation encode_state(const ChannelRealization& channels, double prev_alpha) {
  require(prev_alpha >= 0.0 && prev_alpha <= 1.0, "previous alpha must lie in [0, 1]");
  const int k_users = channels.n_users();
  const int n = channels.n_antennas();
  Observation obs(2 * n * k_users + 1);
  for (int k = 0; k < k_users; ++k) {
    const CVector& h = channels.per_user_channels[k];
    obs.segment(2 * n * k, n) = h.real();
    obs.segment(2 * n * k + n, n) = h.imag();
  }
  obs[2 * n * k_users] = prev_alpha;
  return obs;
}

/// Inverse of the channel part of encode_state.
inline std::vector<CVector> decode_state_channels(const Observation& obs, int n_users, int n_antennas) {
  require(obs.size() == 2 * n_antennas * n_users + 1, "observation length mismatch");
  std::vector<CVector> channels(n_users);
  for (int k = 0; k < n_users; ++k) {
    channels[k].resize(n_antennas);
    channels[k].real() = obs.segment(2 * n_antennas * k, n_antennas);
    channels[k].imag() = obs.segment(2 * n_antennas * k + n_antennas, n_antennas);
  }
  return channels;
}

struct DecodedAction {
  HybridBeamformer beamformer;
  PowerAllocation power;
};

inline DecodedAction decode_action(const ActionVector& a, const EnvConfig& cfg) {
  const int k_users = cfg.n_users;
  const int n = cfg.n_antennas;
  if (a.size() != cfg.action_size()) {
    throw Error("action length " + std::to_string(a.size()) + " does not match expected " +
                std::to_string(cfg.action_size()));
  }
  CMatrix raw_digital(k_users, k_users);
  CMatrix raw_analog(n, k_users);
  Eigen::Index offset = 0;
  for (int k = 0; k < k_users; ++k) {
    raw_digital.col(k).real() = a.segment(offset, k_users);
    raw_digital.col(k).imag() = a.segment(offset + k_users, k_users);
    offset += 2 * k_users;
    raw_analog.col(k).real() = a.segment(offset, n);
    raw_analog.col(k).imag() = a.segment(offset + n, n);
    offset += 2 * n;
  }
  DecodedAction out{project_beamformer(raw_analog, raw_digital), {}};
  out.power.budget = cfg.power_budget;
  out.power.powers = cfg.power_budget * (a.segment(offset, k_users).array() + 1.0) / 2.0;
  return out;
}

/// Inverse of decode_action for a feasible beamformer and powers in [0, P].
inline ActionVector encode_action(const HybridBeamformer& bf, const Vector& powers, double budget) {
  const int k_users = bf.n_users();
  const int n = bf.n_antennas();
  ActionVector a(2 * k_users * k_users + 2 * n * k_users + k_users);
  Eigen::Index offset = 0;
  for (int k = 0; k < k_users; ++k) {
    a.segment(offset, k_users) = bf.digital.col(k).real();
    a.segment(offset + k_users, k_users) = bf.digital.col(k).imag();
    offset += 2 * k_users;
    a.segment(offset, n) = bf.analog.col(k).real();
    a.segment(offset + n, n) = bf.analog.col(k).imag();
    offset += 2 * n;
  }
  a.segment(offset, k_users) = 2.0 * powers.array() / budget - 1.0;
  return a;
}

inline double alpha_rate_factor(double achieved, double required) {
  require(required > 0.0, "required rate must be positive");
  return achieved < required ? achieved / required : 1.0;
}

inline double alpha_power_factor(double total_used, double budget) {
  require(budget > 0.0, "power budget must be positive");
  return budget < total_used ? budget / total_used : 1.0;
}

inline RewardBreakdown compute_reward(const RateReport& report, const PowerAllocation& pa,
                                      const EnvConfig& cfg) {
  const int k_users = static_cast<int>(report.rates.size());
  require(static_cast<int>(cfg.min_rates.size()) == k_users, "min_rates length mismatch");
  RewardBreakdown out;
  out.alpha_factors.resize(k_users + 1);
  const double total_power = pa.total();
  for (int k = 0; k < k_users; ++k) {
    const double soft = alpha_rate_factor(report.rates[k], cfg.min_rates[k]);
    out.alpha_factors[k] =
        cfg.alpha_mode == AlphaMode::kSoft ? soft : (report.rates[k] >= cfg.min_rates[k] ? 1.0 : 0.0);
  }
  const double soft_power = alpha_power_factor(total_power, cfg.power_budget);
  out.alpha_factors[k_users] =
      cfg.alpha_mode == AlphaMode::kSoft ? soft_power : (total_power <= cfg.power_budget ? 1.0 : 0.0);
  out.alpha = out.alpha_factors.prod();
  out.raw_sum_rate = report.sum_rate;
  out.reward = out.alpha * out.raw_sum_rate;
  return out;
}

struct StepResult {
  Observation observation;
  double reward = 0.0;
  RewardBreakdown breakdown;
  RateReport report;
  bool done = false;
};

/// Episodic wrapper around i.i.d. channel draws: every step is scored on the
/// current channel, then a fresh independent channel becomes the next state.
class Environment {
 public:
  Environment(EnvConfig cfg, Seed seed) : cfg_(std::move(cfg)), generator_(seed, cfg_.channel) {
    cfg_.validate();
  }

  Observation reset() {
    channels_ = generator_.draw(cfg_.n_users, cfg_.n_antennas);
    prev_alpha_ = 1.0;
    step_in_episode_ = 0;
    ++episode_;
    ready_ = true;
    return encode_state(*channels_, prev_alpha_);
  }

  StepResult step(const ActionVector& action) {
    if (!channels_) throw Error("step called before reset");
    if (!ready_) throw Error("episode finished; call reset");
    const DecodedAction decoded = decode_action(action, cfg_);
    StepResult out;
    out.report = rate_report(*channels_, decoded.beamformer, decoded.power, cfg_.noise_var);
    out.breakdown = compute_reward(out.report, decoded.power, cfg_);
    out.reward = out.breakdown.reward;
    ++step_in_episode_;
    out.done = step_in_episode_ >= cfg_.steps_per_episode;
    if (trace_) write_trace_row(out);

    prev_alpha_ = out.breakdown.alpha;
    channels_ = generator_.draw(cfg_.n_users, cfg_.n_antennas);
    out.observation = encode_state(*channels_, prev_alpha_);
    if (out.done) ready_ = false;
    return out;
  }

  /// Enables the per-step CSV trace. The stream must outlive the environment.
  void set_trace(std::ostream* os) {
    trace_ = os;
    if (trace_) {
      *trace_ << "episode,step,reward,alpha,sum_rate";
      for (int k = 0; k < cfg_.n_users; ++k) *trace_ << ",rate_" << k;
      *trace_ << '\n';
    }
  }

  const EnvConfig& config() const { return cfg_; }
  const ChannelRealization& current_channels() const {
    if (!channels_) throw Error("environment not reset");
    return *channels_;
  }
  int step_in_episode() const { return step_in_episode_; }

 private:
  void write_trace_row(const StepResult& r) {
    auto& os = *trace_;
    const auto old_precision = os.precision(17);
    os << episode_ << ',' << step_in_episode_ << ',' << r.reward << ',' << r.breakdown.alpha << ','
       << r.report.sum_rate;
    for (Eigen::Index k = 0; k < r.report.rates.size(); ++k) os << ',' << r.report.rates[k];
    os << '\n';
    os.precision(old_precision);
  }

  EnvConfig cfg_;
  ChannelGenerator generator_;
  std::optional<ChannelRealization> channels_;
  double prev_alpha_ = 1.0;
  int step_in_episode_ = 0;
  long episode_ = 0;
  bool ready_ = false;
  std::ostream* trace_ = nullptr;
};

}  // namespace mmwnoma
