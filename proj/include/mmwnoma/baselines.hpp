#pragma once

// Comparison methods.
//
// tdma_sum_rate: orthogonal time sharing. Each user owns a 1/K slot with the
// full power budget and a matched-filter beam, so there is no interference.
//
// strongest_path_noma: approximation of the NLOS-NOMA reference design, which
// only exploits each user's strongest multipath component. Analog column k is
// the steering vector of user k's largest-|gain| path (modulus 1/sqrt(N)),
// the digital matrix is identity, and powers come from a 0.01*P grid search
// over {sum p <= P} maximizing the soft-alpha reward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mmwnoma/channel_model.hpp"
#include "mmwnoma/common.hpp"
#include "mmwnoma/environment.hpp"
#include "mmwnoma/noma_phy.hpp"

namespace mmwnoma {

inline double tdma_sum_rate(const ChannelRealization& channels, double power_budget, double noise_var) {
  require(channels.n_users() >= 1, "channel set is empty");
  require(power_budget >= 0.0, "power budget must be non-negative");
  require(noise_var > 0.0, "noise variance must be positive");
  double total = 0.0;
  for (const auto& h : channels.per_user_channels) total += std::log2(1.0 + power_budget * h.squaredNorm() / noise_var);
  return total / channels.n_users();
}

struct StrongestPathResult {
  HybridBeamformer beamformer;
  PowerAllocation power;
  RateReport report;
  double soft_reward = 0.0;
};

/// Grid resolution of the power search, in units of the budget.
inline constexpr int kPowerGridSteps = 100;
/// Above this many simplex grid points the exhaustive search is replaced by
/// coordinate ascent on the same grid.
inline constexpr std::int64_t kExhaustiveGridLimit = 200'000;

inline HybridBeamformer strongest_path_beamformer(const ChannelRealization& channels) {
  const int k_users = channels.n_users();
  const int n = channels.n_antennas();
  require(k_users >= 1, "channel set is empty");
  CMatrix analog(n, k_users);
  for (int k = 0; k < k_users; ++k) {
    const auto& paths = channels.per_user_paths.at(k);
    require(!paths.empty(), "no multipath components");
    const auto strongest = std::max_element(paths.begin(), paths.end(), [](const auto& a, const auto& b) {
      return std::abs(a.gain) < std::abs(b.gain);
    });
    analog.col(k) = steering_vector({n, strongest->angle});
  }
  return project_beamformer(analog, CMatrix::Identity(k_users, k_users));
}

/// Number of points j in N^K with sum j <= steps.
inline std::int64_t simplex_grid_size(int k_users, int steps) {
  // C(steps + K, K), saturating.
  double c = 1.0;
  for (int i = 1; i <= k_users; ++i) c = c * (steps + i) / i;
  return c > 9e18 ? INT64_MAX : static_cast<std::int64_t>(std::llround(c));
}

namespace detail {

struct SoftObjective {
  Matrix gains;
  double noise_var;
  double budget;
  const std::vector<double>& min_rates;

  double operator()(const Vector& powers) const {
    const int k_users = static_cast<int>(powers.size());
    double alpha = alpha_power_factor(powers.sum(), budget);
    double sum_rate = 0.0;
    for (int k = 0; k < k_users; ++k) {
      const double r = std::log2(1.0 + sinr_from_gains(gains, powers, noise_var, k));
      sum_rate += r;
      alpha *= alpha_rate_factor(r, min_rates[k]);
    }
    return alpha * sum_rate;
  }
};

inline void exhaustive_search(const SoftObjective& f, int k_users, double budget, Vector& best, double& best_value) {
  std::vector<int> idx(k_users, 0);
  Vector powers = Vector::Zero(k_users);
  best_value = -1.0;
  // Odometer over the simplex in lexicographic order; strict improvement keeps the first maximizer.
  while (true) {
    for (int k = 0; k < k_users; ++k) powers[k] = budget * idx[k] / kPowerGridSteps;
    const double v = f(powers);
    if (v > best_value) {
      best_value = v;
      best = powers;
    }
    int used = 0;
    for (int v2 : idx) used += v2;
    int pos = k_users - 1;
    while (pos >= 0) {
      if (used < kPowerGridSteps) {
        ++idx[pos];
        break;
      }
      used -= idx[pos];
      idx[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

inline void coordinate_search(const SoftObjective& f, int k_users, double budget, Vector& best, double& best_value) {
  std::vector<int> idx(k_users, kPowerGridSteps / k_users);
  auto to_powers = [&](const std::vector<int>& j) {
    Vector p(k_users);
    for (int k = 0; k < k_users; ++k) p[k] = budget * j[k] / kPowerGridSteps;
    return p;
  };
  best = to_powers(idx);
  best_value = f(best);
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool improved = false;
    for (int k = 0; k < k_users; ++k) {
      int others = 0;
      for (int j = 0; j < k_users; ++j) others += j == k ? 0 : idx[j];
      auto trial = idx;
      for (int v = 0; v <= kPowerGridSteps - others; ++v) {
        trial[k] = v;
        const Vector p = to_powers(trial);
        const double value = f(p);
        if (value > best_value) {
          best_value = value;
          best = p;
          idx = trial;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

}  // namespace detail

inline StrongestPathResult strongest_path_noma(const ChannelRealization& channels, double power_budget,
                                               double noise_var, const std::vector<double>& min_rates) {
  const int k_users = channels.n_users();
  require(power_budget > 0.0, "power budget must be positive");
  require(noise_var > 0.0, "noise variance must be positive");
  require(static_cast<int>(min_rates.size()) == k_users, "min_rates length mismatch");

  StrongestPathResult out;
  out.beamformer = strongest_path_beamformer(channels);
  const detail::SoftObjective objective{detail::beam_gains(channels, out.beamformer), noise_var, power_budget,
                                        min_rates};
  Vector best;
  if (simplex_grid_size(k_users, kPowerGridSteps) <= kExhaustiveGridLimit) {
    detail::exhaustive_search(objective, k_users, power_budget, best, out.soft_reward);
  } else {
    detail::coordinate_search(objective, k_users, power_budget, best, out.soft_reward);
  }
  out.power = {best, power_budget};
  out.report = rate_report(channels, out.beamformer, out.power, noise_var);
  return out;
}

/// Sum-rate upper bound with every user served alone at full power.
inline double single_user_capacity_bound(const ChannelRealization& channels, double power_budget, double noise_var) {
  double total = 0.0;
  for (const auto& h : channels.per_user_channels) total += std::log2(1.0 + power_budget * h.squaredNorm() / noise_var);
  return total;
}

}  // namespace mmwnoma
