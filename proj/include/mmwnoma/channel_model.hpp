#pragma once

// Spatially sparse mmWave channels for an N-element half-wavelength ULA.
//
// Each user's channel is a short sum of plane waves,
//   h_k = sum_l gain_{k,l} * a(N, angle_{k,l}),
// with a(N, angle)[m] = exp(j*pi*m*cos(angle)). Users are kept sorted by
// channel norm (weakest first) so that index order equals SIC decoding order.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "mmwnoma/common.hpp"

namespace mmwnoma {

struct SteeringParams {
  int n_antennas = 1;
  double angle = 0.0;  // radians, in [0, pi]
};

struct PathComponent {
  Complex gain;
  double angle = 0.0;  // radians, in [0, pi]
};

struct ChannelRealization {
  std::vector<CVector> per_user_channels;
  std::vector<std::vector<PathComponent>> per_user_paths;

  int n_users() const { return static_cast<int>(per_user_channels.size()); }
  int n_antennas() const {
    return per_user_channels.empty() ? 0 : static_cast<int>(per_user_channels.front().size());
  }
};

inline CVector steering_vector(const SteeringParams& params) {
  require(params.n_antennas >= 1, "steering vector needs at least one antenna");
  require(std::isfinite(params.angle), "steering angle must be finite");
  const double phase_step = kPi * std::cos(params.angle);
  CVector a(params.n_antennas);
  for (int m = 0; m < params.n_antennas; ++m) a[m] = std::polar(1.0, phase_step * m);
  return a;
}

inline CVector synthesize_channel(std::span<const PathComponent> paths, int n_antennas) {
  if (paths.empty()) throw Error("no multipath components");
  CVector h = CVector::Zero(n_antennas);
  for (const auto& path : paths) h += path.gain * steering_vector({n_antennas, path.angle});
  return h;
}

/// Random model for draw_channel_set. Gains are CN(0, 1/paths_per_user) so that
/// E||h||^2 / N = 1; angles are uniform on [0, pi].
struct ChannelModelConfig {
  int paths_per_user = 3;
};

/// Single-owner seeded channel source. Successive draws continue the same
/// random stream; two generators built from the same seed emit identical
/// sequences.
class ChannelGenerator {
 public:
  explicit ChannelGenerator(Seed seed, ChannelModelConfig config = {})
      : engine_(seed), config_(config) {
    require(config_.paths_per_user >= 1, "paths_per_user must be positive");
  }

  ChannelRealization draw(int n_users, int n_antennas) {
    require(n_users >= 1, "need at least one user");
    require(n_antennas >= 1, "need at least one antenna");
    if (n_users > n_antennas) throw Error("more users than antennas");

    const int n_paths = config_.paths_per_user;
    std::normal_distribution<double> gaussian(0.0, std::sqrt(0.5 / n_paths));
    std::uniform_real_distribution<double> angle_dist(0.0, kPi);

    std::vector<std::vector<PathComponent>> paths(n_users);
    std::vector<CVector> channels(n_users);
    for (int k = 0; k < n_users; ++k) {
      paths[k].reserve(n_paths);
      for (int l = 0; l < n_paths; ++l) {
        const double re = gaussian(engine_);
        const double im = gaussian(engine_);
        paths[k].push_back({Complex(re, im), angle_dist(engine_)});
      }
      channels[k] = synthesize_channel(paths[k], n_antennas);
    }

    // Stable sort keeps draw order for equal norms.
    std::vector<int> order(n_users);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return channels[a].squaredNorm() < channels[b].squaredNorm();
    });

    ChannelRealization out;
    out.per_user_channels.reserve(n_users);
    out.per_user_paths.reserve(n_users);
    for (int idx : order) {
      out.per_user_channels.push_back(std::move(channels[idx]));
      out.per_user_paths.push_back(std::move(paths[idx]));
    }
    return out;
  }

  const ChannelModelConfig& config() const { return config_; }

 private:
  std::mt19937_64 engine_;
  ChannelModelConfig config_;
};

inline ChannelRealization draw_channel_set(int n_users, int n_antennas, Seed seed,
                                           ChannelModelConfig config = {}) {
  ChannelGenerator gen(seed, config);
  return gen.draw(n_users, n_antennas);
}

/// Audit dump: one line per path, `draw,user_index,path_index,gain_re,gain_im,angle`.
inline void write_channel_dump_header(std::ostream& os) {
  os << "draw,user_index,path_index,gain_re,gain_im,angle\n";
}

inline void write_channel_dump(std::ostream& os, const ChannelRealization& channels, long draw) {
  const auto old_precision = os.precision(17);
  for (int k = 0; k < channels.n_users(); ++k) {
    const auto& paths = channels.per_user_paths[k];
    for (std::size_t l = 0; l < paths.size(); ++l) {
      os << draw << ',' << k << ',' << l << ',' << paths[l].gain.real() << ','
         << paths[l].gain.imag() << ',' << paths[l].angle << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace mmwnoma
