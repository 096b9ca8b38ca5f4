#pragma once

// Hybrid beamformer feasibility projection and SIC-ordered SINR / rate.
//
// User indices are 0-based here: user k is decoded after cancelling users
// 0..k-1 and sees users k+1..K-1 as interference. The strongest user (last
// index) is interference-free.

#include <cmath>
#include <vector>

#include "mmwnoma/channel_model.hpp"
#include "mmwnoma/common.hpp"

namespace mmwnoma {

struct HybridBeamformer {
  CMatrix analog;    // N x K, every entry of modulus 1/sqrt(N)
  CMatrix digital;   // K x K
  CMatrix composed;  // N x K, analog * digital, unit-norm columns

  int n_antennas() const { return static_cast<int>(analog.rows()); }
  int n_users() const { return static_cast<int>(analog.cols()); }
};

struct PowerAllocation {
  Vector powers;  // watts, one per user
  double budget = 1.0;

  double total() const { return powers.sum(); }
};

struct RateReport {
  Vector sinr;
  Vector rates;  // bits/s/Hz
  double sum_rate = 0.0;
};

/// Makes raw agent outputs feasible: analog entries keep their phase and get
/// modulus 1/sqrt(N) (a zero entry gets phase 0), then each digital column is
/// rescaled so the composed column has unit norm. A digital column whose
/// composed column vanishes is replaced by the unit vector e_k first.
inline HybridBeamformer project_beamformer(const CMatrix& raw_analog, const CMatrix& raw_digital) {
  const Eigen::Index n = raw_analog.rows();
  const Eigen::Index k_users = raw_analog.cols();
  require(n >= 1 && k_users >= 1, "beamformer must be non-empty");
  require(raw_digital.rows() == k_users && raw_digital.cols() == k_users,
          "digital beamformer must be K x K");

  HybridBeamformer bf;
  const double modulus = 1.0 / std::sqrt(static_cast<double>(n));
  bf.analog.resize(n, k_users);
  for (Eigen::Index j = 0; j < k_users; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const Complex z = raw_analog(i, j);
      bf.analog(i, j) = (z == Complex(0.0, 0.0)) ? Complex(modulus, 0.0)
                                                 : std::polar(modulus, std::arg(z));
    }
  }

  bf.digital = raw_digital;
  bf.composed.resize(n, k_users);
  for (Eigen::Index j = 0; j < k_users; ++j) {
    CVector w = bf.analog * bf.digital.col(j);
    double norm = w.norm();
    if (!(norm > 1e-12) || !std::isfinite(norm)) {
      bf.digital.col(j).setZero();
      bf.digital(j, j) = 1.0;
      w = bf.analog.col(j);
      norm = w.norm();
    }
    bf.digital.col(j) /= norm;
    bf.composed.col(j) = w / norm;
  }
  return bf;
}

namespace detail {

inline void check_link_inputs(const ChannelRealization& channels, const HybridBeamformer& bf,
                              const PowerAllocation& pa, double noise_var) {
  const int k_users = channels.n_users();
  require(k_users >= 1, "channel set is empty");
  require(bf.n_users() == k_users && bf.n_antennas() == channels.n_antennas(),
          "beamformer shape does not match channels");
  require(pa.powers.size() == k_users, "power vector length does not match user count");
  require(noise_var > 0.0, "noise variance must be positive");
}

// gains(k, j) = |h_k^H w_j|^2
inline Matrix beam_gains(const ChannelRealization& channels, const HybridBeamformer& bf) {
  const int k_users = channels.n_users();
  Matrix gains(k_users, k_users);
  for (int k = 0; k < k_users; ++k) {
    const CVector& h = channels.per_user_channels[k];
    for (int j = 0; j < k_users; ++j) gains(k, j) = std::norm(h.dot(bf.composed.col(j)));
  }
  return gains;
}

inline double sinr_from_gains(const Matrix& gains, const Vector& powers, double noise_var, int user) {
  const int k_users = static_cast<int>(powers.size());
  double interference = 0.0;
  for (int j = user + 1; j < k_users; ++j) interference += gains(user, j) * powers[j];
  return gains(user, user) * powers[user] / (interference + noise_var);
}

}  // namespace detail

/// SINR of `user` (0-based) under SIC ordering.
inline double sinr(const ChannelRealization& channels, const HybridBeamformer& bf,
                   const PowerAllocation& pa, double noise_var, int user) {
  detail::check_link_inputs(channels, bf, pa, noise_var);
  if (user < 0 || user >= channels.n_users()) throw Error("user index out of range");
  const Matrix gains = detail::beam_gains(channels, bf);
  return detail::sinr_from_gains(gains, pa.powers, noise_var, user);
}

inline RateReport rate_report(const ChannelRealization& channels, const HybridBeamformer& bf,
                              const PowerAllocation& pa, double noise_var) {
  detail::check_link_inputs(channels, bf, pa, noise_var);
  const int k_users = channels.n_users();
  const Matrix gains = detail::beam_gains(channels, bf);
  RateReport report;
  report.sinr.resize(k_users);
  report.rates.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    report.sinr[k] = detail::sinr_from_gains(gains, pa.powers, noise_var, k);
    report.rates[k] = std::log2(1.0 + report.sinr[k]);
  }
  report.sum_rate = report.rates.sum();
  return report;
}

}  // namespace mmwnoma
