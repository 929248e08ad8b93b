#pragma once

#include <cmath>

#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/config.hpp"

namespace bdris {

// Fixed unit-norm feed illuminating the transmissive surface.  The effective
// scalar link through the surface is  h^T * Phi * w.
inline Vec uniform_feed(int m) {
  if (m < 1) throw std::invalid_argument("uniform_feed: M must be >= 1");
  return Vec::Constant(m, Complex(1.0 / std::sqrt(static_cast<double>(m)), 0.0));
}

// Per-user coefficients of the rate/interference model:
//   a_k: secondary link gain,  b_k: noise + primary-downlink power at the
//   user (watts),  c_k: secondary-to-primary leakage gain.
struct LinkGains {
  RealVec a;
  RealVec b;
  RealVec c;

  int num_users() const { return static_cast<int>(a.size()); }
};

inline Complex effective_channel(const Eigen::Ref<const Eigen::RowVectorXcd>& channel_row,
                                 const Mat& phi, const Vec& w) {
  if (channel_row.cols() != phi.rows() || phi.cols() != w.size())
    throw std::invalid_argument("effective_channel: dimension mismatch");
  return (channel_row * (phi * w))(0);
}

inline double effective_gain(const Eigen::Ref<const Eigen::RowVectorXcd>& channel_row,
                             const Mat& phi, const Vec& w) {
  return std::norm(effective_channel(channel_row, phi, w));
}

// Assemble (a, b, c) for every user.  The primary downlink splits its power
// equally across the K paired terminals: b_k = sigma^2 + |f_k|^2 * Q_p / K.
inline LinkGains compute_gains(const ChannelSet& set, const Mat& phi, const Vec& w,
                               const SystemConfig& cfg) {
  const int k_users = set.num_users();
  LinkGains gains;
  gains.a.resize(k_users);
  gains.b.resize(k_users);
  gains.c.resize(k_users);
  const Vec phi_w = phi * w;  // shared across users
  if (set.h.cols() != phi.rows() || phi.cols() != w.size())
    throw std::invalid_argument("compute_gains: dimension mismatch");
  const double per_put_power = cfg.leo_power_w / static_cast<double>(k_users);
  for (int k = 0; k < k_users; ++k) {
    gains.a(k) = std::norm((set.h.row(k) * phi_w)(0));
    gains.c(k) = std::norm((set.g.row(k) * phi_w)(0));
    gains.b(k) = cfg.noise_w + std::norm(set.f(k)) * per_put_power;
  }
  return gains;
}

inline double sinr(double a, double b, double p) {
  if (p < 0.0) throw std::invalid_argument("sinr: power must be >= 0");
  return a * p / b;
}

// Achievable sum rate  sum_k log2(1 + a_k p_k / b_k)  in bits/s/Hz.
inline double sum_rate(const LinkGains& gains, const RealVec& p) {
  if (p.size() != gains.a.size())
    throw std::invalid_argument("sum_rate: dimension mismatch");
  double total = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    total += std::log2(1.0 + sinr(gains.a(k), gains.b(k), p(k)));
  return total;
}

inline double interference_at_put(double c, double p) { return c * p; }

// Aggregate constraint slack  sum_k c_k p_k - I_th  used by the dual loop.
inline double interference_excess(const LinkGains& gains, const RealVec& p,
                                  double i_th) {
  return gains.c.dot(p) - i_th;
}

}  // namespace bdris
