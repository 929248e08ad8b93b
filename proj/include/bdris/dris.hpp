#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/manifold.hpp"
#include "bdris/rng.hpp"

namespace bdris {

// Diagonal-RIS phase state: theta_m in [0, 2*pi), inducing diag(e^{j theta}).
struct DiagPhases {
  RealVec theta;

  int size() const { return static_cast<int>(theta.size()); }
};

inline Vec unit_phases(const RealVec& theta) {
  Vec u(theta.size());
  for (Eigen::Index m = 0; m < theta.size(); ++m) u(m) = std::polar(1.0, theta(m));
  return u;
}

inline RealVec wrap_phases(const Vec& u) {
  RealVec theta(u.size());
  for (Eigen::Index m = 0; m < u.size(); ++m) {
    double t = std::arg(u(m));
    if (t < 0.0) t += 2.0 * kPi;
    theta(m) = t;
  }
  return theta;
}

inline Mat diag_phase_matrix(const RealVec& theta) {
  return Mat(unit_phases(theta).asDiagonal());
}

// Effective gain through a diagonal surface: |sum_m h_m e^{j theta_m} w_m|^2.
inline double dris_effective_gain(const Eigen::Ref<const Eigen::RowVectorXcd>& channel_row,
                                  const RealVec& theta, const Vec& w) {
  if (channel_row.cols() != theta.size() || theta.size() != w.size())
    throw std::invalid_argument("dris_effective_gain: dimension mismatch");
  Complex s = 0.0;
  for (Eigen::Index m = 0; m < theta.size(); ++m)
    s += channel_row(m) * std::polar(1.0, theta(m)) * w(m);
  return std::norm(s);
}

inline LinkGains dris_gains(const ChannelSet& set, const RealVec& theta,
                            const Vec& w, const SystemConfig& cfg) {
  const int k_users = set.num_users();
  LinkGains gains;
  gains.a.resize(k_users);
  gains.b.resize(k_users);
  gains.c.resize(k_users);
  const Vec u = unit_phases(theta);
  const Vec uw = u.cwiseProduct(w);
  const double per_put_power = cfg.leo_power_w / static_cast<double>(k_users);
  for (int k = 0; k < k_users; ++k) {
    gains.a(k) = std::norm((set.h.row(k) * uw)(0));
    gains.c(k) = std::norm((set.g.row(k) * uw)(0));
    gains.b(k) = cfg.noise_w + std::norm(set.f(k)) * per_put_power;
  }
  return gains;
}

inline RealVec random_phases(int m, RandomStream& rng) {
  RealVec theta(m);
  for (int i = 0; i < m; ++i) theta(i) = rng.uniform(0.0, 2.0 * kPi);
  return theta;
}

struct DiagOptResult {
  RealVec theta;
  double mu = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<PhaseIterTrace> trace;
};

namespace detail {

struct DiagEval {
  LinkGains gains;
  double lagrangian = 0.0;
};

inline DiagEval eval_diag(const ChannelSet& set, const Vec& u, const Vec& w,
                          const RealVec& p, double mu, const SystemConfig& cfg) {
  const int k_users = set.num_users();
  DiagEval ev;
  ev.gains.a.resize(k_users);
  ev.gains.b.resize(k_users);
  ev.gains.c.resize(k_users);
  const Vec uw = u.cwiseProduct(w);
  const double per_put_power = cfg.leo_power_w / static_cast<double>(k_users);
  for (int k = 0; k < k_users; ++k) {
    ev.gains.a(k) = std::norm((set.h.row(k) * uw)(0));
    ev.gains.c(k) = std::norm((set.g.row(k) * uw)(0));
    ev.gains.b(k) = cfg.noise_w + std::norm(set.f(k)) * per_put_power;
  }
  ev.lagrangian = lagrangian_value(ev.gains, p, mu, cfg.interference_cap_w);
  return ev;
}

// Per-entry radial component removal: tangent projection on the torus.
inline Vec diag_remove_radial(Vec grad, const Vec& u) {
  for (Eigen::Index m = 0; m < u.size(); ++m)
    grad(m) -= std::real(std::conj(u(m)) * grad(m)) * u(m);
  return grad;
}

// Euclidean (Wirtinger, factor-2) gradient of the aggregate interference
// I(u) = sum_k p_k |(g_k .* w)^T u|^2 with respect to u.
inline Vec diag_interference_gradient(const ChannelSet& set, const Vec& u,
                                      const Vec& w, const RealVec& p) {
  const Vec uw = u.cwiseProduct(w);
  Vec grad = Vec::Zero(u.size());
  for (int k = 0; k < set.num_users(); ++k) {
    const Complex r = (set.g.row(k) * uw)(0);
    // d|v^T u|^2 / du*  =  conj(v) (v^T u),  with v = g .* w.
    grad += 2.0 * p(k) * r * set.g.row(k).adjoint().cwiseProduct(w.conjugate());
  }
  return grad;
}

// Riemannian gradient of the Lagrangian on the unit-modulus torus:
// Euclidean gradient with the per-entry radial component removed.
inline Vec diag_riemannian_gradient(const ChannelSet& set, const Vec& u,
                                    const Vec& w, const RealVec& p, double mu,
                                    const SystemConfig& cfg) {
  const int k_users = set.num_users();
  const Vec uw = u.cwiseProduct(w);
  const double per_put_power = cfg.leo_power_w / static_cast<double>(k_users);
  Vec grad = Vec::Zero(u.size());
  for (int k = 0; k < k_users; ++k) {
    const Complex s = (set.h.row(k) * uw)(0);
    const double a = std::norm(s);
    const double b = cfg.noise_w + std::norm(set.f(k)) * per_put_power;
    const double coef = 2.0 * p(k) / (kLn2 * (b + a * p(k)));
    grad += coef * s * set.h.row(k).adjoint().cwiseProduct(w.conjugate());
  }
  grad -= mu * diag_interference_gradient(set, u, w, p);
  return diag_remove_radial(std::move(grad), u);
}

inline Vec renormalize_entries(const Vec& u, const Vec& fallback) {
  Vec out(u.size());
  for (Eigen::Index m = 0; m < u.size(); ++m) {
    const double mag = std::abs(u(m));
    out(m) = mag > 1e-300 ? u(m) / mag : fallback(m);
  }
  return out;
}

}  // namespace detail

// D-RIS counterpart of optimize_phase: projected gradient ascent on the
// unit-modulus phases with the identical dual-ascent, backtracking, and
// stopping rules, so architecture is the only difference in the comparison.
inline DiagOptResult optimize_diag_phases(const ChannelSet& set, const RealVec& p,
                                          const RealVec& theta0, const Vec& w,
                                          const SystemConfig& cfg,
                                          double mu0 = 0.0) {
  const SolverOptions& opts = cfg.solver;
  const double i_th = cfg.interference_cap_w;
  const double eps_constraint = cfg.eps_constraint();
  constexpr double kArmijo = 1e-4;

  DiagOptResult res;
  res.theta = theta0;
  res.mu = mu0;

  Vec u = unit_phases(theta0);
  detail::DiagEval ev = detail::eval_diag(set, u, w, p, res.mu, cfg);
  double slack = interference_excess(ev.gains, p, i_th);

  double best_feasible_f = -std::numeric_limits<double>::infinity();
  Vec best_feasible_u;
  double min_slack = slack;
  Vec min_slack_u = u;
  if (min_slack <= eps_constraint) {
    best_feasible_f = sum_rate(ev.gains, p);
    best_feasible_u = u;
  }

  for (int it = 0; it < opts.max_ris_iterations; ++it) {
    ++res.iterations;
    // Same two-mode line search as the full-matrix optimizer: outside the
    // feasible band, descend the aggregate interference directly
    // (restoration); inside it, ascend the Lagrangian without leaving the
    // band. The dual step alone is too slow to restore feasibility.
    const bool restoring = slack > eps_constraint;
    const Vec grad =
        restoring
            ? detail::diag_remove_radial(
                  -detail::diag_interference_gradient(set, u, w, p), u)
            : detail::diag_riemannian_gradient(set, u, w, p, res.mu, cfg);
    const double grad_sq = grad.squaredNorm();

    Vec u_next = u;
    detail::DiagEval ev_next = ev;
    double step_used = 0.0;
    if (grad_sq > 0.0) {
      double eta = opts.riemannian_step;
      for (int bt = 0; bt <= opts.max_backtracks; ++bt, eta *= 0.5) {
        const Vec candidate = detail::renormalize_entries(u + eta * grad, u);
        detail::DiagEval ev_cand = detail::eval_diag(set, candidate, w, p, res.mu, cfg);
        const double slack_cand = interference_excess(ev_cand.gains, p, i_th);
        bool ok;
        if (restoring) {
          // Sufficient decrease of the aggregate interference.
          ok = slack_cand <= slack - kArmijo * eta * grad_sq;
        } else {
          // Sufficient increase of the Lagrangian, staying in the band.
          ok = (ev_cand.lagrangian >= ev.lagrangian + kArmijo * eta * grad_sq) &&
               (slack_cand <= eps_constraint);
        }
        if (ok) {
          u_next = candidate;
          ev_next = std::move(ev_cand);
          step_used = eta;
          break;
        }
      }
    }

    const double delta = (u_next - u).norm();
    const double excess = interference_excess(ev_next.gains, p, i_th);
    const double f_next = sum_rate(ev_next.gains, p);
    res.trace.push_back({f_next, excess, ev_next.lagrangian,
                         std::sqrt(grad_sq), step_used});

    res.mu = dual_update(res.mu, opts.dual_step, excess);
    u = std::move(u_next);
    ev = std::move(ev_next);
    ev.lagrangian = lagrangian_value(ev.gains, p, res.mu, i_th);
    slack = excess;

    if (excess <= eps_constraint && f_next > best_feasible_f) {
      best_feasible_f = f_next;
      best_feasible_u = u;
    }
    if (excess < min_slack) {
      min_slack = excess;
      min_slack_u = u;
    }

    if (delta < opts.ris_tolerance && excess <= eps_constraint) {
      res.converged = true;
      break;
    }
  }

  if (res.converged) {
    res.theta = wrap_phases(u);
  } else if (best_feasible_f > -std::numeric_limits<double>::infinity()) {
    res.theta = wrap_phases(best_feasible_u);
  } else {
    res.theta = wrap_phases(min_slack_u);
  }
  return res;
}

}  // namespace bdris
