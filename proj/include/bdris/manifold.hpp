#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/power_control.hpp"
#include "bdris/rng.hpp"

namespace bdris {

// ||Phi Phi^H - I||_F  (testable unitarity).
inline double unitarity_residual(const Mat& phi) {
  return (phi * phi.adjoint() - Mat::Identity(phi.rows(), phi.cols())).norm();
}

// ||Phi^H P + P^H Phi||_F  (tangency of P at Phi).
inline double tangency_residual(const Mat& phi, const Mat& p) {
  Mat s = phi.adjoint() * p;
  s += s.adjoint().eval();
  return s.norm();
}

// Lagrangian of the phase subproblem, as a function of the gains at Phi:
//   f(Phi) - mu * sum_k (c_k p_k - I_th).
inline double lagrangian_value(const LinkGains& gains, const RealVec& p, double mu,
                               double i_th) {
  const double penalty =
      gains.c.dot(p) - i_th * static_cast<double>(gains.num_users());
  return sum_rate(gains, p) - mu * penalty;
}

inline double lagrangian_value(const ChannelSet& set, const Mat& phi, const Vec& w,
                               const RealVec& p, double mu,
                               const SystemConfig& cfg) {
  return lagrangian_value(compute_gains(set, phi, w, cfg), p, mu,
                          cfg.interference_cap_w);
}

namespace detail {

// Left factor of the rank-1 gradient of the aggregate interference
// I(Phi) = sum_k p_k |g_k^T Phi w|^2, i.e. grad I = u_int w^H.
inline Vec interference_left_factor(const ChannelSet& set, const Vec& phi_w,
                                    const RealVec& p) {
  Vec u = Vec::Zero(set.num_elements());
  for (int k = 0; k < set.num_users(); ++k) {
    const Complex r = (set.g.row(k) * phi_w)(0);
    u += 2.0 * p(k) * r * set.g.row(k).conjugate().transpose();
  }
  return u;
}

// Left factor u of the rank-1 Lagrangian gradient G = u w^H.
inline Vec gradient_left_factor(const ChannelSet& set, const Vec& phi_w,
                                const RealVec& p, double mu,
                                const SystemConfig& cfg) {
  const int k_users = set.num_users();
  const double per_put_power = cfg.leo_power_w / static_cast<double>(k_users);
  Vec u = Vec::Zero(set.num_elements());
  for (int k = 0; k < k_users; ++k) {
    const Complex s = (set.h.row(k) * phi_w)(0);
    const double a = std::norm(s);
    const double b = cfg.noise_w + std::norm(set.f(k)) * per_put_power;
    const double coef = 2.0 * p(k) / (kLn2 * (b + a * p(k)));
    u += coef * s * set.h.row(k).conjugate().transpose();
  }
  u -= mu * interference_left_factor(set, phi_w, p);
  return u;
}

}  // namespace detail

// Euclidean (Wirtinger, factor-2) gradient of the Lagrangian in Phi:
//   G = sum_k [2 p_k / (ln2 (b_k + a_k p_k))] conj(h_k) (h_k^T Phi w) w^H
//     - 2 mu sum_k p_k conj(g_k) (g_k^T Phi w) w^H.
// Both terms share the w^H right factor, so G = u w^H with an M-vector u.
inline Mat euclidean_gradient(const ChannelSet& set, const Mat& phi, const Vec& w,
                              const RealVec& p, double mu,
                              const SystemConfig& cfg) {
  return detail::gradient_left_factor(set, phi * w, p, mu, cfg) * w.adjoint();
}

// Tangent-space projection at Phi:  P = G - Phi (Phi^H G + G^H Phi) / 2.
// Phi^H P + P^H Phi = 0 holds identically for unitary Phi.
inline Mat tangent_project(const Mat& phi, const Mat& g) {
  if (phi.rows() != g.rows() || phi.cols() != g.cols())
    throw std::invalid_argument("tangent_project: dimension mismatch");
  Mat sym = phi.adjoint() * g;
  sym += sym.adjoint().eval();
  return g - 0.5 * (phi * sym);
}

// Polar retraction: Z = U S V^H  ->  U V^H.  Degenerate steps (smallest
// singular value below 1e-12 of the largest) are rejected.
inline Mat svd_retract(const Mat& z) {
  Eigen::BDCSVD<Mat> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0) ||
      sv(sv.size() - 1) < 1e-12 * sv(0))
    throw SolverError("svd_retract: degenerate step (rank-deficient input)");
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Dual ascent on the aggregate interference excess.
inline double dual_update(double mu, double alpha, double excess) {
  if (mu < 0.0 || !(alpha > 0.0))
    throw std::invalid_argument("dual_update: requires mu >= 0, alpha > 0");
  return std::max(0.0, mu + alpha * excess);
}

// Haar-like random unitary: polar factor of an i.i.d. CN(0,1) matrix.
inline Mat random_unitary(int m, RandomStream& rng) {
  Mat z(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) z(i, j) = rng.cnormal();
  return svd_retract(z);
}

struct PhaseIterTrace {
  double objective = 0.0;   // f(Phi) at the iterate
  double slack = 0.0;       // sum_k c_k p_k - I_th at the iterate
  double lagrangian = 0.0;  // L(Phi, mu) before the dual update
  double grad_norm = 0.0;   // ||P||_F
  double step = 0.0;        // accepted step size (0 if the step was rejected)
};

struct PhaseOptResult {
  Mat phi;
  double mu = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<PhaseIterTrace> trace;
  double max_unitarity_residual = 0.0;
  double max_tangency_residual = 0.0;
};

namespace detail {

// Projection of the rank-1 gradient G = u w^H, assembled in O(M^2):
//   P = u w^H - (Phi Phi^H u) w^H / 2 - (Phi w) (Phi^H u)^H / 2.
inline Mat project_rank1_gradient(const Mat& phi, const Vec& phi_w, const Vec& u,
                                  const Vec& w) {
  const Vec phi_h_u = phi.adjoint() * u;
  const Vec phi_phi_h_u = phi * phi_h_u;
  Mat p = u * w.adjoint();
  p.noalias() -= 0.5 * (phi_phi_h_u * w.adjoint());
  p.noalias() -= 0.5 * (phi_w * phi_h_u.adjoint());
  return p;
}

}  // namespace detail

// Step 2 of the alternating optimization: projected Riemannian gradient
// ascent on the unitary manifold with dual ascent on the aggregate
// interference excess.  Backtracking halves the step (up to
// solver.max_backtracks times) whenever the Lagrangian fails a sufficient-
// increase test; when no step length improves, the iterate stays put, which
// drives the update norm to zero and the loop to its convergence exit.
// Returns the final iterate on convergence, otherwise the best feasible
// iterate seen (falling back to the minimum-slack iterate).
inline PhaseOptResult optimize_phase(const ChannelSet& set, const RealVec& p,
                                     const Mat& phi0, const Vec& w,
                                     const SystemConfig& cfg, double mu0 = 0.0) {
  const SolverOptions& opts = cfg.solver;
  const double i_th = cfg.interference_cap_w;
  const double eps_constraint = cfg.eps_constraint();
  constexpr double kArmijo = 1e-4;

  PhaseOptResult res;
  res.phi = phi0;
  res.mu = mu0;

  Mat phi = phi0;
  Vec phi_w = phi * w;
  LinkGains gains = compute_gains(set, phi, w, cfg);
  double lagr = lagrangian_value(gains, p, res.mu, i_th);
  double slack = interference_excess(gains, p, i_th);

  // Track the best feasible iterate (and min-slack fallback), Phi0 included.
  double best_feasible_f = -std::numeric_limits<double>::infinity();
  Mat best_feasible_phi;
  double min_slack = slack;
  Mat min_slack_phi = phi;
  if (min_slack <= eps_constraint) {
    best_feasible_f = sum_rate(gains, p);
    best_feasible_phi = phi;
  }

  for (int it = 0; it < opts.max_ris_iterations; ++it) {
    ++res.iterations;
    // Inside the feasible band, ascend the Lagrangian; outside it, descend
    // the aggregate interference directly (restoration). The dual variable
    // alone moves too slowly to tilt the Lagrangian toward feasibility
    // within the iteration budget, so the line search owns feasibility.
    const bool restoring = slack > eps_constraint;
    const Vec u = restoring
                      ? Vec(-detail::interference_left_factor(set, phi_w, p))
                      : detail::gradient_left_factor(set, phi_w, p, res.mu, cfg);
    const Mat proj = detail::project_rank1_gradient(phi, phi_w, u, w);
    res.max_tangency_residual =
        std::max(res.max_tangency_residual, tangency_residual(phi, proj));
    const double grad_sq = proj.squaredNorm();

    Mat phi_next = phi;
    LinkGains gains_next = gains;
    Vec phi_w_next = phi_w;
    double step_used = 0.0;
    if (grad_sq > 0.0) {
      double eta = opts.riemannian_step;
      for (int bt = 0; bt <= opts.max_backtracks; ++bt, eta *= 0.5) {
        Mat candidate;
        try {
          candidate = svd_retract(phi + eta * proj);
        } catch (const SolverError&) {
          continue;  // degenerate step: halve and retry
        }
        res.max_unitarity_residual = std::max(res.max_unitarity_residual,
                                              unitarity_residual(candidate));
        LinkGains gains_cand = compute_gains(set, candidate, w, cfg);
        const double slack_cand = interference_excess(gains_cand, p, i_th);
        bool ok;
        if (restoring) {
          // Sufficient decrease of the aggregate interference.
          ok = slack_cand <= slack - kArmijo * eta * grad_sq;
        } else {
          // Sufficient increase of the Lagrangian, staying in the band.
          const double lagr_cand =
              lagrangian_value(gains_cand, p, res.mu, i_th);
          ok = (lagr_cand >= lagr + kArmijo * eta * grad_sq) &&
               (slack_cand <= eps_constraint);
        }
        if (ok) {
          phi_next = std::move(candidate);
          gains_next = std::move(gains_cand);
          phi_w_next = phi_next * w;
          step_used = eta;
          break;
        }
      }
    }

    const double delta = (phi_next - phi).norm();
    const double excess = interference_excess(gains_next, p, i_th);
    const double f_next = sum_rate(gains_next, p);
    res.trace.push_back({f_next, excess,
                         lagrangian_value(gains_next, p, res.mu, i_th),
                         std::sqrt(grad_sq), step_used});

    res.mu = dual_update(res.mu, opts.dual_step, excess);
    phi = std::move(phi_next);
    gains = std::move(gains_next);
    phi_w = std::move(phi_w_next);
    lagr = lagrangian_value(gains, p, res.mu, i_th);
    slack = excess;

    if (excess <= eps_constraint && f_next > best_feasible_f) {
      best_feasible_f = f_next;
      best_feasible_phi = phi;
    }
    if (excess < min_slack) {
      min_slack = excess;
      min_slack_phi = phi;
    }

    if (delta < opts.ris_tolerance && excess <= eps_constraint) {
      res.converged = true;
      break;
    }
  }

  if (res.converged) {
    res.phi = phi;
  } else if (best_feasible_f > -std::numeric_limits<double>::infinity()) {
    res.phi = best_feasible_phi;
  } else {
    res.phi = min_slack_phi;
  }
  return res;
}

}  // namespace bdris
