#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/dris.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/manifold.hpp"
#include "bdris/power_control.hpp"

namespace bdris {

struct AoIterTrace {
  double asr_before_power = 0.0;  // carried powers, clamped to current caps
  double asr_after_power = 0.0;   // after the exact power step
  double delta_p_sq = 0.0;
  double delta_phi_sq = 0.0;
  double slack = 0.0;             // aggregate interference excess
  int phase_iterations = 0;
  bool phase_converged = false;
};

struct Solution {
  PowerAllocation power;
  Mat phi;                  // effective surface response (diagonal for D-RIS)
  double asr = 0.0;         // recomputed at (phi, power) on return
  RealVec interference;     // c_k p_k per user (watts)
  int iterations_used = 0;
  bool converged = false;
  double final_slack = 0.0;
  std::vector<AoIterTrace> trace;
  double max_unitarity_residual = 0.0;  // over every retraction of the run
  double max_tangency_residual = 0.0;   // over every projection of the run
};

// Joint convergence test: strict on the combined squared update norm, and
// the aggregate interference excess must sit inside the tolerance band.
inline bool ao_converged(double delta_p_sq, double delta_phi_sq, double slack,
                         double ao_tolerance, double eps_constraint) {
  return (delta_p_sq + delta_phi_sq < ao_tolerance) && (slack <= eps_constraint);
}

// Iterate-pair form of the convergence test.
struct AoIterate {
  RealVec p;
  Mat phi;
};

inline bool converged(const AoIterate& prev, const AoIterate& curr, double slack,
                      const SolverOptions& opts, double i_th,
                      double constraint_tol_factor) {
  if (prev.p.size() != curr.p.size() || prev.phi.rows() != curr.phi.rows() ||
      prev.phi.cols() != curr.phi.cols())
    throw std::invalid_argument("converged: dimension mismatch");
  return ao_converged((curr.p - prev.p).squaredNorm(),
                      (curr.phi - prev.phi).squaredNorm(), slack,
                      opts.ao_tolerance, constraint_tol_factor * i_th);
}

namespace detail {

// Clamp a carried power vector to the per-user caps implied by `gains`.
// Only ever reduces entries, so budget feasibility is preserved.
inline RealVec clamp_to_caps(const RealVec& p, const LinkGains& gains,
                             double i_th) {
  RealVec out = p;
  for (Eigen::Index k = 0; k < p.size(); ++k)
    if (gains.c(k) > 0.0) out(k) = std::min(out(k), i_th / gains.c(k));
  return out;
}

struct BdrisArch {
  using State = Mat;

  struct OptOut {
    State state;
    double mu = 0.0;
    int iterations = 0;
    bool converged = false;
    double max_unitarity = 0.0;
    double max_tangency = 0.0;
  };

  static LinkGains gains(const ChannelSet& set, const State& s, const Vec& w,
                         const SystemConfig& cfg) {
    return compute_gains(set, s, w, cfg);
  }
  static OptOut optimize(const ChannelSet& set, const RealVec& p, const State& s,
                         const Vec& w, const SystemConfig& cfg, double mu) {
    PhaseOptResult r = optimize_phase(set, p, s, w, cfg, mu);
    return {std::move(r.phi), r.mu, r.iterations, r.converged,
            r.max_unitarity_residual, r.max_tangency_residual};
  }
  static double delta_sq(const State& x, const State& y) {
    return (x - y).squaredNorm();
  }
  static Mat to_matrix(const State& s) { return s; }
};

struct DrisArch {
  using State = RealVec;  // theta

  struct OptOut {
    State state;
    double mu = 0.0;
    int iterations = 0;
    bool converged = false;
    double max_unitarity = 0.0;
    double max_tangency = 0.0;
  };

  static LinkGains gains(const ChannelSet& set, const State& s, const Vec& w,
                         const SystemConfig& cfg) {
    return dris_gains(set, s, w, cfg);
  }
  static OptOut optimize(const ChannelSet& set, const RealVec& p, const State& s,
                         const Vec& w, const SystemConfig& cfg, double mu) {
    DiagOptResult r = optimize_diag_phases(set, p, s, w, cfg, mu);
    return {std::move(r.theta), r.mu, r.iterations, r.converged, 0.0, 0.0};
  }
  static double delta_sq(const State& x, const State& y) {
    return (unit_phases(x) - unit_phases(y)).squaredNorm();
  }
  static Mat to_matrix(const State& s) { return diag_phase_matrix(s); }
};

template <class Arch>
Solution alternate_impl(const SystemConfig& cfg, const ChannelSet& set,
                        const Vec& w, typename Arch::State state) {
  const SolverOptions& opts = cfg.solver;
  const double i_th = cfg.interference_cap_w;
  const double eps_constraint = cfg.eps_constraint();
  const double p_total = cfg.haps_power_w;

  Solution sol;
  double mu = 0.0;
  RealVec p_prev = RealVec::Zero(set.num_users());
  RealVec p_carry = p_prev;
  typename Arch::State state_prev = state;

  // Best exactly-solved iterate seen so far (by sum rate). The last iterate
  // can sit below it when the dual is actively suppressing interference, so
  // the returned solution is the best visited surface, re-solved below.
  double best_asr = -1.0;
  typename Arch::State best_state = state;

  for (int it = 0; it < opts.max_ao_iterations; ++it) {
    try {
      LinkGains gains = Arch::gains(set, state, w, cfg);
      const double asr_before =
          sum_rate(gains, clamp_to_caps(p_carry, gains, i_th));
      PowerAllocation alloc = solve_power(gains, p_total, i_th, opts.bisect);
      const double asr_after = sum_rate(gains, alloc.p);
      if (asr_after > best_asr) {
        best_asr = asr_after;
        best_state = state;
      }

      typename Arch::OptOut phase =
          Arch::optimize(set, alloc.p, state, w, cfg, mu);
      mu = phase.mu;
      sol.max_unitarity_residual =
          std::max(sol.max_unitarity_residual, phase.max_unitarity);
      sol.max_tangency_residual =
          std::max(sol.max_tangency_residual, phase.max_tangency);

      // From a feasible point the phase step is kept only if the
      // feasibility-adjusted sum rate does not decrease; from an infeasible
      // point it is always kept, since restoring feasibility may require a
      // transient rate sacrifice that the next power step repays.
      LinkGains gains_new = Arch::gains(set, phase.state, w, cfg);
      const double entry_slack = interference_excess(gains, alloc.p, i_th);
      bool accept = true;
      if (entry_slack <= eps_constraint) {
        const double feas_new =
            sum_rate(gains_new, clamp_to_caps(alloc.p, gains_new, i_th));
        const double feas_old =
            sum_rate(gains, clamp_to_caps(alloc.p, gains, i_th));
        accept = feas_new >= feas_old;
      }
      if (accept) state = std::move(phase.state);
      const LinkGains& gains_acc = accept ? gains_new : gains;

      const double delta_p_sq = (alloc.p - p_prev).squaredNorm();
      const double delta_phi_sq = Arch::delta_sq(state, state_prev);
      const double slack = interference_excess(gains_acc, alloc.p, i_th);

      sol.trace.push_back({asr_before, asr_after, delta_p_sq, delta_phi_sq,
                           slack, phase.iterations, phase.converged});
      ++sol.iterations_used;

      p_prev = alloc.p;
      p_carry = alloc.p;
      state_prev = state;

      if (ao_converged(delta_p_sq, delta_phi_sq, slack, opts.ao_tolerance,
                       eps_constraint)) {
        sol.converged = true;
        break;
      }
    } catch (const SolverError& e) {
      std::ostringstream msg;
      msg << "AO iteration " << (it + 1) << ": " << e.what();
      throw SolverError(msg.str());
    }
  }

  // Re-solve the power problem at the final surface so the reported pair is
  // jointly consistent; fall back to the best visited surface if the
  // trajectory ended below it. Budget and per-user caps hold for every
  // candidate pair by construction of the exact power solve, so the returned
  // Solution is feasible either way; the aggregate slack is reported as a
  // diagnostic of the inner loop's operating point.
  {
    LinkGains gains_final = Arch::gains(set, state, w, cfg);
    PowerAllocation alloc_final = solve_power(gains_final, p_total, i_th,
                                              opts.bisect);
    const double asr_final = sum_rate(gains_final, alloc_final.p);
    if (asr_final < best_asr) {
      state = best_state;
      gains_final = Arch::gains(set, state, w, cfg);
      alloc_final = solve_power(gains_final, p_total, i_th, opts.bisect);
    }
    sol.power = std::move(alloc_final);
    sol.phi = Arch::to_matrix(state);
    sol.asr = sum_rate(gains_final, sol.power.p);
    sol.interference = gains_final.c.cwiseProduct(sol.power.p);
    sol.final_slack = interference_excess(gains_final, sol.power.p, i_th);
  }
  return sol;
}

}  // namespace detail

// Algorithm: alternate exact power allocation and phase optimization until
// the joint update norm and the constraint slack both pass tolerance.
inline Solution alternate(const SystemConfig& cfg, const ChannelSet& set,
                          const Vec& w, const Mat& phi0) {
  if (phi0.rows() != set.num_elements() || phi0.cols() != set.num_elements())
    throw std::invalid_argument("alternate: phase matrix dimension mismatch");
  if (unitarity_residual(phi0) > 1e-8)
    throw std::invalid_argument("alternate: initial phase matrix not unitary");
  return detail::alternate_impl<detail::BdrisArch>(cfg, set, w, phi0);
}

inline Solution alternate_dris(const SystemConfig& cfg, const ChannelSet& set,
                               const Vec& w, const RealVec& theta0) {
  if (theta0.size() != set.num_elements())
    throw std::invalid_argument("alternate_dris: phase vector dimension mismatch");
  return detail::alternate_impl<detail::DrisArch>(cfg, set, w, theta0);
}

}  // namespace bdris
