#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/link_metrics.hpp"

namespace bdris {

inline constexpr double kLn2 = 0.6931471805599453094172321214581766;

enum class UserStatus { zero, free_level, capped };

// Water-filling solution of the power subproblem together with the dual
// variables that certify it.
struct PowerAllocation {
  RealVec p;                   // per-user transmit powers (watts)
  RealVec lambda;              // per-user interference duals
  double nu = 0.0;             // total-power dual
  RealVec water_level_terms;   // 1/(ln2*(lambda_k c_k + nu)) per user
  std::vector<UserStatus> status;
  bool all_zero_channels = false;
  int outer_iterations = 0;
};

// Closed-form per-user water-filling power at fixed duals:
//   p = max{0, 1/(ln2*(lambda*c + nu)) - b/a}.
inline double waterfill_power(double a, double b, double c, double lambda,
                              double nu) {
  if (!(a > 0.0)) throw std::invalid_argument("waterfill_power: requires a > 0");
  if (lambda < 0.0 || nu < 0.0)
    throw std::invalid_argument("waterfill_power: duals must be >= 0");
  const double level_denom = lambda * c + nu;
  if (!(level_denom > 0.0))
    throw std::invalid_argument(
        "waterfill_power: no active constraint (infinite water level)");
  return std::max(0.0, 1.0 / (kLn2 * level_denom) - b / a);
}

namespace detail {

// As waterfill_power but returns +inf at zero water-level denominator, so
// bracketing probes can treat the unconstrained case uniformly.
inline double waterfill_guarded(double a, double b, double c, double lambda,
                                double nu) {
  const double level_denom = lambda * c + nu;
  if (!(level_denom > 0.0)) return std::numeric_limits<double>::infinity();
  return std::max(0.0, 1.0 / (kLn2 * level_denom) - b / a);
}

}  // namespace detail

// Heuristic dual for a known-active interference cap.  Exact only in
// special cases; the solver uses bisection as the source of truth and
// this value is exposed for cross-checking.
inline double lambda_active_shortcut(double c, double i_th) {
  if (!(i_th > 0.0))
    throw std::invalid_argument("lambda_active_shortcut: I_th must be > 0");
  return c / i_th;
}

struct InnerBisectResult {
  double lambda = 0.0;
  double p = 0.0;
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

// Resolve the per-user dual lambda at fixed nu: returns 0 when the cap is
// slack at lambda=0, otherwise brackets by doubling and bisects until the
// power sits on the cap, finishing with an analytic inversion of the
// water-filling expression clamped into the final bracket.
// The on-cap tolerance scales with the cap itself: for c -> 0 the cap
// p = I_th/c grows without bound and an absolute tolerance on p becomes
// unattainable in floating point, while every downstream KKT quantity
// multiplies p back by c, so a cap-relative tolerance loses no precision.
inline InnerBisectResult inner_bisect_lambda(double a, double b, double c,
                                             double nu, double i_th,
                                             const BisectOptions& opts) {
  if (!(a > 0.0) || !(c > 0.0))
    throw std::invalid_argument("inner_bisect_lambda: requires a > 0 and c > 0");
  const double cap = i_th / c;
  const double tol_p = opts.lambda_tol * std::max(1.0, cap);
  InnerBisectResult res;

  const double p0 = detail::waterfill_guarded(a, b, c, 0.0, nu);
  if (p0 <= cap) {
    res.lambda = 0.0;
    res.p = p0;
    return res;
  }

  // Bracket growth: start at 1 and double until the cap is respected.
  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (detail::waterfill_guarded(a, b, c, hi, nu) > cap) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) {
      std::ostringstream msg;
      msg << "inner_bisect_lambda: bracket growth exhausted, lambda in ["
          << lo << ", " << hi << "]";
      throw SolverError(msg.str());
    }
  }

  bool within_tol = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    ++res.iterations;
    const double mid = 0.5 * (lo + hi);
    const double pm = detail::waterfill_guarded(a, b, c, mid, nu);
    if (std::abs(pm - cap) <= tol_p) {
      within_tol = true;
      // Keep bisecting from the tolerance-hit point would not improve the
      // returned value: the analytic polish below lands exactly on the cap.
      if (pm > cap) lo = mid; else hi = mid;
      break;
    }
    if (pm > cap) lo = mid; else hi = mid;
  }

  // Analytic inversion of p(lambda, nu) = cap, clamped to the bracket.
  const double exact = (1.0 / (kLn2 * (cap + b / a)) - nu) / c;
  const double polished = std::clamp(exact, std::max(lo, 0.0), hi);
  const double p_polished = detail::waterfill_guarded(a, b, c, polished, nu);
  if (std::abs(p_polished - cap) <= tol_p) {
    res.lambda = polished;
    res.p = std::min(p_polished, cap);  // feasible side to the last ulp
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    return res;
  }
  // Fall back to the feasible bracket endpoint.
  const double p_hi = detail::waterfill_guarded(a, b, c, hi, nu);
  if (within_tol || std::abs(p_hi - cap) <= tol_p) {
    res.lambda = hi;
    res.p = std::min(p_hi, cap);
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    return res;
  }
  std::ostringstream msg;
  msg << "inner_bisect_lambda: no convergence after " << res.iterations
      << " iterations, bracket [" << lo << ", " << hi << "], cap gap "
      << (p_hi - cap);
  throw SolverError(msg.str());
}

namespace detail {

struct NuProbe {
  double total = 0.0;  // P(nu); +inf when some user is unconstrained
  RealVec p;
  RealVec lambda;
  std::vector<UserStatus> status;
};

inline NuProbe evaluate_at_nu(const LinkGains& gains, double nu, double i_th,
                              const BisectOptions& opts) {
  const int k_users = gains.num_users();
  NuProbe probe;
  probe.p = RealVec::Zero(k_users);
  probe.lambda = RealVec::Zero(k_users);
  probe.status.assign(k_users, UserStatus::zero);
  for (int k = 0; k < k_users; ++k) {
    const double a = gains.a(k), b = gains.b(k), c = gains.c(k);
    if (!(a > 0.0)) continue;  // excluded user
    double p, lambda;
    if (c > 0.0) {
      const InnerBisectResult inner = inner_bisect_lambda(a, b, c, nu, i_th, opts);
      p = inner.p;
      lambda = inner.lambda;
    } else {
      p = waterfill_guarded(a, b, c, 0.0, nu);
      lambda = 0.0;
    }
    probe.p(k) = p;
    probe.lambda(k) = lambda;
    probe.status[k] = (p == 0.0) ? UserStatus::zero
                      : (lambda > 0.0 ? UserStatus::capped : UserStatus::free_level);
    probe.total += p;
  }
  return probe;
}

inline PowerAllocation assemble(const LinkGains& gains, const NuProbe& probe,
                                double nu, int outer_iterations) {
  PowerAllocation alloc;
  alloc.p = probe.p;
  alloc.lambda = probe.lambda;
  alloc.nu = nu;
  alloc.status = probe.status;
  alloc.outer_iterations = outer_iterations;
  const int k_users = gains.num_users();
  alloc.water_level_terms.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    const double denom = probe.lambda(k) * gains.c(k) + nu;
    alloc.water_level_terms(k) = denom > 0.0
        ? 1.0 / (kLn2 * denom)
        : std::numeric_limits<double>::infinity();
  }
  return alloc;
}

}  // namespace detail

// Outer bisection on the total-power dual nu.  P(nu) is non-increasing, so
// the budget-tight dual is bracketed by doubling and then bisected; the free
// users' water level is finally inverted analytically for a machine-precision
// budget match (falling back to the feasible bracket endpoint if the active
// set proves unstable under the polished dual).
inline PowerAllocation outer_bisect_nu(const LinkGains& gains, double p_total,
                                       double i_th, const BisectOptions& opts) {
  if (gains.num_users() < 1)
    throw std::invalid_argument("outer_bisect_nu: need at least one user");
  if (!(p_total > 0.0))
    throw std::invalid_argument("outer_bisect_nu: P_t must be > 0");

  // Budget slack at nu = 0?
  detail::NuProbe at_zero = detail::evaluate_at_nu(gains, 0.0, i_th, opts);
  if (at_zero.total <= p_total)
    return detail::assemble(gains, at_zero, 0.0, 0);

  double lo = 0.0, hi = 1.0;
  int doublings = 0;
  while (detail::evaluate_at_nu(gains, hi, i_th, opts).total > p_total) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 200) {
      std::ostringstream msg;
      msg << "outer_bisect_nu: bracket growth exhausted, nu in [" << lo << ", "
          << hi << "]";
      throw SolverError(msg.str());
    }
  }

  int iterations = 0;
  detail::NuProbe probe;
  for (int it = 0; it < opts.max_iterations; ++it) {
    ++iterations;
    const double mid = 0.5 * (lo + hi);
    probe = detail::evaluate_at_nu(gains, mid, i_th, opts);
    if (std::abs(probe.total - p_total) <= opts.nu_tol) {
      if (probe.total > p_total) lo = mid; else hi = mid;
      break;
    }
    if (probe.total > p_total) lo = mid; else hi = mid;
  }

  // Analytic polish: invert the free users' water level so the budget binds
  // exactly.  Statuses are read from the feasible endpoint.
  detail::NuProbe at_hi = detail::evaluate_at_nu(gains, hi, i_th, opts);
  double capped_power = 0.0, free_floor = 0.0;
  int n_free = 0;
  for (int k = 0; k < gains.num_users(); ++k) {
    if (at_hi.status[k] == UserStatus::capped) capped_power += at_hi.p(k);
    else if (at_hi.status[k] == UserStatus::free_level) {
      ++n_free;
      free_floor += gains.b(k) / gains.a(k);
    }
  }
  if (n_free > 0) {
    const double budget = p_total - capped_power;
    if (budget > 0.0) {
      const double exact = n_free / (kLn2 * (budget + free_floor));
      const double polished = std::clamp(exact, lo, hi);
      detail::NuProbe at_polished =
          detail::evaluate_at_nu(gains, polished, i_th, opts);
      const double overshoot = at_polished.total - p_total;
      if (overshoot <= p_total * 1e-12 &&
          p_total - at_polished.total <= opts.nu_tol)
        return detail::assemble(gains, at_polished, polished, iterations);
    }
  }
  if (std::abs(at_hi.total - p_total) <= opts.nu_tol || at_hi.total <= p_total)
    return detail::assemble(gains, at_hi, hi, iterations);

  std::ostringstream msg;
  msg << "outer_bisect_nu: no convergence after " << iterations
      << " iterations, bracket [" << lo << ", " << hi << "], budget gap "
      << (at_hi.total - p_total);
  throw SolverError(msg.str());
}

// Step 1 of the alternating optimization: full nested dual bisection.
inline PowerAllocation solve_power(const LinkGains& gains, double p_total,
                                   double i_th, const BisectOptions& opts) {
  const int k_users = gains.num_users();
  if (k_users < 1)
    throw std::invalid_argument("solve_power: need at least one user");
  bool any_active = false;
  for (int k = 0; k < k_users; ++k)
    if (gains.a(k) > 0.0) { any_active = true; break; }
  if (!any_active) {
    PowerAllocation alloc;
    alloc.p = RealVec::Zero(k_users);
    alloc.lambda = RealVec::Zero(k_users);
    alloc.nu = 0.0;
    alloc.water_level_terms =
        RealVec::Constant(k_users, std::numeric_limits<double>::infinity());
    alloc.status.assign(k_users, UserStatus::zero);
    alloc.all_zero_channels = true;
    return alloc;
  }
  return outer_bisect_nu(gains, p_total, i_th, opts);
}

// KKT residual bundle for a returned allocation; all entries should be at
// machine precision after the analytic dual polish.
struct KktResiduals {
  double stationarity = 0.0;
  double primal_budget = 0.0;
  double primal_caps = 0.0;
  double dual_feasibility = 0.0;
  double comp_slack_budget = 0.0;
  double comp_slack_caps = 0.0;

  double max() const {
    return std::max({stationarity, primal_budget, primal_caps, dual_feasibility,
                     comp_slack_budget, comp_slack_caps});
  }
};

inline KktResiduals kkt_residuals(const LinkGains& gains,
                                  const PowerAllocation& alloc, double p_total,
                                  double i_th) {
  KktResiduals r;
  const int k_users = gains.num_users();
  double total = 0.0;
  for (int k = 0; k < k_users; ++k) {
    const double a = gains.a(k), b = gains.b(k), c = gains.c(k);
    const double p = alloc.p(k), lambda = alloc.lambda(k);
    total += p;
    r.dual_feasibility = std::max(r.dual_feasibility, -lambda);
    if (a > 0.0) {
      const double grad = a / (kLn2 * (b + a * p)) - lambda * c - alloc.nu;
      r.stationarity = std::max(
          r.stationarity, p > 0.0 ? std::abs(grad) : std::max(0.0, grad));
    }
    r.primal_caps = std::max(r.primal_caps, c * p - i_th);
    r.comp_slack_caps =
        std::max(r.comp_slack_caps, std::abs(lambda * (c * p - i_th)));
  }
  r.primal_caps = std::max(0.0, r.primal_caps);
  r.primal_budget = std::max(0.0, total - p_total);
  r.dual_feasibility = std::max(r.dual_feasibility, -alloc.nu);
  r.dual_feasibility = std::max(0.0, r.dual_feasibility);
  r.comp_slack_budget = std::abs(alloc.nu * (total - p_total));
  return r;
}

}  // namespace bdris
