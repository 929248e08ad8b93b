#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bdris/config.hpp"
#include "bdris/dris.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/manifold.hpp"
#include "bdris/rng.hpp"

using namespace bdris;

namespace {

ChannelSet small_set(int k_users, int m, unsigned long long seed) {
  ChannelSet set;
  RandomStream rng(seed, 0, StreamTag::generic);
  set.h.resize(k_users, m);
  set.g.resize(k_users, m);
  set.f.resize(k_users);
  for (int k = 0; k < k_users; ++k) {
    for (int j = 0; j < m; ++j) {
      set.h(k, j) = 0.5 * rng.cnormal();
      set.g(k, j) = 0.3 * rng.cnormal();
    }
    set.f(k) = 0.4 * rng.cnormal();
  }
  return set;
}

SystemConfig unit_scale_config(int k_users, int m, double cap) {
  SystemConfig cfg = default_config();
  cfg.num_users = k_users;
  cfg.ris_elements = m;
  cfg.noise_w = 0.5;
  cfg.leo_power_w = 1.0;
  cfg.interference_cap_w = cap;
  return cfg;
}

}  // namespace

TEST_CASE("phase vector round trips") {
  RandomStream rng(51, 0, StreamTag::generic);
  const RealVec theta = random_phases(12, rng);

  SECTION("phases stay in [0, 2pi)") {
    for (int m = 0; m < 12; ++m) {
      REQUIRE(theta(m) >= 0.0);
      REQUIRE(theta(m) < 2.0 * kPi);
    }
  }
  SECTION("unit vector entries have unit modulus") {
    const Vec u = unit_phases(theta);
    for (int m = 0; m < 12; ++m)
      REQUIRE_THAT(std::abs(u(m)), Catch::Matchers::WithinAbs(1.0, 1e-15));
  }
  SECTION("wrap(unit(theta)) recovers theta") {
    const RealVec back = wrap_phases(unit_phases(theta));
    for (int m = 0; m < 12; ++m)
      REQUIRE_THAT(back(m), Catch::Matchers::WithinAbs(theta(m), 1e-12));
  }
  SECTION("wrapped output is always in [0, 2pi)") {
    Vec u(3);
    u << Complex(1.0, 0.0), Complex(0.0, -1.0), Complex(-1.0, -1e-9);
    const RealVec t = wrap_phases(u);
    for (int m = 0; m < 3; ++m) {
      REQUIRE(t(m) >= 0.0);
      REQUIRE(t(m) < 2.0 * kPi);
    }
  }
}

TEST_CASE("diagonal surface matches the full-matrix machinery") {
  const ChannelSet set = small_set(3, 6, 53);
  const SystemConfig cfg = unit_scale_config(3, 6, 1.0);
  RandomStream rng(55, 0, StreamTag::generic);
  const RealVec theta = random_phases(6, rng);
  const Vec w = uniform_feed(6);

  SECTION("diagonal phase matrix is unitary with the right diagonal") {
    const Mat d = diag_phase_matrix(theta);
    REQUIRE(unitarity_residual(d) <= 1e-12);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        if (i == j)
          REQUIRE_THAT(std::abs(d(i, j) - std::polar(1.0, theta(i))),
                       Catch::Matchers::WithinAbs(0.0, 1e-15));
        else
          REQUIRE(d(i, j) == Complex(0.0, 0.0));
      }
  }
  SECTION("specialized effective gain equals the matrix evaluation") {
    const Mat d = diag_phase_matrix(theta);
    for (int k = 0; k < 3; ++k)
      REQUIRE_THAT(dris_effective_gain(set.h.row(k), theta, w),
                   Catch::Matchers::WithinRel(
                       effective_gain(set.h.row(k), d, w), 1e-12));
  }
  SECTION("specialized link gains equal the matrix evaluation") {
    const LinkGains fast = dris_gains(set, theta, w, cfg);
    const LinkGains ref = compute_gains(set, diag_phase_matrix(theta), w, cfg);
    for (int k = 0; k < 3; ++k) {
      REQUIRE_THAT(fast.a(k), Catch::Matchers::WithinRel(ref.a(k), 1e-12));
      REQUIRE_THAT(fast.b(k), Catch::Matchers::WithinRel(ref.b(k), 1e-12));
      REQUIRE_THAT(fast.c(k), Catch::Matchers::WithinRel(ref.c(k), 1e-12));
    }
  }
  SECTION("dimension mismatch is rejected") {
    REQUIRE_THROWS_AS(dris_effective_gain(set.h.row(0), theta, uniform_feed(5)),
                      std::invalid_argument);
  }
}

TEST_CASE("single-element surface has a phase-independent gain") {
  const ChannelSet set = small_set(2, 1, 57);
  const Vec w = uniform_feed(1);
  RealVec theta(1);
  const double base = [&] {
    theta(0) = 0.0;
    return dris_effective_gain(set.h.row(0), theta, w);
  }();
  for (double t : {0.3, 1.7, 3.9, 5.5}) {
    theta(0) = t;
    REQUIRE_THAT(dris_effective_gain(set.h.row(0), theta, w),
                 Catch::Matchers::WithinRel(base, 1e-12));
  }
}

TEST_CASE("diagonal phase optimizer") {
  SECTION("zero powers converge immediately at the start point") {
    const ChannelSet set = small_set(2, 4, 59);
    const SystemConfig cfg = unit_scale_config(2, 4, 1.0);
    RandomStream rng(61, 0, StreamTag::generic);
    const RealVec theta0 = random_phases(4, rng);
    const RealVec zero = RealVec::Zero(2);
    const DiagOptResult res =
        optimize_diag_phases(set, zero, theta0, uniform_feed(4), cfg);
    REQUIRE(res.converged);
    REQUIRE(res.iterations == 1);
    for (int m = 0; m < 4; ++m)
      REQUIRE_THAT(res.theta(m), Catch::Matchers::WithinAbs(theta0(m), 1e-12));
  }

  SECTION("single user aligns the phases to near-coherent combining") {
    // Real positive direct channel, no leakage, no primary downlink: the
    // optimum is coherent combining with gain (sum_m h_m w_m)^2.
    ChannelSet set;
    set.h.resize(1, 8);
    set.g = Mat::Zero(1, 8);
    set.f = Vec::Zero(1);
    RandomStream rng(63, 0, StreamTag::generic);
    for (int m = 0; m < 8; ++m)
      set.h(0, m) = Complex(0.2 + rng.uniform(0.0, 0.8), 0.0);

    SystemConfig cfg = unit_scale_config(1, 8, 1e9);
    cfg.solver.max_ris_iterations = 500;
    const Vec w = uniform_feed(8);
    double coherent = 0.0;
    for (int m = 0; m < 8; ++m) coherent += std::real(set.h(0, m) * w(m));
    const double best = coherent * coherent;

    RealVec p(1);
    p << 1.0;
    const RealVec theta0 = random_phases(8, rng);
    const DiagOptResult res = optimize_diag_phases(set, p, theta0, w, cfg);
    REQUIRE(dris_effective_gain(set.h.row(0), res.theta, w) >= 0.99 * best);
  }

  SECTION("objective trace is non-decreasing while the penalty is inactive") {
    const ChannelSet set = small_set(2, 6, 65);
    const SystemConfig cfg = unit_scale_config(2, 6, 1e9);
    RandomStream rng(67, 0, StreamTag::generic);
    const RealVec theta0 = random_phases(6, rng);
    RealVec p(2);
    p << 0.6, 0.9;
    const DiagOptResult res =
        optimize_diag_phases(set, p, theta0, uniform_feed(6), cfg);
    REQUIRE(res.trace.size() == static_cast<size_t>(res.iterations));
    for (size_t i = 1; i < res.trace.size(); ++i)
      REQUIRE(res.trace[i].objective >= res.trace[i - 1].objective - 1e-9);
  }

  SECTION("returned phases are unit-modulus by construction") {
    const ChannelSet set = small_set(2, 6, 69);
    const SystemConfig cfg = unit_scale_config(2, 6, 0.05);
    RandomStream rng(71, 0, StreamTag::generic);
    const RealVec theta0 = random_phases(6, rng);
    RealVec p(2);
    p << 0.6, 0.9;
    const DiagOptResult res =
        optimize_diag_phases(set, p, theta0, uniform_feed(6), cfg);
    for (int m = 0; m < 6; ++m) {
      REQUIRE(res.theta(m) >= 0.0);
      REQUIRE(res.theta(m) < 2.0 * kPi);
    }
  }
}
