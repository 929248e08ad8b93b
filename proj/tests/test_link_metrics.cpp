#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bdris/channel.hpp"
#include "bdris/config.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/manifold.hpp"
#include "oracles.hpp"

using namespace bdris;

namespace {

Mat random_complex_matrix(int rows, int cols, RandomStream& rng) {
  Mat z(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) z(i, j) = rng.cnormal();
  return z;
}

}  // namespace

TEST_CASE("uniform feed is unit norm") {
  const Vec w = uniform_feed(16);
  REQUIRE_THAT(w.norm(), Catch::Matchers::WithinRel(1.0, 1e-14));
  REQUIRE_THROWS_AS(uniform_feed(0), std::invalid_argument);
}

TEST_CASE("effective gain reference points") {
  RandomStream rng(21, 0, StreamTag::generic);
  const int m = 6;

  SECTION("identity surface with a basis feed selects one coefficient") {
    Eigen::RowVectorXcd h(m);
    for (int i = 0; i < m; ++i) h(i) = rng.cnormal();
    Vec e1 = Vec::Zero(m);
    e1(0) = 1.0;
    REQUIRE_THAT(effective_gain(h, Mat::Identity(m, m), e1),
                 Catch::Matchers::WithinRel(std::norm(h(0)), 1e-13));
  }
  SECTION("zero channel gives zero gain") {
    Eigen::RowVectorXcd h = Eigen::RowVectorXcd::Zero(m);
    const Mat phi = random_unitary(m, rng);
    REQUIRE(effective_gain(h, phi, uniform_feed(m)) == 0.0);
  }
  SECTION("matches naive triple-loop summation") {
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::RowVectorXcd h(m);
      for (int i = 0; i < m; ++i) h(i) = rng.cnormal();
      const Mat phi = random_complex_matrix(m, m, rng);
      Vec w(m);
      for (int i = 0; i < m; ++i) w(i) = rng.cnormal();
      const double fast = effective_gain(h, phi, w);
      const double naive = oracles::naive_effective_gain(h, phi, w);
      REQUIRE_THAT(fast, Catch::Matchers::WithinRel(naive, 1e-12));
    }
  }
  SECTION("dimension mismatch is rejected") {
    Eigen::RowVectorXcd h(m);
    h.setZero();
    REQUIRE_THROWS_AS(
        effective_gain(h, Mat::Identity(m + 1, m + 1), uniform_feed(m + 1)),
        std::invalid_argument);
  }
}

TEST_CASE("gain assembly from channels") {
  SystemConfig cfg = default_config();
  cfg.num_users = 2;
  cfg.ris_elements = 8;
  cfg.grid_mx = 4;
  cfg.grid_my = 2;
  RandomStream rng(31, 0, StreamTag::generic);
  const ChannelSet set = generate_channel_set(cfg, 5, 0, 1);
  const Vec w = uniform_feed(8);
  const Mat phi = random_unitary(8, rng);

  SECTION("matches per-user recomputation") {
    const LinkGains gains = compute_gains(set, phi, w, cfg);
    for (int k = 0; k < 2; ++k) {
      REQUIRE_THAT(gains.a(k), Catch::Matchers::WithinRel(
                                   effective_gain(set.h.row(k), phi, w), 1e-13));
      REQUIRE_THAT(gains.c(k), Catch::Matchers::WithinRel(
                                   effective_gain(set.g.row(k), phi, w), 1e-13));
      const double b =
          cfg.noise_w + std::norm(set.f(k)) * cfg.leo_power_w / 2.0;
      REQUIRE_THAT(gains.b(k), Catch::Matchers::WithinRel(b, 1e-13));
      REQUIRE(gains.a(k) >= 0.0);
      REQUIRE(gains.c(k) >= 0.0);
      REQUIRE(gains.b(k) >= cfg.noise_w);
    }
  }
  SECTION("no primary downlink leaves only the noise floor") {
    ChannelSet quiet = set;
    quiet.f.setZero();
    const LinkGains gains = compute_gains(quiet, phi, w, cfg);
    for (int k = 0; k < 2; ++k) REQUIRE(gains.b(k) == cfg.noise_w);
  }
  SECTION("single-user interference floor: direct substitution") {
    SystemConfig one = cfg;
    one.num_users = 1;
    one.leo_power_w = 10.0;
    one.noise_w = 1e-12;
    ChannelSet tiny;
    tiny.h.resize(1, 8);
    tiny.h.setConstant(Complex(1.0, 0.0));
    tiny.g.resize(1, 8);
    tiny.g.setConstant(Complex(0.0, 0.0));
    tiny.f.resize(1);
    tiny.f(0) = Complex(1e-6, 0.0);  // |f|^2 = 1e-12
    const LinkGains gains = compute_gains(tiny, Mat::Identity(8, 8), w, one);
    REQUIRE_THAT(gains.b(0), Catch::Matchers::WithinRel(1.1e-11, 1e-12));
  }
  SECTION("gains are invariant to a global phase rotation of the surface") {
    const LinkGains base = compute_gains(set, phi, w, cfg);
    const Mat rotated = std::polar(1.0, 1.23) * phi;
    const LinkGains rot = compute_gains(set, rotated, w, cfg);
    for (int k = 0; k < 2; ++k) {
      REQUIRE_THAT(rot.a(k), Catch::Matchers::WithinRel(base.a(k), 1e-12));
      REQUIRE_THAT(rot.c(k), Catch::Matchers::WithinRel(base.c(k), 1e-12));
    }
  }
  SECTION("unitary surfaces respect the Cauchy-Schwarz gain bound") {
    for (int rep = 0; rep < 10; ++rep) {
      const Mat u = random_unitary(8, rng);
      const double bound = set.h.row(0).squaredNorm() * w.squaredNorm();
      REQUIRE(effective_gain(set.h.row(0), u, w) <= bound * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("scalar SINR reference points") {
  REQUIRE(sinr(1.0, 2.0, 0.0) == 0.0);
  REQUIRE_THAT(sinr(3.0, 3.0, 1.0), Catch::Matchers::WithinRel(1.0, 1e-15));
  REQUIRE_THAT(sinr(2.0, 4.0, 3.0), Catch::Matchers::WithinRel(1.5, 1e-15));
  REQUIRE_THROWS_AS(sinr(1.0, 1.0, -0.1), std::invalid_argument);
}

TEST_CASE("sum rate reference points") {
  LinkGains gains;
  gains.a.resize(2);
  gains.b.resize(2);
  gains.c.resize(2);
  gains.a << 1.0, 1.0;
  gains.b << 1.0, 1.0;
  gains.c << 0.0, 0.0;

  RealVec zero = RealVec::Zero(2);
  REQUIRE(sum_rate(gains, zero) == 0.0);

  RealVec p(2);
  p << 1.0, 3.0;  // SINRs 1 and 3 -> 1 + 2 bits/s/Hz
  REQUIRE_THAT(sum_rate(gains, p), Catch::Matchers::WithinRel(3.0, 1e-14));

  LinkGains one;
  one.a.resize(1);
  one.b.resize(1);
  one.c.resize(1);
  one.a << 5.0;
  one.b << 5.0;
  one.c << 0.0;
  RealVec p1(1);
  p1 << 1.0;
  REQUIRE_THAT(sum_rate(one, p1), Catch::Matchers::WithinRel(1.0, 1e-14));

  SECTION("strictly increasing in each user's power") {
    RealVec bigger = p;
    bigger(0) += 0.5;
    REQUIRE(sum_rate(gains, bigger) > sum_rate(gains, p));
  }
  SECTION("dimension mismatch is rejected") {
    RealVec wrong = RealVec::Zero(3);
    REQUIRE_THROWS_AS(sum_rate(gains, wrong), std::invalid_argument);
  }
}

TEST_CASE("interference products and aggregate slack") {
  REQUIRE(interference_at_put(1e-3, 0.0) == 0.0);
  REQUIRE_THAT(interference_at_put(1e-3, 10.0),
               Catch::Matchers::WithinRel(1e-2, 1e-15));
  RandomStream rng(41, 0, StreamTag::generic);
  for (int rep = 0; rep < 10; ++rep) {
    const double c = rng.uniform(0.0, 2.0), p = rng.uniform(0.0, 2.0);
    REQUIRE(interference_at_put(c, p) == c * p);
  }

  LinkGains gains;
  gains.a.resize(2);
  gains.b.resize(2);
  gains.c.resize(2);
  gains.a << 1.0, 1.0;
  gains.b << 1.0, 1.0;
  gains.c << 0.25, 0.5;
  RealVec p(2);
  p << 2.0, 1.0;  // total coupled power 0.5 + 0.5 = 1.0
  REQUIRE_THAT(interference_excess(gains, p, 0.75),
               Catch::Matchers::WithinRel(0.25, 1e-13));
  REQUIRE_THAT(interference_excess(gains, p, 1.25),
               Catch::Matchers::WithinRel(-0.25, 1e-13));
}
