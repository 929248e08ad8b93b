#pragma once

#include <cmath>
#include <cstdint>

#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/rng.hpp"

namespace bdris {

// One link's random geometry: distance, arrival angles, and the Doppler
// shift induced by the transmitter/platform motion along that bearing.
struct GeometryDraw {
  double distance_m = 1.0;
  double elevation_rad = 0.0;  // theta in [0, pi/2]
  double azimuth_rad = 0.0;    // phi in [0, 2*pi)
  double doppler_hz = 0.0;
};

// All fading realizations of one block: K secondary user vectors (rows of
// `h`), K primary user vectors (rows of `g`), K primary-downlink scalars `f`.
struct ChannelSet {
  Mat h;  // K x M
  Mat g;  // K x M
  Vec f;  // K
  int block_index = 1;

  int num_users() const { return static_cast<int>(h.rows()); }
  int num_elements() const { return static_cast<int>(h.cols()); }
};

// Free-space reference gain at 1 m:  (c / (4*pi*f_c))^2.
inline double reference_gain(double carrier_hz) {
  const double x = kSpeedOfLight / (4.0 * kPi * carrier_hz);
  return x * x;
}

// Distance-dependent channel gain  reference_gain / d^beta.
inline double path_gain(double distance_m, double exponent, double carrier_hz) {
  if (distance_m < 1.0)
    throw std::invalid_argument(
        "path_gain: distance below the 1 m reference distance");
  return reference_gain(carrier_hz) / std::pow(distance_m, exponent);
}

// Doppler shift v * f_c * cos(theta) / c.
inline double doppler_shift(double speed_mps, double carrier_hz, double theta_rad) {
  return speed_mps * carrier_hz * std::cos(theta_rad) / kSpeedOfLight;
}

// Uniform-planar-array steering vector: Kronecker product of the two axis
// responses, entries exp(-j * delta * sin(theta) * {cos,sin}(phi) * index)
// with delta = 2*pi*f_c*q/c.
inline Vec upa_steering(double theta_rad, double phi_rad, int mx, int my,
                        double spacing_m, double carrier_hz) {
  if (mx < 1 || my < 1)
    throw std::invalid_argument("upa_steering: grid dimensions must be >= 1");
  const double delta = 2.0 * kPi * carrier_hz * spacing_m / kSpeedOfLight;
  const double sx = delta * std::sin(theta_rad) * std::cos(phi_rad);
  const double sy = delta * std::sin(theta_rad) * std::sin(phi_rad);
  Vec ax(mx), ay(my);
  for (int m = 0; m < mx; ++m) ax(m) = std::polar(1.0, -sx * m);
  for (int n = 0; n < my; ++n) ay(n) = std::polar(1.0, -sy * n);
  Vec a(mx * my);
  for (int m = 0; m < mx; ++m)
    for (int n = 0; n < my; ++n) a(m * my + n) = ax(m) * ay(n);
  return a;
}

// LoS component: steering vector rotated by the Doppler phase accumulated
// over t blocks of duration T_b.
inline Vec los_component(const Vec& steering, double doppler_hz, int block_index,
                         double block_duration_s) {
  const double phase = 2.0 * kPi * doppler_hz * block_index * block_duration_s;
  return steering * std::polar(1.0, phase);
}

// Rician mixture scaled by the root path gain:
//   sqrt(gain) * ( sqrt(K/(K+1)) * los + sqrt(1/(K+1)) * nlos ),
// nlos ~ i.i.d. CN(0,1) per element, drawn fresh from `rng`.
inline Vec rician_vector(const Vec& los, double gain, double k_rice,
                         RandomStream& rng) {
  if (k_rice < 0.0)
    throw std::invalid_argument("rician_vector: Rician factor must be >= 0");
  const double los_scale = std::sqrt(gain * k_rice / (k_rice + 1.0));
  const double nlos_scale = std::sqrt(gain / (k_rice + 1.0));
  Vec out(los.size());
  for (Eigen::Index i = 0; i < los.size(); ++i)
    out(i) = los_scale * los(i) + nlos_scale * rng.cnormal();
  return out;
}

namespace detail {

inline GeometryDraw draw_geometry(const DistanceRange& range, double speed_mps,
                                  double carrier_hz, RandomStream& rng) {
  GeometryDraw geo;
  geo.distance_m = rng.uniform(range.min_m, range.max_m);
  geo.elevation_rad = rng.uniform(0.0, kPi / 3.0);
  geo.azimuth_rad = rng.uniform(0.0, 2.0 * kPi);
  geo.doppler_hz = doppler_shift(speed_mps, carrier_hz, geo.elevation_rad);
  return geo;
}

}  // namespace detail

// Generate the complete channel set for (seed, trial, block).  Geometry is
// drawn from a block-independent stream so user positions stay fixed across
// blocks of one trial; scattered components are redrawn every block.  The
// stream is architecture-independent: both architectures see identical
// channels for a given (seed, trial, block).
inline ChannelSet generate_channel_set(const SystemConfig& cfg, std::uint64_t seed,
                                       std::uint64_t trial, int block_index = 1) {
  const int k_users = cfg.num_users;
  const int m = cfg.ris_elements;
  ChannelSet set;
  set.h.resize(k_users, m);
  set.g.resize(k_users, m);
  set.f.resize(k_users);
  set.block_index = block_index;

  RandomStream geo_rng(seed, trial, StreamTag::channel, 0);
  RandomStream fade_rng(seed, trial, StreamTag::channel,
                        static_cast<std::uint64_t>(block_index));

  for (int k = 0; k < k_users; ++k) {
    const GeometryDraw sut = detail::draw_geometry(cfg.sut_distance_m,
                                                   cfg.haps_speed_mps,
                                                   cfg.carrier_hz, geo_rng);
    const GeometryDraw put = detail::draw_geometry(cfg.put_distance_m,
                                                   cfg.haps_speed_mps,
                                                   cfg.carrier_hz, geo_rng);
    const GeometryDraw leo = detail::draw_geometry(cfg.leo_distance_m,
                                                   cfg.leo_speed_mps,
                                                   cfg.carrier_hz, geo_rng);

    const Vec sut_los = los_component(
        upa_steering(sut.elevation_rad, sut.azimuth_rad, cfg.grid_mx, cfg.grid_my,
                     cfg.element_spacing_m, cfg.carrier_hz),
        sut.doppler_hz, block_index, cfg.block_duration_s);
    const Vec put_los = los_component(
        upa_steering(put.elevation_rad, put.azimuth_rad, cfg.grid_mx, cfg.grid_my,
                     cfg.element_spacing_m, cfg.carrier_hz),
        put.doppler_hz, block_index, cfg.block_duration_s);
    // Single-antenna LEO downlink: the LoS part is the pure Doppler phase.
    Vec leo_los(1);
    leo_los(0) = 1.0;
    leo_los = los_component(leo_los, leo.doppler_hz, block_index,
                            cfg.block_duration_s);

    set.h.row(k) = rician_vector(
        sut_los, path_gain(sut.distance_m, cfg.pathloss_exponent, cfg.carrier_hz),
        cfg.rician_factor, fade_rng).transpose();
    set.g.row(k) = rician_vector(
        put_los, path_gain(put.distance_m, cfg.pathloss_exponent, cfg.carrier_hz),
        cfg.rician_factor, fade_rng).transpose();
    set.f(k) = rician_vector(
        leo_los, path_gain(leo.distance_m, cfg.pathloss_exponent, cfg.carrier_hz),
        cfg.rician_factor, fade_rng)(0);
  }
  return set;
}

}  // namespace bdris
