#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "bdris/common.hpp"

namespace bdris {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

// Dual-variable bisection controls for the power solver.
struct BisectOptions {
  double lambda_tol = 1e-6;  // |p(lambda) - cap| target for the inner loop
  double nu_tol = 1e-6;      // |P(nu) - P_t| target for the outer loop
  int max_iterations = 60;
};

struct SolverOptions {
  int max_ao_iterations = 40;
  int max_ris_iterations = 80;
  double riemannian_step = 0.2;   // eta
  double dual_step = 0.1;         // alpha
  double ao_tolerance = 1e-5;     // on |dp|^2 + |dPhi|_F^2 (strict)
  double ris_tolerance = 1e-5;    // on |Phi_{i+1} - Phi_i|_F inside the phase loop
  double constraint_tol_factor = 1e-6;  // eps_constraint = factor * I_th
  int max_backtracks = 10;
  BisectOptions bisect;
};

struct DistanceRange {
  double min_m = 0.0;
  double max_m = 0.0;
};

// Full scenario description: physical constants, geometry, Monte Carlo
// controls, and solver options.  Powers are stored in watts; the config-file
// surface accepts dBm for the three transmit/noise powers.
struct SystemConfig {
  int num_users = 4;      // K
  int ris_elements = 64;  // M
  int grid_mx = 0;        // 0 = choose the most-square factorization of M
  int grid_my = 0;

  double haps_power_w = dbm_to_watts(35.0);  // P_t
  double noise_w = dbm_to_watts(-90.0);      // sigma^2
  double leo_power_w = dbm_to_watts(40.0);   // Q_p
  double interference_cap_w = 1e-2;          // I_th

  double pathloss_exponent = 2.7;  // beta
  double rician_factor = 10.0;     // K_rice
  double carrier_hz = 2.0e8;       // f_c
  double element_spacing_m = 0.0;  // q; 0 = half wavelength
  double haps_speed_mps = 30.0;
  double leo_speed_mps = 7500.0;
  double block_duration_s = 1e-3;  // T_b

  DistanceRange sut_distance_m{2.0, 3.0};
  DistanceRange put_distance_m{4.0, 6.0};
  DistanceRange leo_distance_m{10.0, 20.0};

  int trials = 1000;
  std::uint64_t seed = 1;
  SolverOptions solver;

  double half_wavelength() const { return kSpeedOfLight / (2.0 * carrier_hz); }

  double eps_constraint() const {
    return solver.constraint_tol_factor * interference_cap_w;
  }

  // Resolve derived defaults (grid factorization, element spacing).
  void finalize() {
    if (grid_mx == 0 && grid_my == 0 && ris_elements >= 1) {
      int d = 1;
      for (int i = 1; i * i <= ris_elements; ++i)
        if (ris_elements % i == 0) d = i;
      grid_my = d;
      grid_mx = ris_elements / d;
    }
    if (element_spacing_m == 0.0 && carrier_hz > 0.0)
      element_spacing_m = half_wavelength();
  }

  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw ConfigError("config invariant violated: " + field + " " + why);
    };
    if (num_users < 1) fail("num_users", "must be >= 1");
    if (ris_elements < 1) fail("ris_elements", "must be >= 1");
    if (grid_mx < 1 || grid_my < 1) fail("grid_mx/grid_my", "must be >= 1");
    if (grid_mx * grid_my != ris_elements)
      fail("grid_mx*grid_my", "must equal ris_elements");
    if (!(haps_power_w > 0.0) || !std::isfinite(haps_power_w))
      fail("haps_power_w", "must be strictly positive and finite");
    if (!(noise_w > 0.0) || !std::isfinite(noise_w))
      fail("noise_w", "must be strictly positive and finite");
    if (!(leo_power_w > 0.0) || !std::isfinite(leo_power_w))
      fail("leo_power_w", "must be strictly positive and finite");
    if (!(interference_cap_w > 0.0) || !std::isfinite(interference_cap_w))
      fail("interference_cap_w", "must be strictly positive and finite");
    if (pathloss_exponent < 2.0 || pathloss_exponent > 4.0)
      fail("pathloss_exponent", "must lie in [2, 4]");
    if (rician_factor < 0.0) fail("rician_factor", "must be >= 0");
    if (!(carrier_hz > 0.0)) fail("carrier_hz", "must be strictly positive");
    if (element_spacing_m > half_wavelength() * (1.0 + 1e-12))
      fail("element_spacing_m", "must be <= half wavelength c/(2*carrier_hz)");
    if (!(element_spacing_m > 0.0))
      fail("element_spacing_m", "must be strictly positive");
    if (haps_speed_mps < 0.0) fail("haps_speed_mps", "must be >= 0");
    if (leo_speed_mps < 0.0) fail("leo_speed_mps", "must be >= 0");
    if (!(block_duration_s > 0.0)) fail("block_duration_s", "must be > 0");
    for (auto [name, r] : {std::pair<const char*, DistanceRange>{"sut_distance", sut_distance_m},
                           {"put_distance", put_distance_m},
                           {"leo_distance", leo_distance_m}}) {
      if (!(r.min_m > 0.0)) fail(name, "range lower bound must be positive");
      if (r.max_m < r.min_m) fail(name, "range must satisfy min <= max");
    }
    if (trials < 1) fail("trials", "must be >= 1");
    if (solver.max_ao_iterations < 1) fail("max_ao_iterations", "must be >= 1");
    if (solver.max_ris_iterations < 1) fail("max_ris_iterations", "must be >= 1");
    if (!(solver.riemannian_step > 0.0)) fail("riemannian_step", "must be > 0");
    if (!(solver.dual_step > 0.0)) fail("dual_step", "must be > 0");
    if (!(solver.ao_tolerance > 0.0)) fail("ao_tolerance", "must be > 0");
    if (!(solver.ris_tolerance > 0.0)) fail("ris_tolerance", "must be > 0");
    if (!(solver.constraint_tol_factor > 0.0))
      fail("constraint_tol_factor", "must be > 0");
    if (solver.max_backtracks < 0) fail("max_backtracks", "must be >= 0");
    if (!(solver.bisect.lambda_tol > 0.0)) fail("bisect_lambda_tol", "must be > 0");
    if (!(solver.bisect.nu_tol > 0.0)) fail("bisect_nu_tol", "must be > 0");
    if (solver.bisect.max_iterations < 1)
      fail("max_bisect_iterations", "must be >= 1");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double parse_double(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": cannot parse '" + v + "' as a number");
  }
  if (pos != v.size())
    throw ConfigError(where + ": trailing characters in number '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": cannot parse '" + v + "' as an integer");
  }
  if (pos != v.size())
    throw ConfigError(where + ": trailing characters in integer '" + v + "'");
  return x;
}

inline std::uint64_t parse_uint64(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &pos);
  } catch (const std::exception&) {
    throw ConfigError(where + ": cannot parse '" + v + "' as an unsigned integer");
  }
  if (pos != v.size())
    throw ConfigError(where + ": trailing characters in integer '" + v + "'");
  return static_cast<std::uint64_t>(x);
}

}  // namespace detail

// Apply one key=value pair.  `where` prefixes error messages (file:line).
inline void apply_config_key(SystemConfig& cfg, const std::string& key,
                             const std::string& value, const std::string& where) {
  using detail::parse_double;
  using detail::parse_int;
  using detail::parse_uint64;
  auto as_int = [&](int lo = std::numeric_limits<int>::min()) {
    long long x = parse_int(value, where);
    if (x < lo || x > std::numeric_limits<int>::max())
      throw ConfigError(where + ": value out of range for " + key);
    return static_cast<int>(x);
  };
  if (key == "num_users") cfg.num_users = as_int();
  else if (key == "ris_elements") cfg.ris_elements = as_int();
  else if (key == "grid_mx") cfg.grid_mx = as_int();
  else if (key == "grid_my") cfg.grid_my = as_int();
  else if (key == "haps_power_dbm") cfg.haps_power_w = dbm_to_watts(parse_double(value, where));
  else if (key == "noise_dbm") cfg.noise_w = dbm_to_watts(parse_double(value, where));
  else if (key == "leo_power_dbm") cfg.leo_power_w = dbm_to_watts(parse_double(value, where));
  else if (key == "interference_cap_w" || key == "interference_cap_W")
    cfg.interference_cap_w = parse_double(value, where);
  else if (key == "pathloss_exponent") cfg.pathloss_exponent = parse_double(value, where);
  else if (key == "rician_factor") cfg.rician_factor = parse_double(value, where);
  else if (key == "carrier_hz") cfg.carrier_hz = parse_double(value, where);
  else if (key == "element_spacing_m") cfg.element_spacing_m = parse_double(value, where);
  else if (key == "haps_speed_mps") cfg.haps_speed_mps = parse_double(value, where);
  else if (key == "leo_speed_mps") cfg.leo_speed_mps = parse_double(value, where);
  else if (key == "block_duration_s") cfg.block_duration_s = parse_double(value, where);
  else if (key == "sut_distance_min_m") cfg.sut_distance_m.min_m = parse_double(value, where);
  else if (key == "sut_distance_max_m") cfg.sut_distance_m.max_m = parse_double(value, where);
  else if (key == "put_distance_min_m") cfg.put_distance_m.min_m = parse_double(value, where);
  else if (key == "put_distance_max_m") cfg.put_distance_m.max_m = parse_double(value, where);
  else if (key == "leo_distance_min_m") cfg.leo_distance_m.min_m = parse_double(value, where);
  else if (key == "leo_distance_max_m") cfg.leo_distance_m.max_m = parse_double(value, where);
  else if (key == "trials") cfg.trials = as_int();
  else if (key == "seed") cfg.seed = parse_uint64(value, where);
  else if (key == "max_ao_iterations") cfg.solver.max_ao_iterations = as_int();
  else if (key == "max_ris_iterations") cfg.solver.max_ris_iterations = as_int();
  else if (key == "riemannian_step") cfg.solver.riemannian_step = parse_double(value, where);
  else if (key == "dual_step") cfg.solver.dual_step = parse_double(value, where);
  else if (key == "ao_tolerance") cfg.solver.ao_tolerance = parse_double(value, where);
  else if (key == "ris_tolerance") cfg.solver.ris_tolerance = parse_double(value, where);
  else if (key == "constraint_tol_factor")
    cfg.solver.constraint_tol_factor = parse_double(value, where);
  else if (key == "max_backtracks") cfg.solver.max_backtracks = as_int(0);
  else if (key == "bisect_lambda_tol") cfg.solver.bisect.lambda_tol = parse_double(value, where);
  else if (key == "bisect_nu_tol") cfg.solver.bisect.nu_tol = parse_double(value, where);
  else if (key == "max_bisect_iterations") cfg.solver.bisect.max_iterations = as_int();
  else throw ConfigError(where + ": unknown key '" + key + "'");
}

// Parse a flat key=value stream.  Blank lines and '#' comments are ignored.
inline SystemConfig parse_config(std::istream& in, const std::string& origin) {
  SystemConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected 'key = value', got '" + s + "'");
    std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    apply_config_key(cfg, key, value, where);
  }
  cfg.finalize();
  cfg.validate();
  return cfg;
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, path);
}

// A default-constructed config, finalized and validated.
inline SystemConfig default_config() {
  SystemConfig cfg;
  cfg.finalize();
  cfg.validate();
  return cfg;
}

}  // namespace bdris
