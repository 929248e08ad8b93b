#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "bdris/ao.hpp"
#include "bdris/channel.hpp"
#include "bdris/common.hpp"
#include "bdris/config.hpp"
#include "bdris/link_metrics.hpp"
#include "bdris/manifold.hpp"
#include "bdris/rng.hpp"

namespace bdris {

enum class Architecture { bdris, dris };

inline const char* architecture_name(Architecture a) {
  return a == Architecture::bdris ? "bdris" : "dris";
}

inline Architecture parse_architecture(const std::string& s) {
  if (s == "bdris") return Architecture::bdris;
  if (s == "dris") return Architecture::dris;
  throw ConfigError("unknown architecture '" + s + "' (expected bdris or dris)");
}

// FNV-1a 64-bit over the raw bytes of every channel coefficient, in a fixed
// traversal order; used to certify that matched trials saw identical fading.
inline std::uint64_t channel_hash(const ChannelSet& set) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix_double = [&h](double x) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffull;
      h *= 1099511628211ull;
    }
  };
  auto mix_matrix = [&](const Mat& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        mix_double(m(r, c).real());
        mix_double(m(r, c).imag());
      }
  };
  mix_matrix(set.h);
  mix_matrix(set.g);
  for (Eigen::Index k = 0; k < set.f.size(); ++k) {
    mix_double(set.f(k).real());
    mix_double(set.f(k).imag());
  }
  return h;
}

struct TrialRecord {
  std::uint64_t trial = 0;
  double point = 0.0;  // swept value (0 outside sweeps)
  Architecture architecture = Architecture::bdris;
  double asr_bps_hz = 0.0;
  int iterations = 0;
  bool converged = false;
  double max_interference_w = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t channel_hash = 0;
};

// One Monte Carlo trial: channels from the architecture-independent stream,
// initial phases from an architecture-specific stream, then the full AO.
// Solver failures surface as converged=false records, not process failures.
inline TrialRecord run_trial(const SystemConfig& cfg, std::uint64_t trial,
                             Architecture arch, double point = 0.0) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.trial = trial;
  rec.point = point;
  rec.architecture = arch;

  const ChannelSet set = generate_channel_set(cfg, cfg.seed, trial, 1);
  rec.channel_hash = bdris::channel_hash(set);
  const Vec w = uniform_feed(cfg.ris_elements);

  try {
    Solution sol;
    if (arch == Architecture::bdris) {
      RandomStream init_rng(cfg.seed, trial, StreamTag::bdris_init);
      sol = alternate(cfg, set, w, random_unitary(cfg.ris_elements, init_rng));
    } else {
      RandomStream init_rng(cfg.seed, trial, StreamTag::dris_init);
      sol = alternate_dris(cfg, set, w, random_phases(cfg.ris_elements, init_rng));
    }
    rec.asr_bps_hz = sol.asr;
    rec.iterations = sol.iterations_used;
    rec.converged = sol.converged;
    rec.max_interference_w =
        sol.interference.size() > 0 ? sol.interference.maxCoeff() : 0.0;
  } catch (const SolverError&) {
    rec.asr_bps_hz = 0.0;
    rec.iterations = 0;
    rec.converged = false;
    rec.max_interference_w = 0.0;
  }

  rec.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rec;
}

namespace detail {

struct TrialTask {
  SystemConfig cfg;
  std::uint64_t trial;
  Architecture arch;
  double point;
};

inline std::vector<TrialRecord> run_tasks(const std::vector<TrialTask>& tasks,
                                          int jobs) {
  std::vector<TrialRecord> records(tasks.size());
  if (jobs <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    jobs = hc > 0 ? static_cast<int>(hc) : 1;
  }
  jobs = static_cast<int>(std::min<std::size_t>(jobs, tasks.size()));

  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i)
      records[i] = run_trial(tasks[i].cfg, tasks[i].trial, tasks[i].arch,
                             tasks[i].point);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        records[i] = run_trial(tasks[i].cfg, tasks[i].trial, tasks[i].arch,
                               tasks[i].point);
      }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

}  // namespace detail

// Monte Carlo trials at a fixed operating point (point column reads 0).
// Record order is deterministic: architecture-major, then trial index.
inline std::vector<TrialRecord> run_trials(const SystemConfig& cfg, int trials,
                                           const std::vector<Architecture>& archs,
                                           int jobs = 0) {
  cfg.validate();
  if (trials <= 0) throw ConfigError("run_trials: trials must be positive");
  if (archs.empty())
    throw ConfigError("run_trials: architectures must be non-empty");
  std::vector<detail::TrialTask> tasks;
  tasks.reserve(archs.size() * static_cast<std::size_t>(trials));
  for (Architecture arch : archs)
    for (int t = 0; t < trials; ++t)
      tasks.push_back({cfg, static_cast<std::uint64_t>(t), arch, 0.0});
  return detail::run_tasks(tasks, jobs);
}

struct SweepSpec {
  std::string variable;  // haps_power_dbm | ris_elements | num_users | interference_cap_W
  std::vector<double> values;
  int trials_per_point = 0;  // 0 = use cfg.trials
  std::vector<Architecture> architectures{Architecture::bdris, Architecture::dris};

  void validate() const {
    if (values.empty()) throw ConfigError("sweep: values must be non-empty");
    if (architectures.empty())
      throw ConfigError("sweep: architectures must be non-empty");
    if (variable != "haps_power_dbm" && variable != "ris_elements" &&
        variable != "num_users" && variable != "interference_cap_W")
      throw ConfigError("sweep: unknown variable '" + variable + "'");
  }
};

// Produce the config for one sweep point.
inline SystemConfig apply_sweep_value(const SystemConfig& base,
                                      const std::string& variable, double value) {
  SystemConfig cfg = base;
  auto as_count = [&](const char* what) {
    const double r = std::round(value);
    if (std::abs(value - r) > 1e-9 || r < 1.0)
      throw ConfigError(std::string("sweep: ") + what +
                        " requires a positive integer value");
    return static_cast<int>(r);
  };
  if (variable == "haps_power_dbm") {
    cfg.haps_power_w = dbm_to_watts(value);
  } else if (variable == "ris_elements") {
    cfg.ris_elements = as_count("ris_elements");
    cfg.grid_mx = cfg.grid_my = 0;  // re-derive the grid factorization
  } else if (variable == "num_users") {
    cfg.num_users = as_count("num_users");
  } else if (variable == "interference_cap_W") {
    cfg.interference_cap_w = value;
  } else {
    throw ConfigError("sweep: unknown variable '" + variable + "'");
  }
  cfg.finalize();
  cfg.validate();
  return cfg;
}

// Cartesian product (values x architectures x trials), executed by a worker
// pool and emitted in deterministic (point, architecture, trial) order.
// Matched (point, trial) pairs across architectures share one channel set.
inline std::vector<TrialRecord> run_sweep(const SystemConfig& base,
                                          const SweepSpec& spec, int jobs = 0) {
  spec.validate();
  base.validate();
  const int trials = spec.trials_per_point > 0 ? spec.trials_per_point : base.trials;

  std::vector<detail::TrialTask> tasks;
  std::vector<SystemConfig> point_cfgs;
  point_cfgs.reserve(spec.values.size());
  for (double value : spec.values)
    point_cfgs.push_back(apply_sweep_value(base, spec.variable, value));
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
    for (Architecture arch : spec.architectures)
      for (int t = 0; t < trials; ++t)
        tasks.push_back({point_cfgs[vi], static_cast<std::uint64_t>(t), arch,
                         spec.values[vi]});
  return detail::run_tasks(tasks, jobs);
}

namespace detail {

inline std::string format_g12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string format_hash(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

inline const char* csv_header() {
  return "trial,point,architecture,asr_bps_hz,iterations,converged,"
         "max_interference_w,wall_time_s,channel_hash";
}

inline void emit_csv(const std::vector<TrialRecord>& records, std::ostream& out) {
  out << csv_header() << '\n';
  for (const TrialRecord& r : records) {
    out << r.trial << ',' << detail::format_g12(r.point) << ','
        << architecture_name(r.architecture) << ','
        << detail::format_g12(r.asr_bps_hz) << ',' << r.iterations << ','
        << (r.converged ? "true" : "false") << ','
        << detail::format_g12(r.max_interference_w) << ','
        << detail::format_g12(r.wall_time_s) << ','
        << detail::format_hash(r.channel_hash) << '\n';
  }
}

inline void emit_csv(const std::vector<TrialRecord>& records,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  emit_csv(records, out);
  out.flush();
  if (!out) throw std::runtime_error("emit_csv: write failure on " + path);
}

// Parse a CSV produced by emit_csv back into records (text-level inverse).
inline std::vector<TrialRecord> parse_csv(std::istream& in) {
  std::vector<TrialRecord> records;
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("parse_csv: empty input");
  if (line != csv_header())
    throw std::runtime_error("parse_csv: unexpected header: " + line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 9)
      throw std::runtime_error("parse_csv: expected 9 columns, got " +
                               std::to_string(fields.size()));
    TrialRecord r;
    r.trial = std::stoull(fields[0]);
    r.point = std::stod(fields[1]);
    r.architecture = parse_architecture(fields[2]);
    r.asr_bps_hz = std::stod(fields[3]);
    r.iterations = std::stoi(fields[4]);
    if (fields[5] == "true") r.converged = true;
    else if (fields[5] == "false") r.converged = false;
    else throw std::runtime_error("parse_csv: bad converged flag " + fields[5]);
    r.max_interference_w = std::stod(fields[6]);
    r.wall_time_s = std::stod(fields[7]);
    r.channel_hash = std::stoull(fields[8], nullptr, 16);
    records.push_back(r);
  }
  return records;
}

}  // namespace bdris
