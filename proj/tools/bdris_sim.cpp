// Command-line front end for the BD-RIS spectrum-sharing simulator.
//
//   bdris_sim run   [--config F] [--seed S] [--trials N] [--arch A] [--out F]
//   bdris_sim sweep --var V --values a,b,c [--trials N] [--arch A] [--jobs J]
//   bdris_sim trace [--trial T] [--arch A] [--out F]
//
// run   : Monte Carlo trials at a fixed operating point (CSV per trial).
// sweep : Monte Carlo trials over a swept system variable (CSV per trial).
// trace : per-iteration diagnostics of the alternating optimizer for one trial.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdris/bdris.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;
};

bdris::SystemConfig load_base_config(const CommonArgs& args) {
  bdris::SystemConfig cfg = args.config_path.empty()
                                ? bdris::default_config()
                                : bdris::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

// Stream sink: --out path, or stdout when omitted.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw std::runtime_error("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }
  void finish() {
    if (file_) {
      file_->flush();
      if (!*file_) throw std::runtime_error("write failure on output file");
    }
  }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::vector<bdris::Architecture> parse_arch_list(const std::string& arch) {
  if (arch == "both")
    return {bdris::Architecture::bdris, bdris::Architecture::dris};
  return {bdris::parse_architecture(arch)};
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path,
                  "Path to key=value config file (defaults used when omitted)");
  sub->add_option("--seed", args.seed, "Override the base RNG seed")
      ->each([&args](const std::string&) { args.seed_set = true; });
  sub->add_option("--out", args.out_path, "Output CSV path (stdout if omitted)");
  sub->add_option("--jobs", args.jobs,
                  "Worker threads (0 = hardware concurrency)");
}

int cmd_run(const CommonArgs& args, int trials, const std::string& arch) {
  bdris::SystemConfig cfg = load_base_config(args);
  if (trials > 0) cfg.trials = trials;
  cfg.validate();

  std::vector<bdris::TrialRecord> records =
      bdris::run_trials(cfg, cfg.trials, parse_arch_list(arch), args.jobs);

  OutputSink sink(args.out_path);
  bdris::emit_csv(records, sink.stream());
  sink.finish();
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& var,
              const std::vector<double>& values, int trials,
              const std::string& arch) {
  bdris::SystemConfig cfg = load_base_config(args);
  bdris::SweepSpec spec;
  spec.variable = var;
  spec.values = values;
  spec.trials_per_point = trials;
  spec.architectures = parse_arch_list(arch);
  spec.validate();

  std::vector<bdris::TrialRecord> records =
      bdris::run_sweep(cfg, spec, args.jobs);

  OutputSink sink(args.out_path);
  bdris::emit_csv(records, sink.stream());
  sink.finish();

  std::cerr << "sweep: " << var << " over " << values.size() << " points, "
            << records.size() << " records\n";
  return 0;
}

int cmd_trace(const CommonArgs& args, std::uint64_t trial,
              const std::string& arch) {
  bdris::SystemConfig cfg = load_base_config(args);
  cfg.validate();
  const bdris::Architecture a = bdris::parse_architecture(arch);

  const bdris::ChannelSet set =
      bdris::generate_channel_set(cfg, cfg.seed, trial, 1);
  const bdris::Vec w = bdris::uniform_feed(cfg.ris_elements);

  bdris::Solution sol;
  if (a == bdris::Architecture::bdris) {
    bdris::RandomStream init(cfg.seed, trial, bdris::StreamTag::bdris_init);
    sol = bdris::alternate(cfg, set, w,
                           bdris::random_unitary(cfg.ris_elements, init));
  } else {
    bdris::RandomStream init(cfg.seed, trial, bdris::StreamTag::dris_init);
    sol = bdris::alternate_dris(cfg, set, w,
                                bdris::random_phases(cfg.ris_elements, init));
  }

  OutputSink sink(args.out_path);
  std::ostream& out = sink.stream();
  out << "iteration,asr_before_power,asr_after_power,delta_p_sq,delta_phi_sq,"
         "slack,phase_iterations,phase_converged\n";
  char buf[256];
  for (std::size_t i = 0; i < sol.trace.size(); ++i) {
    const bdris::AoIterTrace& tr = sol.trace[i];
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%s\n",
                  i + 1, tr.asr_before_power, tr.asr_after_power, tr.delta_p_sq,
                  tr.delta_phi_sq, tr.slack, tr.phase_iterations,
                  tr.phase_converged ? "true" : "false");
    out << buf;
  }
  sink.finish();

  std::cerr << "trace: trial " << trial << " (" << arch << ") finished in "
            << sol.iterations_used << " iterations, converged="
            << (sol.converged ? "true" : "false") << ", asr=" << sol.asr
            << " bps/Hz, final slack=" << sol.final_slack << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BD-RIS spectrum-sharing simulator"};
  app.require_subcommand(1);

  CommonArgs run_args, sweep_args, trace_args;
  int run_trials = 0;
  std::string run_arch = "both";
  std::string sweep_var;
  std::vector<double> sweep_values;
  int sweep_trials = 0;
  std::string sweep_arch = "both";
  std::uint64_t trace_trial = 0;
  std::string trace_arch = "bdris";

  CLI::App* run = app.add_subcommand("run", "Monte Carlo run at a fixed point");
  add_common(run, run_args);
  run->add_option("--trials", run_trials, "Trial count (overrides config)");
  run->add_option("--arch", run_arch, "bdris | dris | both")
      ->check(CLI::IsMember({"bdris", "dris", "both"}));

  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo parameter sweep");
  add_common(sweep, sweep_args);
  sweep->add_option("--var", sweep_var,
                    "haps_power_dbm | ris_elements | num_users | "
                    "interference_cap_W")
      ->required();
  sweep->add_option("--values", sweep_values, "Swept values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--trials", sweep_trials, "Trials per point (overrides config)");
  sweep->add_option("--arch", sweep_arch, "bdris | dris | both")
      ->check(CLI::IsMember({"bdris", "dris", "both"}));

  CLI::App* trace =
      app.add_subcommand("trace", "Per-iteration optimizer diagnostics");
  add_common(trace, trace_args);
  trace->add_option("--trial", trace_trial, "Trial index to trace");
  trace->add_option("--arch", trace_arch, "bdris | dris")
      ->check(CLI::IsMember({"bdris", "dris"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_args, run_trials, run_arch);
    if (sweep->parsed())
      return cmd_sweep(sweep_args, sweep_var, sweep_values, sweep_trials,
                       sweep_arch);
    if (trace->parsed()) return cmd_trace(trace_args, trace_trial, trace_arch);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
