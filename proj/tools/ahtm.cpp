#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ahtm/config.hpp"
#include "ahtm/error.hpp"
#include "ahtm/experiment.hpp"

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kIo = 2, kSelftest = 3 };

struct DataFlags {
  std::vector<std::string> modes;
  std::string dataset;
  std::string column = "value";
  std::string synth;
  std::string config;
  std::uint32_t repeat = 10;
  std::string out = "ahtm-out";
  bool trace = false;
  bool snapshot = false;
  std::optional<std::uint64_t> seed;
};

void add_data_flags(CLI::App* cmd, DataFlags& f, bool with_modes) {
  if (with_modes) {
    cmd->add_option("--mode", f.modes, "Modes to run: htm, ahtm, h_ahtm (default: all three)")->delimiter(',');
  }
  auto* ds = cmd->add_option("--dataset", f.dataset, "CSV file with a header row (timestamp,value)");
  auto* sy = cmd->add_option("--synth", f.synth, "Synthetic stream, e.g. noisy-cycle:length=5000,period=16");
  ds->excludes(sy);
  cmd->add_option("--column", f.column, "CSV column to read")->capture_default_str();
  cmd->add_option("--config", f.config, "Flat key = value config file");
  cmd->add_option("--repeat", f.repeat, "Timed passes per mode")->capture_default_str();
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_flag("--trace", f.trace, "Write per-step JSON-lines traces");
  cmd->add_option("--seed", f.seed, "Seed for the synthetic stream, SP and SM");
  if (with_modes) cmd->add_flag("--snapshot", f.snapshot, "Write the learned state of each mode as JSON");
}

ahtm::ExperimentSpec build_spec(const DataFlags& f) {
  ahtm::ExperimentSpec spec;
  if (!f.config.empty()) ahtm::apply_settings(spec.base, ahtm::load_settings(f.config));
  if (!f.modes.empty()) {
    spec.modes.clear();
    for (const auto& m : f.modes) spec.modes.push_back(ahtm::parse_mode(m));
  }
  spec.dataset = f.dataset;
  spec.column = f.column;
  if (!f.synth.empty()) spec.synth = ahtm::parse_synth_spec(f.synth);
  if (f.seed) {
    spec.base.sp.seed = *f.seed;
    spec.base.sm.seed = *f.seed;
    if (spec.synth) spec.synth->seed = *f.seed;
  }
  spec.repeat = f.repeat;
  spec.base.repeat_count = f.repeat;
  spec.out_dir = f.out;
  spec.trace = f.trace;
  spec.snapshot = f.snapshot;
  return spec;
}

int run(const DataFlags& f) {
  const auto report = ahtm::cmd_run(build_spec(f));
  std::cout << ahtm::metrics_csv(report) << ahtm::timing_csv(report);
  for (const auto& file : report.files) std::cout << "wrote " << file << '\n';
  return kOk;
}

int sweep(const DataFlags& f, const std::vector<std::uint32_t>& windows) {
  const auto report = ahtm::cmd_sweep_cu_window(build_spec(f), windows);
  std::cout << ahtm::sweep_csv(report);
  for (const auto& file : report.files) std::cout << "wrote " << file << '\n';
  return kOk;
}

int selftest(const std::optional<std::string>& snapshot) {
  const auto report = ahtm::cmd_selftest(snapshot);
  for (const auto& c : report.cases) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.passed) std::cout << ": " << c.detail;
    std::cout << '\n';
  }
  const bool ok = report.passed();
  std::cout << (ok ? "selftest passed" : "selftest FAILED") << '\n';
  return ok ? kOk : kSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive HTM pipeline: reflex memory, sequence memory and CAM cost model"};
  app.require_subcommand(1);

  DataFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "Run modes over a dataset and write metric, timing and cost reports");
  add_data_flags(run_cmd, run_flags, true);

  DataFlags sweep_flags;
  sweep_flags.repeat = 1;
  std::vector<std::uint32_t> windows{2, 4, 8, 16, 32};
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep the control-unit window in AHTM mode against an SM-only baseline");
  add_data_flags(sweep_cmd, sweep_flags, false);
  sweep_cmd->add_option("--windows", windows, "Window sizes (at least two)")->delimiter(',')->capture_default_str();

  std::optional<std::string> snapshot;
  auto* self_cmd = app.add_subcommand("selftest", "Run the oracle and invariant suites");
  self_cmd->add_option("--snapshot", snapshot, "Also validate a snapshot file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run_cmd) return run(run_flags);
    if (*sweep_cmd) return sweep(sweep_flags, windows);
    if (*self_cmd) return selftest(snapshot);
  } catch (const ahtm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
