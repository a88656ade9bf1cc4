#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ahtm/pipeline.hpp"

namespace ahtm {

inline constexpr int kReportSchemaVersion = 1;

struct ExperimentSpec {
  /// CSV path; ignored when `synth` is set.
  std::string dataset;
  std::string column = "value";
  std::optional<SynthSpec> synth;
  std::vector<Mode> modes{Mode::HTM, Mode::AHTM, Mode::H_AHTM};
  /// Mode field is overwritten per run.
  PipelineConfig base;
  std::string out_dir;
  std::uint32_t repeat = 10;
  bool trace = false;
  /// Also write snapshot_<mode>.json with the learned state of each run.
  bool snapshot = false;

  /// Throws ValidationError.
  void validate() const;
};

struct LoadedData {
  std::string name;
  std::vector<double> values;
  std::vector<std::uint8_t> labels;  // empty for unlabeled data
  std::size_t probation = 0;
};

/// Throws IoError for unreadable files.
LoadedData load_data(const ExperimentSpec& spec);

struct RunReport {
  std::string dataset;
  std::uint32_t repeat = 1;
  std::vector<RunResult> runs;
  std::vector<std::string> files;
};

std::string metrics_csv(const RunReport& r);
std::string timing_csv(const RunReport& r);

/// Runs every mode and writes metrics.csv, timing.csv, report.json,
/// cost_ledger.json (H-AHTM) and traces_<mode>.jsonl (on request). Nothing
/// is written unless every run succeeds.
RunReport cmd_run(const ExperimentSpec& spec);

struct SweepRow {
  std::uint32_t window = 0;
  /// SM-only match rate minus this run's match rate.
  double accuracy_penalty = 0.0;
  /// SM invocations of the SM-only baseline per SM invocation here.
  double speedup = 0.0;
  /// Measured, informational.
  double wall_clock_speedup = 0.0;
  double rm_fraction = 0.0;
  double match_rate = 0.0;
};

struct SweepReport {
  std::string dataset;
  double baseline_match_rate = 0.0;
  double baseline_wall_ms = 0.0;
  std::vector<SweepRow> rows;
  std::vector<std::string> files;
};

/// Window sweep in AHTM mode with SM skipping on. Throws ValidationError
/// for fewer than two windows.
SweepReport sweep_cu_window(PipelineConfig base, const LoadedData& data, const std::vector<std::uint32_t>& windows,
                            std::uint32_t repeat = 1);
std::string sweep_csv(const SweepReport& r);
/// Writes sweep.csv under spec.out_dir.
SweepReport cmd_sweep_cu_window(const ExperimentSpec& spec, const std::vector<std::uint32_t>& windows);

struct SelftestCase {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestReport {
  std::vector<SelftestCase> cases;
  bool passed() const;
};

/// Oracle and invariant suites; `snapshot_path` adds a snapshot file check.
SelftestReport cmd_selftest(const std::optional<std::string>& snapshot_path = std::nullopt);

}  // namespace ahtm
