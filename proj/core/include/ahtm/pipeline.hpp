#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ahtm/cam.hpp"
#include "ahtm/control_unit.hpp"
#include "ahtm/encoder.hpp"
#include "ahtm/metrics.hpp"
#include "ahtm/reflex_memory.hpp"
#include "ahtm/sdr.hpp"
#include "ahtm/sequence_memory.hpp"
#include "ahtm/spatial_pooler.hpp"

namespace ahtm {

enum class Mode : std::uint8_t { HTM, AHTM, H_AHTM };

std::string_view to_string(Mode m);
/// Accepts htm, ahtm, h_ahtm / h-ahtm (any case).
Mode parse_mode(std::string_view text);

struct PipelineConfig {
  Mode mode = Mode::AHTM;
  ScalarEncoderConfig encoder;
  /// Derive encoder min/max from the stream before running.
  bool encoder_auto_range = true;
  SpConfig sp;
  /// `sm.columns` always follows `sp.columns`.
  SmConfig sm;
  /// Pair-per-row layout with a 255 ceiling, so software and CAM tables
  /// agree step for step.
  ReflexConfig rm{2048, ReflexLayout::RowPerPair, 255};
  CuConfig cu;
  CamGeometry cam;
  bool learning = true;
  std::uint32_t repeat_count = 10;

  /// Throws ValidationError naming the offending keys.
  void validate() const;
};

/// Small, fast configuration for tests and examples: 256-bit encoder,
/// 256 columns of 4 cells, CAM words of 32x8 bits.
PipelineConfig toy_pipeline_config(Mode mode = Mode::AHTM);

struct StepTrace {
  std::uint64_t step = 0;
  double raw = 0.0;
  Sdr encoded;
  Sdr pooled;
  /// Predictions for the next step.
  std::optional<Sdr> rm_prediction;
  std::optional<Sdr> sm_prediction;
  std::optional<Sdr> emitted;
  Memory chosen = Memory::SM;
  /// Scores of this step's input against the previous step's predictions.
  ArsRecord scores;
  double rm_sum = 0.0;
  double sm_sum = 0.0;
  bool sm_skipped = false;
  double duration_ms = 0.0;
};

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig cfg);

  const PipelineConfig& config() const noexcept { return cfg_; }

  StepTrace step(double x);

  std::uint64_t steps() const noexcept { return steps_; }
  std::uint64_t rm_served() const noexcept { return rm_served_; }
  std::uint64_t sm_invocations() const noexcept { return sm_invocations_; }

  const SpatialPooler& spatial_pooler() const noexcept { return sp_; }
  SpatialPooler& spatial_pooler() noexcept { return sp_; }
  const SequenceMemory& sequence_memory() const noexcept { return sm_; }
  SequenceMemory& sequence_memory() noexcept { return sm_; }
  /// Null in HTM mode.
  const ReflexBackend* reflex() const noexcept { return rm_.get(); }
  ReflexBackend* reflex() noexcept { return rm_.get(); }
  /// Null unless the mode is H_AHTM.
  const CamReflexBackend* cam_reflex() const noexcept;
  const ControlUnit& control_unit() const noexcept { return cu_; }

 private:
  PipelineConfig cfg_;
  ScalarEncoder encoder_;
  SpatialPooler sp_;
  SequenceMemory sm_;
  std::unique_ptr<ReflexBackend> rm_;
  ControlUnit cu_;

  std::optional<Sdr> prev_pooled_;
  std::optional<Sdr> rm_pred_;
  std::optional<Sdr> sm_pred_;
  std::optional<Sdr> emitted_pred_;
  std::uint64_t steps_ = 0;
  std::uint64_t rm_served_ = 0;
  std::uint64_t sm_invocations_ = 0;
};

/// Sets encoder min/max to the value range when auto-ranging is on.
void calibrate_encoder(PipelineConfig& cfg, const std::vector<double>& values);

struct RunResult {
  Mode mode = Mode::AHTM;
  std::vector<StepTrace> traces;
  std::vector<ArsRecord> records;
  MetricsSummary summary;
  TimingStats timing;
  /// Mean wall-clock of one pass over the stream.
  double wall_ms = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t rm_served = 0;
  std::uint64_t sm_invocations = 0;
  std::optional<CostLedger> ledger;
  /// Learned state after the first pass, when requested.
  std::optional<std::string> snapshot;

  double rm_fraction() const { return steps == 0 ? 0.0 : static_cast<double>(rm_served) / static_cast<double>(steps); }
};

struct RunOptions {
  /// Overrides cfg.repeat_count when set.
  std::optional<std::uint32_t> repeat;
  bool keep_traces = true;
  /// Leading steps left out of precision/recall/F1/AUC (learning warm-up).
  /// Match rate always covers every step.
  std::size_t probation = 0;
  bool keep_snapshot = false;
};

/// Drives a fresh pipeline over `values` repeat_count times. Traces and
/// metrics come from the first pass (every pass is identical); timing
/// aggregates all passes. `labels` may be empty (self-supervised).
RunResult run_stream(PipelineConfig cfg, const std::vector<double>& values, const std::vector<std::uint8_t>& labels = {},
                     RunOptions options = {});

enum class SynthKind : std::uint8_t { Cycle, NoisyCycle, RandomWalk, InjectedAnomaly };

std::string_view to_string(SynthKind k);

struct SynthSpec {
  SynthKind kind = SynthKind::Cycle;
  std::size_t length = 1000;
  std::uint32_t period = 3;
  /// Per-step probability of a random level (noisy-cycle).
  double noise = 0.02;
  /// Exact number of labelled jumps (injected-anomaly).
  std::size_t anomalies = 10;
  std::uint64_t seed = 1;
};

/// `kind[:key=value,...]`, keys length, period, noise, anomalies, seed.
SynthSpec parse_synth_spec(std::string_view text);

struct SynthStream {
  std::vector<double> values;
  std::vector<std::uint8_t> labels;  // 1 at injected anomalies
  /// Leading steps guaranteed anomaly-free.
  std::size_t probation = 0;
};

SynthStream synth_stream(const SynthSpec& spec);
inline SynthStream synth_stream(SynthKind kind, std::size_t length, std::uint64_t seed) {
  SynthSpec s;
  s.kind = kind;
  s.length = length;
  s.seed = seed;
  return synth_stream(s);
}

/// Fraction of transitions that go to the most frequent successor of
/// their source value.
double first_order_determinism(const std::vector<double>& values);

struct CsvSeries {
  std::vector<std::string> timestamps;
  std::vector<double> values;
};

/// Header row required. Throws IoError (with the path) when unreadable,
/// ValidationError for a missing column, InputError for bad numbers.
CsvSeries load_csv(const std::string& path, const std::string& column = "value");
CsvSeries parse_csv(std::istream& in, const std::string& column = "value", const std::string& origin = "<stream>");

void write_trace_jsonl(std::ostream& out, const std::vector<StepTrace>& traces);

}  // namespace ahtm
