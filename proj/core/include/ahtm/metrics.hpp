#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ahtm/sdr.hpp"

namespace ahtm {

/// Uncovered fraction of the actual SDR: 1 - |pred ∩ actual| / |actual|.
/// Throws UndefinedScore for an empty actual, ContractViolation on width
/// mismatch. An empty prediction scores 1.
double ars(const Sdr& predicted, const Sdr& actual);

inline constexpr double kMatchThreshold = 0.5;

/// At least half of the actual bits covered.
bool is_match(const Sdr& predicted, const Sdr& actual);

/// Score for a step where a memory had no prediction at all.
inline constexpr double kNoPredictionArs = 1.0;

struct ArsRecord {
  std::uint64_t step = 0;
  double ars_rm = kNoPredictionArs;
  double ars_sm = kNoPredictionArs;
  double ars_emitted = kNoPredictionArs;
  bool matched = false;
};

struct Confusion {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct MetricsSummary {
  Confusion confusion;
  // Empty when the ratio has a zero denominator.
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> roc_auc;
  double match_rate = 0.0;
  double mean_step_time_ms = 0.0;
  double rm_hit_fraction = 0.0;
};

/// Detections are mismatches (NOT is_match); labels mark true anomalies.
/// AUC ranks ars_emitted against the labels.
MetricsSummary classification_metrics(std::span<const ArsRecord> records, std::span<const std::uint8_t> labels);

/// Area under the ROC curve from a threshold sweep over `scores`, higher
/// score meaning more anomalous. Tied scores contribute a diagonal segment.
/// Empty when either class is absent.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct TimingStats {
  std::size_t samples = 0;
  std::uint32_t repeat_count = 1;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  /// Sum of all samples divided by repeat_count: one pass over the data.
  double total_ms = 0.0;
};

/// Percentiles by nearest rank. Throws ContractViolation on no samples.
TimingStats timing_stats(std::span<const double> durations_ms, std::uint32_t repeat_count = 1);

}  // namespace ahtm
