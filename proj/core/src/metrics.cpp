#include "ahtm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ahtm/error.hpp"

namespace ahtm {

double ars(const Sdr& predicted, const Sdr& actual) {
  if (predicted.width() != actual.width()) throw ContractViolation("ars: width mismatch");
  if (actual.empty()) throw UndefinedScore("ars: actual SDR has no active bits");
  const auto overlap = overlap_count(predicted, actual);
  return 1.0 - static_cast<double>(overlap) / static_cast<double>(actual.size());
}

bool is_match(const Sdr& predicted, const Sdr& actual) {
  if (predicted.width() != actual.width()) throw ContractViolation("is_match: width mismatch");
  if (actual.empty()) throw UndefinedScore("is_match: actual SDR has no active bits");
  // Integer form of overlap / nz >= 0.5.
  return 2 * overlap_count(predicted, actual) >= actual.size();
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw ContractViolation("roc_auc: scores and labels differ in length");
  const auto positives = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto l) { return l != 0; }));
  const std::size_t negatives = labels.size() - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    double dtp = 0.0, dfp = 0.0;
    const double threshold = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == threshold; ++i) {
      (labels[order[i]] != 0 ? dtp : dfp) += 1.0;
    }
    // Trapezoid between consecutive operating points.
    area += dfp * (tp + dtp / 2.0);
    tp += dtp;
    fp += dfp;
  }
  return area / (static_cast<double>(positives) * static_cast<double>(negatives));
}

MetricsSummary classification_metrics(std::span<const ArsRecord> records, std::span<const std::uint8_t> labels) {
  if (records.size() != labels.size()) throw ContractViolation("classification_metrics: length mismatch");
  MetricsSummary m;
  std::vector<double> scores;
  scores.reserve(records.size());
  std::uint64_t matched = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const bool detected = !records[i].matched;
    const bool anomaly = labels[i] != 0;
    if (records[i].matched) ++matched;
    if (detected && anomaly) ++m.confusion.tp;
    else if (detected) ++m.confusion.fp;
    else if (anomaly) ++m.confusion.fn;
    else ++m.confusion.tn;
    scores.push_back(records[i].ars_emitted);
  }
  const auto& c = m.confusion;
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (m.recall) {
    const double p = m.precision.value_or(0.0);
    m.f1 = (p + *m.recall) > 0.0 ? 2.0 * p * *m.recall / (p + *m.recall) : 0.0;
  }
  m.roc_auc = roc_auc(scores, labels);
  m.match_rate = records.empty() ? 0.0 : static_cast<double>(matched) / static_cast<double>(records.size());
  return m;
}

TimingStats timing_stats(std::span<const double> durations_ms, std::uint32_t repeat_count) {
  if (durations_ms.empty()) throw ContractViolation("timing_stats: no samples");
  if (repeat_count == 0) throw ContractViolation("timing_stats: repeat count must be positive");
  std::vector<double> sorted(durations_ms.begin(), durations_ms.end());
  std::sort(sorted.begin(), sorted.end());
  auto rank = [&sorted](double q) {
    const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(idx, 1, sorted.size()) - 1];
  };
  TimingStats t;
  t.samples = sorted.size();
  t.repeat_count = repeat_count;
  const double sum = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  t.mean_ms = sum / static_cast<double>(sorted.size());
  t.p50_ms = rank(0.50);
  t.p95_ms = rank(0.95);
  t.total_ms = sum / static_cast<double>(repeat_count);
  return t;
}

}  // namespace ahtm
