#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ahtm/error.hpp"
#include "ahtm/sdr.hpp"

namespace ahtm {

enum class OverlapMode {
  ConnectedCount,  // count of pooled active bits whose permanence clears connect_threshold
  WeightedSum,     // sum of raw permanences over pooled active bits
};

struct SpConfig {
  std::uint32_t columns = 1024;
  std::uint32_t k = 20;
  double alpha = 0.05;
  double connect_threshold = 0.2;
  double pool_fraction = 0.5;
  std::uint64_t seed = 42;
  OverlapMode overlap_mode = OverlapMode::ConnectedCount;

  void validate() const;
};

/// Column x input-bit permanences for the proximal synapses. Only bits in a
/// column's potential pool carry a permanence; the pool never changes after
/// initialization.
class PermanenceMatrix {
 public:
  PermanenceMatrix() = default;
  PermanenceMatrix(std::uint32_t columns, std::uint32_t input_width, double connect_threshold);

  /// Pools of round(pool_fraction * input_width) random bits per column with
  /// permanences uniform in [0,1]. Fully determined by `seed`.
  static PermanenceMatrix init(const SpConfig& cfg, std::uint32_t input_width, std::uint64_t seed);

  std::uint32_t columns() const noexcept { return columns_; }
  std::uint32_t input_width() const noexcept { return input_width_; }
  double connect_threshold() const noexcept { return connect_threshold_; }

  std::span<const BitIndex> pool(std::uint32_t column) const { return pools_.at(column); }
  bool in_pool(std::uint32_t column, BitIndex bit) const { return pooled_[index(column, bit)] != 0; }
  float permanence(std::uint32_t column, BitIndex bit) const { return perm_[index(column, bit)]; }
  bool connected(std::uint32_t column, BitIndex bit) const {
    return in_pool(column, bit) && permanence(column, bit) >= connect_threshold_;
  }

  /// Replaces the pool of `column`; bits leaving the pool drop their permanence.
  void set_pool(std::uint32_t column, std::vector<BitIndex> bits);
  /// Sets one pooled permanence, clamped to [0,1]. Throws if bit is not pooled.
  void set_permanence(std::uint32_t column, BitIndex bit, float value);

  /// Adds `delta` to a pooled permanence and clamps.
  void nudge(std::uint32_t column, BitIndex bit, float delta) {
    float& p = perm_[index(column, bit)];
    p = std::clamp(p + delta, 0.0f, 1.0f);
  }

  /// Contiguous per-bit views over all columns (input-major storage).
  std::span<const float> bit_permanences(BitIndex bit) const {
    return {perm_.data() + static_cast<std::size_t>(bit) * columns_, columns_};
  }
  std::span<const std::uint8_t> bit_pooled(BitIndex bit) const {
    return {pooled_.data() + static_cast<std::size_t>(bit) * columns_, columns_};
  }
  std::span<float> mutable_bit_permanences(BitIndex bit) {
    return {perm_.data() + static_cast<std::size_t>(bit) * columns_, columns_};
  }

  friend bool operator==(const PermanenceMatrix&, const PermanenceMatrix&) = default;

 private:
  std::size_t index(std::uint32_t column, BitIndex bit) const {
    return static_cast<std::size_t>(bit) * columns_ + column;
  }

  std::uint32_t columns_ = 0;
  std::uint32_t input_width_ = 0;
  double connect_threshold_ = 0.2;
  std::vector<float> perm_;
  std::vector<std::uint8_t> pooled_;
  std::vector<std::vector<BitIndex>> pools_;
};

std::vector<std::uint32_t> overlap_scores(const PermanenceMatrix& m, const Sdr& e);
std::vector<double> weighted_overlap_scores(const PermanenceMatrix& m, const Sdr& e);

/// Top-k indices by score; ties at the cutoff go to the lowest index.
template <typename Score>
Sdr kwta_select(std::span<const Score> scores, std::uint32_t k) {
  if (k > scores.size()) throw ContractViolation("kwta_select: k exceeds number of scores");
  std::vector<BitIndex> order(scores.size());
  std::iota(order.begin(), order.end(), BitIndex{0});
  auto better = [&scores](BitIndex a, BitIndex b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::nth_element(order.begin(), order.begin() + k, order.end(), better);
  order.resize(k);
  return Sdr(static_cast<std::uint32_t>(scores.size()), std::move(order));
}

template <typename Score>
Sdr kwta_select(const std::vector<Score>& scores, std::uint32_t k) {
  return kwta_select(std::span<const Score>(scores), k);
}

/// perm[j][i] += alpha * (2*S_j - 1) * E_i over pooled pairs, clamped to [0,1].
void learn(PermanenceMatrix& m, const Sdr& e, const Sdr& s, double alpha);

class SpatialPooler {
 public:
  SpatialPooler(SpConfig cfg, std::uint32_t input_width);
  SpatialPooler(SpConfig cfg, PermanenceMatrix matrix);

  const SpConfig& config() const noexcept { return cfg_; }
  const PermanenceMatrix& matrix() const noexcept { return matrix_; }
  PermanenceMatrix& matrix() noexcept { return matrix_; }

  /// overlap -> kWTA (-> learn). Output has exactly k active columns.
  Sdr pool(const Sdr& e, bool learning);

 private:
  SpConfig cfg_;
  PermanenceMatrix matrix_;
};

}  // namespace ahtm
