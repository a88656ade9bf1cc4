#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ahtm/sdr.hpp"

namespace ahtm {

/// Flat cell address: column * cells_per_column + cell.
using CellIndex = std::uint32_t;

struct SmConfig {
  std::uint32_t columns = 1024;
  std::uint32_t cells_per_column = 8;
  /// Voting threshold: a synapse counts toward segment activation only when
  /// its permanence is at least theta.
  double theta = 0.5;
  /// Permanence at which a synapse is flagged ON.
  double connect_threshold = 0.5;
  std::uint32_t activation_threshold = 13;
  /// Minimum synapses onto previously active cells for a segment to be
  /// reused when its column bursts.
  std::uint32_t matching_threshold = 10;
  double perm_inc = 0.1;
  double perm_dec = 0.05;
  double initial_perm = 0.21;
  std::uint32_t max_segments = 32;
  std::uint32_t max_synapses = 32;
  std::uint32_t new_synapse_count = 20;
  std::uint64_t seed = 7;

  /// Small-network defaults (activation threshold 2).
  static SmConfig toy(std::uint32_t columns, std::uint32_t cells_per_column);
  void validate() const;
};

struct Synapse {
  CellIndex presynaptic = 0;
  float permanence = 0.0f;
  bool on = false;

  friend bool operator==(const Synapse&, const Synapse&) = default;
};

struct Segment {
  std::vector<Synapse> synapses;
  std::uint64_t last_used = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentRef {
  CellIndex cell = 0;
  std::uint32_t index = 0;

  friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
};

/// Result of evaluating every distal segment against a set of active cells.
struct Predictions {
  std::vector<CellIndex> predictive_cells;  // ascending
  Sdr predicted_columns;
  /// Best active-segment score per predictive cell, parallel to predictive_cells.
  std::vector<std::uint32_t> dwinner;
  struct Scored {
    SegmentRef segment;
    std::uint32_t active_connected = 0;
    std::uint32_t potential = 0;
  };
  std::vector<Scored> active_segments;
  std::vector<Scored> matching_segments;

  std::uint32_t dwinner_of(CellIndex cell) const;
};

struct SmStepOutput {
  Sdr predicted_columns;
  std::vector<CellIndex> active_cells;
  std::vector<CellIndex> predictive_cells;
  std::vector<CellIndex> learning_cells;
  std::vector<std::uint32_t> bursting_columns;
};

/// Cells-in-columns sequence learner over spatial-pooler outputs.
///
/// Each step activates predicted cells (or bursts unpredicted columns),
/// picks one learning cell per active column, adapts the distal segments
/// that produced the previous predictions, then predicts the next step.
class SequenceMemory {
 public:
  explicit SequenceMemory(SmConfig cfg);

  const SmConfig& config() const noexcept { return cfg_; }
  std::uint32_t cell_count() const noexcept { return cfg_.columns * cfg_.cells_per_column; }
  std::uint32_t column_of(CellIndex c) const noexcept { return c / cfg_.cells_per_column; }
  CellIndex cell_at(std::uint32_t column, std::uint32_t cell) const noexcept {
    return column * cfg_.cells_per_column + cell;
  }

  Predictions compute_predictions(std::span<const CellIndex> active_cells) const;

  /// Predicted cells of each active column fire; unpredicted columns burst.
  std::vector<CellIndex> activate(const Sdr& r_input, std::span<const CellIndex> prior_predictive) const;

  /// One learning cell per active column.
  std::vector<CellIndex> select_learning_cells(const Sdr& r_input, const Predictions& prior) const;

  /// Adapts segments for the transition prev_active -> r_input.
  /// `inc_scale` multiplies perm_inc (boosted reinforcement).
  void learn_step(const Sdr& r_input, std::span<const CellIndex> learning_cells,
                  std::span<const CellIndex> prev_active, std::span<const CellIndex> prev_winners,
                  const Predictions& prior, double inc_scale = 1.0);

  SmStepOutput step(const Sdr& r_input, bool learning, double inc_scale = 1.0);

  /// Forget the previous step's activity; the next input is treated as the
  /// start of a new sequence.
  void reset_context();

  const Predictions& current_predictions() const noexcept { return predictions_; }
  std::span<const CellIndex> previous_active() const noexcept { return prev_active_; }
  std::span<const CellIndex> previous_winners() const noexcept { return prev_winners_; }

  std::span<const Segment> segments(CellIndex cell) const { return cells_.at(cell); }
  std::vector<Segment>& mutable_segments(CellIndex cell) { return cells_.at(cell); }
  std::size_t segment_count() const;
  std::size_t synapse_count() const;
  std::uint64_t iteration() const noexcept { return iteration_; }

  /// ONparents agrees with the permanences on every synapse.
  bool on_flags_consistent() const;

  std::string rng_state() const;
  void restore(std::vector<std::vector<Segment>> cells, std::uint64_t iteration, const std::string& rng_state,
               std::vector<CellIndex> prev_active, std::vector<CellIndex> prev_winners);
  const std::vector<std::vector<Segment>>& all_segments() const noexcept { return cells_; }

  /// Network equality: segments and synapses only, not step context.
  bool same_network(const SequenceMemory& other) const { return cells_ == other.cells_; }

 private:
  void adapt_segment(Segment& seg, const std::vector<std::uint8_t>& prev_active_mask, float inc, float dec);
  void grow_synapses(Segment& seg, std::span<const CellIndex> prev_winners, std::uint32_t desired);
  SegmentRef create_segment(CellIndex cell);
  void refresh_on(Segment& seg) const;
  std::uint32_t least_used_cell(std::uint32_t column) const;

  SmConfig cfg_;
  std::vector<std::vector<Segment>> cells_;
  std::mt19937_64 rng_;
  std::uint64_t iteration_ = 0;
  std::vector<CellIndex> prev_active_;
  std::vector<CellIndex> prev_winners_;
  Predictions predictions_;
};

}  // namespace ahtm
