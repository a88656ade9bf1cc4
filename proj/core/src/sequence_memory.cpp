#include "ahtm/sequence_memory.hpp"

#include <algorithm>
#include <sstream>

#include "ahtm/error.hpp"

namespace ahtm {

SmConfig SmConfig::toy(std::uint32_t columns, std::uint32_t cells_per_column) {
  SmConfig cfg;
  cfg.columns = columns;
  cfg.cells_per_column = cells_per_column;
  cfg.activation_threshold = 2;
  cfg.matching_threshold = 1;
  cfg.new_synapse_count = 8;
  return cfg;
}

void SmConfig::validate() const {
  if (columns == 0 || cells_per_column == 0) throw ValidationError("sm: columns and cells_per_column must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("sm.theta must lie in (0,1)");
  if (connect_threshold < 0.0 || connect_threshold > 1.0) throw ValidationError("sm.connect_threshold must lie in [0,1]");
  if (activation_threshold < 1) throw ValidationError("sm.activation_threshold must be >= 1");
  if (matching_threshold < 1) throw ValidationError("sm.matching_threshold must be >= 1");
  if (perm_inc < 0.0 || perm_dec < 0.0) throw ValidationError("sm: permanence steps must be non-negative");
  if (initial_perm < 0.0 || initial_perm > 1.0) throw ValidationError("sm.initial_perm must lie in [0,1]");
  if (max_segments == 0 || max_synapses == 0) throw ValidationError("sm: segment and synapse limits must be positive");
}

std::uint32_t Predictions::dwinner_of(CellIndex cell) const {
  auto it = std::lower_bound(predictive_cells.begin(), predictive_cells.end(), cell);
  if (it == predictive_cells.end() || *it != cell) return 0;
  return dwinner[static_cast<std::size_t>(it - predictive_cells.begin())];
}

SequenceMemory::SequenceMemory(SmConfig cfg)
    : cfg_(cfg), cells_(static_cast<std::size_t>(cfg.columns) * cfg.cells_per_column), rng_(cfg.seed) {
  cfg_.validate();
  predictions_.predicted_columns = Sdr(cfg_.columns);
}

Predictions SequenceMemory::compute_predictions(std::span<const CellIndex> active_cells) const {
  Predictions out;
  std::vector<std::uint8_t> active(cell_count(), 0);
  for (CellIndex c : active_cells) {
    if (c >= cell_count()) throw ContractViolation("compute_predictions: cell index out of range");
    active[c] = 1;
  }
  std::vector<BitIndex> columns;
  const auto theta = static_cast<float>(cfg_.theta);
  for (CellIndex cell = 0; cell < cell_count(); ++cell) {
    const auto& segs = cells_[cell];
    std::uint32_t best = 0;
    bool predictive = false;
    for (std::uint32_t s = 0; s < segs.size(); ++s) {
      std::uint32_t connected = 0;
      std::uint32_t potential = 0;
      for (const Synapse& syn : segs[s].synapses) {
        if (active[syn.presynaptic] == 0) continue;
        ++potential;
        if (syn.on && syn.permanence >= theta) ++connected;
      }
      if (connected >= cfg_.activation_threshold) {
        out.active_segments.push_back({{cell, s}, connected, potential});
        predictive = true;
        best = std::max(best, connected);
      }
      if (potential >= cfg_.matching_threshold) {
        out.matching_segments.push_back({{cell, s}, connected, potential});
      }
    }
    if (predictive) {
      out.predictive_cells.push_back(cell);
      out.dwinner.push_back(best);
      const std::uint32_t col = column_of(cell);
      if (columns.empty() || columns.back() != col) columns.push_back(col);
    }
  }
  out.predicted_columns = Sdr(cfg_.columns, std::move(columns));
  return out;
}

std::vector<CellIndex> SequenceMemory::activate(const Sdr& r_input, std::span<const CellIndex> prior_predictive) const {
  if (r_input.width() != cfg_.columns) throw ContractViolation("sequence memory: input width != columns");
  std::vector<CellIndex> active;
  for (BitIndex col : r_input.active()) {
    const CellIndex first = cell_at(col, 0);
    const CellIndex last = first + cfg_.cells_per_column;
    auto lo = std::lower_bound(prior_predictive.begin(), prior_predictive.end(), first);
    auto hi = std::lower_bound(lo, prior_predictive.end(), last);
    if (lo != hi) {
      active.insert(active.end(), lo, hi);
    } else {
      for (CellIndex c = first; c < last; ++c) active.push_back(c);
    }
  }
  return active;
}

std::uint32_t SequenceMemory::least_used_cell(std::uint32_t column) const {
  std::uint32_t best = 0;
  std::size_t fewest = cells_[cell_at(column, 0)].size();
  for (std::uint32_t i = 1; i < cfg_.cells_per_column; ++i) {
    const std::size_t n = cells_[cell_at(column, i)].size();
    if (n < fewest) {
      fewest = n;
      best = i;
    }
  }
  return best;
}

namespace {

// Highest-potential matching segment whose cell lies in [first, last).
const Predictions::Scored* best_matching(const Predictions& prior, CellIndex first, CellIndex last) {
  const Predictions::Scored* best = nullptr;
  for (const auto& m : prior.matching_segments) {
    if (m.segment.cell < first || m.segment.cell >= last) continue;
    if (best == nullptr || m.potential > best->potential) best = &m;
  }
  return best;
}

const Predictions::Scored* best_active(const Predictions& prior, CellIndex cell) {
  const Predictions::Scored* best = nullptr;
  for (const auto& a : prior.active_segments) {
    if (a.segment.cell != cell) continue;
    if (best == nullptr || a.active_connected > best->active_connected) best = &a;
  }
  return best;
}

}  // namespace

std::vector<CellIndex> SequenceMemory::select_learning_cells(const Sdr& r_input, const Predictions& prior) const {
  if (r_input.width() != cfg_.columns) throw ContractViolation("sequence memory: input width != columns");
  std::vector<CellIndex> learning;
  learning.reserve(r_input.size());
  for (BitIndex col : r_input.active()) {
    const CellIndex first = cell_at(col, 0);
    const CellIndex last = first + cfg_.cells_per_column;
    auto lo = std::lower_bound(prior.predictive_cells.begin(), prior.predictive_cells.end(), first);
    auto hi = std::lower_bound(lo, prior.predictive_cells.end(), last);
    if (lo != hi) {
      // kWTA(1) over Dwinner, lowest cell on ties.
      CellIndex winner = *lo;
      std::uint32_t best = 0;
      for (auto it = lo; it != hi; ++it) {
        const std::uint32_t score = prior.dwinner[static_cast<std::size_t>(it - prior.predictive_cells.begin())];
        if (score > best) {
          best = score;
          winner = *it;
        }
      }
      learning.push_back(winner);
    } else if (const auto* m = best_matching(prior, first, last)) {
      learning.push_back(m->segment.cell);
    } else {
      learning.push_back(cell_at(col, least_used_cell(col)));
    }
  }
  return learning;
}

void SequenceMemory::refresh_on(Segment& seg) const {
  const auto threshold = static_cast<float>(cfg_.connect_threshold);
  for (Synapse& syn : seg.synapses) syn.on = syn.permanence >= threshold;
}

void SequenceMemory::adapt_segment(Segment& seg, const std::vector<std::uint8_t>& prev_active_mask, float inc,
                                   float dec) {
  for (Synapse& syn : seg.synapses) {
    const float delta = prev_active_mask[syn.presynaptic] != 0 ? inc : -dec;
    syn.permanence = std::clamp(syn.permanence + delta, 0.0f, 1.0f);
  }
  refresh_on(seg);
}

void SequenceMemory::grow_synapses(Segment& seg, std::span<const CellIndex> prev_winners, std::uint32_t desired) {
  std::vector<CellIndex> candidates;
  for (CellIndex w : prev_winners) {
    const bool present = std::any_of(seg.synapses.begin(), seg.synapses.end(),
                                     [w](const Synapse& s) { return s.presynaptic == w; });
    if (!present) candidates.push_back(w);
  }
  std::uint32_t n = std::min<std::uint32_t>(desired, static_cast<std::uint32_t>(candidates.size()));
  n = std::min(n, cfg_.max_synapses);
  if (n == 0) return;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, candidates.size() - 1);
    std::swap(candidates[i], candidates[pick(rng_)]);
  }
  const std::size_t overflow = seg.synapses.size() + n > cfg_.max_synapses ? seg.synapses.size() + n - cfg_.max_synapses : 0;
  for (std::size_t r = 0; r < overflow; ++r) {
    auto weakest = std::min_element(seg.synapses.begin(), seg.synapses.end(),
                                    [](const Synapse& a, const Synapse& b) { return a.permanence < b.permanence; });
    seg.synapses.erase(weakest);
  }
  const auto perm = static_cast<float>(cfg_.initial_perm);
  for (std::uint32_t i = 0; i < n; ++i) {
    seg.synapses.push_back({candidates[i], perm, perm >= static_cast<float>(cfg_.connect_threshold)});
  }
}

SegmentRef SequenceMemory::create_segment(CellIndex cell) {
  auto& segs = cells_[cell];
  if (segs.size() < cfg_.max_segments) {
    segs.push_back(Segment{{}, iteration_});
    return {cell, static_cast<std::uint32_t>(segs.size() - 1)};
  }
  // Recycle the least recently used segment in place.
  auto lru = std::min_element(segs.begin(), segs.end(),
                              [](const Segment& a, const Segment& b) { return a.last_used < b.last_used; });
  *lru = Segment{{}, iteration_};
  return {cell, static_cast<std::uint32_t>(lru - segs.begin())};
}

void SequenceMemory::learn_step(const Sdr& r_input, std::span<const CellIndex> learning_cells,
                                std::span<const CellIndex> prev_active, std::span<const CellIndex> prev_winners,
                                const Predictions& prior, double inc_scale) {
  if (r_input.width() != cfg_.columns) throw ContractViolation("sequence memory: input width != columns");
  ++iteration_;
  std::vector<std::uint8_t> prev_mask(cell_count(), 0);
  for (CellIndex c : prev_active) prev_mask[c] = 1;
  const auto inc = static_cast<float>(cfg_.perm_inc * inc_scale);
  const auto dec = static_cast<float>(cfg_.perm_dec);

  for (CellIndex cell : learning_cells) {
    if (cell >= cell_count()) throw ContractViolation("learn_step: cell index out of range");
    const CellIndex first = cell_at(column_of(cell), 0);
    const Predictions::Scored* target = best_active(prior, cell);
    if (target == nullptr) {
      const auto* m = best_matching(prior, first, first + cfg_.cells_per_column);
      if (m != nullptr && m->segment.cell == cell) target = m;
    }
    if (target != nullptr) {
      Segment& seg = cells_[cell][target->segment.index];
      adapt_segment(seg, prev_mask, inc, dec);
      const std::uint32_t have = target->potential;
      if (cfg_.new_synapse_count > have) grow_synapses(seg, prev_winners, cfg_.new_synapse_count - have);
      refresh_on(seg);
      seg.last_used = iteration_;
    } else if (!prev_winners.empty()) {
      const SegmentRef ref = create_segment(cell);
      Segment& seg = cells_[cell][ref.index];
      grow_synapses(seg, prev_winners, cfg_.new_synapse_count);
      seg.last_used = iteration_;
    }
  }

  // Depress segments that predicted a column which stayed silent.
  for (const auto& a : prior.active_segments) {
    if (r_input.test(column_of(a.segment.cell))) continue;
    Segment& seg = cells_[a.segment.cell][a.segment.index];
    for (Synapse& syn : seg.synapses) {
      if (prev_mask[syn.presynaptic] != 0) syn.permanence = std::clamp(syn.permanence - dec, 0.0f, 1.0f);
    }
    refresh_on(seg);
  }
}

SmStepOutput SequenceMemory::step(const Sdr& r_input, bool learning, double inc_scale) {
  SmStepOutput out;
  out.active_cells = activate(r_input, predictions_.predictive_cells);
  out.learning_cells = select_learning_cells(r_input, predictions_);
  for (BitIndex col : r_input.active()) {
    const CellIndex first = cell_at(col, 0);
    auto lo = std::lower_bound(predictions_.predictive_cells.begin(), predictions_.predictive_cells.end(), first);
    if (lo == predictions_.predictive_cells.end() || *lo >= first + cfg_.cells_per_column) {
      out.bursting_columns.push_back(col);
    }
  }
  if (learning) learn_step(r_input, out.learning_cells, prev_active_, prev_winners_, predictions_, inc_scale);
  predictions_ = compute_predictions(out.active_cells);
  prev_active_ = out.active_cells;
  prev_winners_ = out.learning_cells;
  out.predicted_columns = predictions_.predicted_columns;
  out.predictive_cells = predictions_.predictive_cells;
  return out;
}

void SequenceMemory::reset_context() {
  prev_active_.clear();
  prev_winners_.clear();
  predictions_ = Predictions{};
  predictions_.predicted_columns = Sdr(cfg_.columns);
}

std::size_t SequenceMemory::segment_count() const {
  std::size_t n = 0;
  for (const auto& segs : cells_) n += segs.size();
  return n;
}

std::size_t SequenceMemory::synapse_count() const {
  std::size_t n = 0;
  for (const auto& segs : cells_) {
    for (const auto& s : segs) n += s.synapses.size();
  }
  return n;
}

bool SequenceMemory::on_flags_consistent() const {
  const auto threshold = static_cast<float>(cfg_.connect_threshold);
  for (const auto& segs : cells_) {
    for (const auto& seg : segs) {
      if (seg.synapses.size() > cfg_.max_synapses) return false;
      for (const auto& syn : seg.synapses) {
        if (syn.on != (syn.permanence >= threshold)) return false;
        if (syn.permanence < 0.0f || syn.permanence > 1.0f) return false;
      }
    }
    if (segs.size() > cfg_.max_segments) return false;
  }
  return true;
}

std::string SequenceMemory::rng_state() const {
  std::ostringstream out;
  out << rng_;
  return out.str();
}

void SequenceMemory::restore(std::vector<std::vector<Segment>> cells, std::uint64_t iteration,
                             const std::string& rng_state, std::vector<CellIndex> prev_active,
                             std::vector<CellIndex> prev_winners) {
  if (cells.size() != cell_count()) throw ValidationError("sm snapshot cell count differs from config");
  for (const auto& segs : cells) {
    for (const auto& seg : segs) {
      for (const auto& syn : seg.synapses) {
        if (syn.presynaptic >= cell_count()) throw ValidationError("sm snapshot presynaptic index out of range");
      }
    }
  }
  cells_ = std::move(cells);
  iteration_ = iteration;
  std::istringstream in(rng_state);
  in >> rng_;
  if (!in) throw ValidationError("sm snapshot rng state unreadable");
  prev_active_ = std::move(prev_active);
  prev_winners_ = std::move(prev_winners);
  predictions_ = compute_predictions(prev_active_);
}

}  // namespace ahtm
