#include "ahtm/cam.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ahtm/error.hpp"

namespace ahtm {

void CamGeometry::validate() const {
  if (n == 0 || m == 0 || p == 0 || q == 0) throw ValidationError("cam geometry values must be positive");
  if (q > 16) throw ValidationError("cam.q above 16 bits is not modeled");
  if (stages != 3) throw ValidationError("cam has exactly three stages");
}

std::string_view to_string(CamOp op) {
  switch (op) {
    case CamOp::Write: return "write";
    case CamOp::Search: return "search";
    case CamOp::Update: return "update";
    case CamOp::MinMax: return "minmax";
    case CamOp::Predict: return "predict";
  }
  return "unknown";
}

void CostLedger::charge(CamOp op, std::uint64_t bits) {
  ++counts_[static_cast<std::size_t>(op)];
  bits_[static_cast<std::size_t>(op)] += bits;
}

double CostLedger::latency_ns(CamOp op) const {
  return static_cast<double>(count(op)) * kAfeCamUnitCosts[static_cast<std::size_t>(op)].latency_ns;
}

double CostLedger::energy_fj(CamOp op) const {
  return static_cast<double>(bits(op)) * kAfeCamUnitCosts[static_cast<std::size_t>(op)].energy_fj_per_bit;
}

double CostLedger::latency_ns() const {
  double total = 0.0;
  for (std::size_t i = 0; i < kCamOpCount; ++i) total += latency_ns(static_cast<CamOp>(i));
  return total;
}

double CostLedger::energy_fj() const {
  double total = 0.0;
  for (std::size_t i = 0; i < kCamOpCount; ++i) total += energy_fj(static_cast<CamOp>(i));
  return total;
}

nlohmann::json CostLedger::to_json() const {
  nlohmann::json ops = nlohmann::json::object();
  for (std::size_t i = 0; i < kCamOpCount; ++i) {
    const auto op = static_cast<CamOp>(i);
    ops[std::string(to_string(op))] = {{"count", count(op)},
                                       {"bits", bits(op)},
                                       {"latency_ns", latency_ns(op)},
                                       {"energy_fj", energy_fj(op)}};
  }
  return {{"operations", ops},
          {"predict_cycles", predict_cycles_},
          {"minmax_iterations", minmax_iterations_},
          {"total_latency_ns", latency_ns()},
          {"total_energy_fj", energy_fj()}};
}

std::vector<std::uint32_t> SearchResult::rows() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t r = 0; r < match.size(); ++r) {
    if (match[r] != 0) out.push_back(r);
  }
  return out;
}

CamArray::CamArray(CamGeometry geometry)
    : geo_(geometry),
      words_per_row_((static_cast<std::size_t>(geometry.word_bits()) + 63) / 64),
      present_(words_per_row_ * geometry.rows(), 0),
      next_(words_per_row_ * geometry.rows(), 0),
      confidence_(geometry.rows(), 0),
      valid_(geometry.rows(), 0) {
  geo_.validate();
}

void CamArray::check_row(std::uint32_t row) const {
  if (row >= geo_.rows()) {
    throw AddressError("cam row " + std::to_string(row) + " outside " + std::to_string(geo_.rows()) + " rows");
  }
}

void CamArray::check_valid(std::uint32_t row) const {
  check_row(row);
  if (valid_[row] == 0) throw AddressError("cam row " + std::to_string(row) + " is not valid");
}

CamArray::Word CamArray::pack(const Sdr& word) const {
  if (word.width() != geo_.word_bits()) {
    throw ContractViolation("cam word width " + std::to_string(word.width()) + " != " +
                            std::to_string(geo_.word_bits()));
  }
  Word w(words_per_row_, 0);
  for (BitIndex b : word.active()) w[b / 64] |= std::uint64_t{1} << (b % 64);
  return w;
}

std::vector<std::uint64_t>& CamArray::stage_words(CamStage stage) {
  if (stage == CamStage::Confidence) throw ContractViolation("confidence stage holds counters, not words");
  return stage == CamStage::Present ? present_ : next_;
}

const std::vector<std::uint64_t>& CamArray::stage_words(CamStage stage) const {
  if (stage == CamStage::Confidence) throw ContractViolation("confidence stage holds counters, not words");
  return stage == CamStage::Present ? present_ : next_;
}

void CamArray::write(CamStage stage, std::uint32_t row, const Sdr& word) {
  check_row(row);
  const Word w = pack(word);
  auto& words = stage_words(stage);
  std::copy(w.begin(), w.end(), words.begin() + static_cast<std::ptrdiff_t>(row * words_per_row_));
  if (stage == CamStage::Present) valid_[row] = 1;
  ledger_.charge(CamOp::Write, geo_.word_bits());
}

void CamArray::write_confidence(std::uint32_t row, std::uint32_t value) {
  check_row(row);
  if (value > geo_.confidence_max()) throw ContractViolation("confidence value exceeds Q-bit counter");
  confidence_[row] = value;
  ledger_.charge(CamOp::Write, geo_.q);
}

void CamArray::match_stage(CamStage stage, const Word& query, std::vector<std::uint8_t>& match) const {
  const auto& words = stage_words(stage);
  for (std::uint32_t r = 0; r < geo_.rows(); ++r) {
    if (valid_[r] == 0 || match[r] == 0) {
      match[r] = 0;
      continue;
    }
    const std::uint64_t* stored = &words[r * words_per_row_];
    bool ok = true;
    for (std::size_t i = 0; i < words_per_row_ && ok; ++i) {
      // Pre-search phase: stored 1 searched with 0. Search phase: stored 0 searched with 1.
      const std::uint64_t presearch_mismatch = stored[i] & ~query[i];
      const std::uint64_t search_mismatch = ~stored[i] & query[i];
      ok = (presearch_mismatch | search_mismatch) == 0;
    }
    match[r] = ok ? 1 : 0;
  }
}

SearchResult CamArray::search(CamStage stage, const Sdr& query) {
  const Word q = pack(query);
  SearchResult out;
  out.match.assign(geo_.rows(), 1);
  match_stage(stage, q, out.match);
  out.miss = std::none_of(out.match.begin(), out.match.end(), [](std::uint8_t m) { return m != 0; });
  ledger_.charge(CamOp::Search, query.width());
  return out;
}

SearchResult CamArray::search_pair(const Sdr& present, const Sdr& next) {
  const Word qp = pack(present);
  const Word qn = pack(next);
  SearchResult out;
  out.match.assign(geo_.rows(), 1);
  match_stage(CamStage::Present, qp, out.match);
  match_stage(CamStage::Next, qn, out.match);
  out.miss = std::none_of(out.match.begin(), out.match.end(), [](std::uint8_t m) { return m != 0; });
  ledger_.charge(CamOp::Search, present.width());
  ledger_.charge(CamOp::Search, next.width());
  return out;
}

void CamArray::update(std::uint32_t row) {
  check_valid(row);
  std::fill_n(present_.begin() + static_cast<std::ptrdiff_t>(row * words_per_row_), words_per_row_, 0);
  std::fill_n(next_.begin() + static_cast<std::ptrdiff_t>(row * words_per_row_), words_per_row_, 0);
  confidence_[row] = 0;
  valid_[row] = 0;
  ledger_.charge(CamOp::Update, 2ull * geo_.word_bits() + geo_.q);
}

std::uint32_t CamArray::minmax(std::span<const std::uint32_t> candidates, MinMaxMode mode) {
  if (candidates.empty()) throw ContractViolation("cam minmax over an empty candidate set");
  std::vector<std::uint32_t> remaining(candidates.begin(), candidates.end());
  for (std::uint32_t r : remaining) check_row(r);
  std::sort(remaining.begin(), remaining.end());
  remaining.erase(std::unique(remaining.begin(), remaining.end()), remaining.end());
  const std::uint64_t charged_bits = static_cast<std::uint64_t>(geo_.q) * remaining.size();

  std::uint64_t iterations = 0;
  const std::uint32_t wanted = mode == MinMaxMode::Max ? 1u : 0u;
  for (int bit = static_cast<int>(geo_.q) - 1; bit >= 0 && remaining.size() > 1; --bit) {
    ++iterations;
    std::vector<std::uint32_t> keep;
    for (std::uint32_t r : remaining) {
      if (((confidence_[r] >> bit) & 1u) == wanted) keep.push_back(r);
    }
    // Row exclusion only when the position discriminates.
    if (!keep.empty() && keep.size() < remaining.size()) remaining = std::move(keep);
  }
  ledger_.charge(CamOp::MinMax, charged_bits);
  ledger_.add_minmax_iterations(iterations);
  return remaining.front();  // priority encoder: lowest address
}

Sdr CamArray::predict(std::uint32_t row) {
  check_valid(row);
  const std::uint64_t* stored = &next_[row * words_per_row_];
  auto stored_bit = [stored](std::uint32_t b) { return (stored[b / 64] >> (b % 64)) & 1u; };

  // One Q-bit SIPO register per subarray, filled over Q precharge/presearch cycles.
  std::vector<std::uint32_t> sipo(geo_.n, 0);
  for (std::uint32_t cycle = 0; cycle < geo_.q; ++cycle) {
    for (std::uint32_t s = 0; s < geo_.n; ++s) {
      sipo[s] = (sipo[s] << 1) | static_cast<std::uint32_t>(stored_bit(s * geo_.q + cycle));
    }
  }
  std::vector<BitIndex> active;
  for (std::uint32_t s = 0; s < geo_.n; ++s) {
    for (std::uint32_t c = 0; c < geo_.q; ++c) {
      if ((sipo[s] >> (geo_.q - 1 - c)) & 1u) active.push_back(s * geo_.q + c);
    }
  }
  ledger_.charge(CamOp::Predict, geo_.word_bits());
  ledger_.add_predict_cycles(geo_.q);
  return Sdr(geo_.word_bits(), std::move(active));
}

std::uint32_t CamArray::valid_rows() const {
  return static_cast<std::uint32_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

std::optional<std::uint32_t> CamArray::lowest_free_row() const {
  auto it = std::find(valid_.begin(), valid_.end(), std::uint8_t{0});
  if (it == valid_.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - valid_.begin());
}

Sdr CamArray::peek(CamStage stage, std::uint32_t row) const {
  check_row(row);
  const auto& words = stage_words(stage);
  std::vector<BitIndex> active;
  for (std::uint32_t b = 0; b < geo_.word_bits(); ++b) {
    if ((words[row * words_per_row_ + b / 64] >> (b % 64)) & 1u) active.push_back(b);
  }
  return Sdr(geo_.word_bits(), std::move(active));
}

CamReflexBackend::CamReflexBackend(CamGeometry geometry, std::size_t capacity)
    : cam_(geometry),
      capacity_(capacity == 0 ? geometry.rows() : capacity),
      last_access_(geometry.rows(), 0),
      pending_(geometry.rows(), 0) {
  if (capacity_ > geometry.rows()) {
    throw ValidationError("rm.capacity " + std::to_string(capacity_) + " exceeds cam rows " +
                          std::to_string(geometry.rows()));
  }
}

void CamReflexBackend::require_width(const Sdr& s) const {
  if (s.width() != cam_.geometry().word_bits()) {
    throw ContractViolation("cam reflex: SDR width " + std::to_string(s.width()) + " != cam word width " +
                            std::to_string(cam_.geometry().word_bits()));
  }
}

std::vector<std::uint32_t> CamReflexBackend::usable(const SearchResult& r) const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t row : r.rows()) {
    if (pending_[row] == 0) out.push_back(row);
  }
  return out;
}

std::size_t CamReflexBackend::size() const { return cam_.valid_rows(); }

ReflexStats CamReflexBackend::stats() const { return {hits_, misses_, evictions_, size()}; }

std::uint32_t CamReflexBackend::allocate_row() {
  for (std::uint32_t r = 0; r < capacity_; ++r) {
    if (!cam_.valid(r)) return r;
  }
  throw ContractViolation("cam reflex: no free row after eviction");
}

std::optional<Sdr> CamReflexBackend::predict_from(std::span<const std::uint32_t> candidates) {
  // Unique match bypasses the confidence stage.
  const std::uint32_t row = candidates.size() == 1 ? candidates.front() : cam_.minmax(candidates, MinMaxMode::Max);
  return cam_.predict(row);
}

std::optional<Sdr> CamReflexBackend::lookup_predict(const Sdr& present) {
  require_width(present);
  const auto rows = usable(cam_.search(CamStage::Present, present));
  if (rows.empty()) {
    ++misses_;
    return std::nullopt;
  }
  const std::uint64_t now = ++clock_;
  for (std::uint32_t r : rows) last_access_[r] = now;
  ++hits_;
  return predict_from(rows);
}

std::optional<Evicted> CamReflexBackend::record(const Sdr& present, const Sdr& next, std::uint64_t now,
                                                std::span<const std::uint32_t> present_matches) {
  const SearchResult by_next = cam_.search(CamStage::Next, next);
  for (std::uint32_t r : present_matches) {
    if (pending_[r] == 0 && by_next.match[r] != 0) {
      const std::uint32_t c = cam_.confidence(r);
      if (c < cam_.geometry().confidence_max()) cam_.write_confidence(r, c + 1);
      last_access_[r] = now;
      return std::nullopt;
    }
  }
  for (std::uint32_t r : present_matches) {
    if (pending_[r] != 0) {
      cam_.write(CamStage::Next, r, next);
      cam_.write_confidence(r, 1);
      pending_[r] = 0;
      last_access_[r] = now;
      return std::nullopt;
    }
  }
  std::optional<Evicted> evicted;
  if (cam_.valid_rows() >= capacity_) evicted = evict_one();
  const std::uint32_t row = allocate_row();
  cam_.write(CamStage::Present, row, present);
  cam_.write(CamStage::Next, row, next);
  cam_.write_confidence(row, 1);
  last_access_[row] = now;
  return evicted;
}

std::optional<Evicted> CamReflexBackend::observe(const Sdr& present, const Sdr& next) {
  require_width(present);
  require_width(next);
  const std::uint64_t now = ++clock_;
  const auto matches = cam_.search(CamStage::Present, present).rows();
  return record(present, next, now, matches);
}

bool CamReflexBackend::decrement(const Sdr& present, const Sdr& wrong_next) {
  require_width(present);
  require_width(wrong_next);
  const auto rows = usable(cam_.search_pair(present, wrong_next));
  if (rows.empty()) return false;
  const std::uint32_t r = rows.front();
  const std::uint32_t c = cam_.confidence(r);
  if (c > 1) cam_.write_confidence(r, c - 1);
  return true;
}

Evicted CamReflexBackend::evict_one() {
  // Host-side scan: lowest (confidence, last access, row).
  std::optional<std::uint32_t> victim;
  for (std::uint32_t r = 0; r < cam_.geometry().rows(); ++r) {
    if (!cam_.valid(r)) continue;
    if (!victim || std::make_tuple(cam_.confidence(r), last_access_[r], r) <
                       std::make_tuple(cam_.confidence(*victim), last_access_[*victim], *victim)) {
      victim = r;
    }
  }
  if (!victim) throw ContractViolation("evict_one on empty reflex table");
  Evicted out{cam_.peek(CamStage::Present, *victim), std::nullopt};
  if (pending_[*victim] == 0) out.next = cam_.peek(CamStage::Next, *victim);
  cam_.update(*victim);
  pending_[*victim] = 0;
  last_access_[*victim] = 0;
  ++evictions_;
  return out;
}

std::optional<Sdr> CamReflexBackend::rm_step_mapped(const Sdr& present, const std::optional<Sdr>& provide_next) {
  require_width(present);
  if (provide_next) require_width(*provide_next);
  const auto all = cam_.search(CamStage::Present, present).rows();
  std::vector<std::uint32_t> rows;
  for (std::uint32_t r : all) {
    if (pending_[r] == 0) rows.push_back(r);
  }

  if (all.empty()) {
    // New present state: claim a row now, fill the next state when it arrives.
    ++misses_;
    const std::uint64_t now = ++clock_;
    if (cam_.valid_rows() >= capacity_) evict_one();
    const std::uint32_t row = allocate_row();
    cam_.write(CamStage::Present, row, present);
    if (provide_next) {
      cam_.write(CamStage::Next, row, *provide_next);
      cam_.write_confidence(row, 1);
    } else {
      pending_[row] = 1;
    }
    last_access_[row] = now;
    return std::nullopt;
  }

  std::optional<Sdr> prediction;
  if (rows.empty()) {
    ++misses_;
  } else {
    ++hits_;
    const std::uint64_t now = ++clock_;
    for (std::uint32_t r : rows) last_access_[r] = now;
    prediction = predict_from(rows);
  }
  if (provide_next) record(present, *provide_next, ++clock_, all);
  return prediction;
}

}  // namespace ahtm
