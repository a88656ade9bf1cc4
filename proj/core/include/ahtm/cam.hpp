#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ahtm/reflex_memory.hpp"
#include "ahtm/sdr.hpp"

namespace ahtm {

// Functional + cost model of the three-stage ferroelectric CAM that hosts the
// reflex table in hardware. Matchline physics is reduced to bit-exact match
// semantics; every operation is charged its characterized latency and
// per-bit energy.

struct CamGeometry {
  std::uint32_t n = 128;  // subarrays per array
  std::uint32_t m = 16;   // arrays per stage
  std::uint32_t stages = 3;
  std::uint32_t p = 128;  // rows per subarray
  std::uint32_t q = 8;    // bits per subarray row

  std::uint32_t word_bits() const noexcept { return n * q; }
  std::uint32_t rows() const noexcept { return m * p; }
  std::uint32_t confidence_max() const noexcept { return (1u << q) - 1u; }

  void validate() const;
};

enum class CamOp : std::uint8_t { Write = 0, Search, Update, MinMax, Predict };
inline constexpr std::size_t kCamOpCount = 5;

std::string_view to_string(CamOp op);

struct UnitCost {
  double latency_ns;
  double energy_fj_per_bit;
};

/// Characterized per-operation costs of the AFeCAM array.
inline constexpr std::array<UnitCost, kCamOpCount> kAfeCamUnitCosts{{
    {20.0, 0.16},   // write
    {0.25, 0.22},   // search
    {20.25, 0.54},  // update
    {1.2, 1.76},    // min/max
    {2.3, 1.76},    // predict
}};

/// Accumulates operation counts and the bits each operation touched. Totals
/// are derived from the integer tallies, so they are exact and order-free.
class CostLedger {
 public:
  void charge(CamOp op, std::uint64_t bits);
  void add_predict_cycles(std::uint64_t cycles) { predict_cycles_ += cycles; }
  void add_minmax_iterations(std::uint64_t n) { minmax_iterations_ += n; }

  std::uint64_t count(CamOp op) const { return counts_[static_cast<std::size_t>(op)]; }
  std::uint64_t bits(CamOp op) const { return bits_[static_cast<std::size_t>(op)]; }
  std::uint64_t predict_cycles() const noexcept { return predict_cycles_; }
  std::uint64_t minmax_iterations() const noexcept { return minmax_iterations_; }

  double latency_ns(CamOp op) const;
  double energy_fj(CamOp op) const;
  double latency_ns() const;
  double energy_fj() const;

  void reset() { *this = CostLedger{}; }
  nlohmann::json to_json() const;

  friend bool operator==(const CostLedger&, const CostLedger&) = default;

 private:
  std::array<std::uint64_t, kCamOpCount> counts_{};
  std::array<std::uint64_t, kCamOpCount> bits_{};
  std::uint64_t predict_cycles_ = 0;
  std::uint64_t minmax_iterations_ = 0;
};

enum class CamStage : std::uint8_t { Present = 0, Confidence = 1, Next = 2 };
enum class MinMaxMode : std::uint8_t { Max, Min };

struct SearchResult {
  std::vector<std::uint8_t> match;  // one flag per row
  bool miss = true;                 // all-0/1 block output

  std::vector<std::uint32_t> rows() const;
};

/// Array contents plus the cost ledger.
class CamArray {
 public:
  explicit CamArray(CamGeometry geometry = {});

  const CamGeometry& geometry() const noexcept { return geo_; }
  const CostLedger& ledger() const noexcept { return ledger_; }
  CostLedger& ledger() noexcept { return ledger_; }

  /// Writes a state word (Present/Next stage). Writing the present word
  /// validates the row.
  void write(CamStage stage, std::uint32_t row, const Sdr& word);
  /// Writes a Q-bit confidence counter.
  void write_confidence(std::uint32_t row, std::uint32_t value);

  /// Exact-match search of one state stage over valid rows.
  SearchResult search(CamStage stage, const Sdr& query);
  /// Present and next stages searched together; rows must match both.
  SearchResult search_pair(const Sdr& present, const Sdr& next);

  /// Clears present, next and confidence of a valid row and invalidates it.
  void update(std::uint32_t row);

  /// Bit-serial max/min over the confidence counters of `candidates`;
  /// residual ties resolve to the lowest row address.
  std::uint32_t minmax(std::span<const std::uint32_t> candidates, MinMaxMode mode);

  /// Reads the next-state word of a valid row through the SIPO registers.
  Sdr predict(std::uint32_t row);

  bool valid(std::uint32_t row) const { return valid_.at(row) != 0; }
  std::uint32_t valid_rows() const;
  std::optional<std::uint32_t> lowest_free_row() const;

  // Host-side reads of stored contents; not charged.
  std::uint32_t confidence(std::uint32_t row) const { return confidence_.at(row); }
  Sdr peek(CamStage stage, std::uint32_t row) const;

 private:
  using Word = std::vector<std::uint64_t>;

  void check_row(std::uint32_t row) const;
  void check_valid(std::uint32_t row) const;
  Word pack(const Sdr& word) const;
  std::vector<std::uint64_t>& stage_words(CamStage stage);
  const std::vector<std::uint64_t>& stage_words(CamStage stage) const;
  void match_stage(CamStage stage, const Word& query, std::vector<std::uint8_t>& match) const;

  CamGeometry geo_;
  std::size_t words_per_row_;
  std::vector<std::uint64_t> present_;
  std::vector<std::uint64_t> next_;
  std::vector<std::uint32_t> confidence_;
  std::vector<std::uint8_t> valid_;
  CostLedger ledger_;
};

/// Reflex table mapped onto the CAM. The host keeps per-row access stamps
/// for the eviction scan; counts live in the confidence stage.
class CamReflexBackend final : public ReflexBackend {
 public:
  explicit CamReflexBackend(CamGeometry geometry = {}, std::size_t capacity = 0);

  std::optional<Sdr> lookup_predict(const Sdr& present) override;
  std::optional<Evicted> observe(const Sdr& present, const Sdr& next) override;
  bool decrement(const Sdr& present, const Sdr& wrong_next) override;
  Evicted evict_one() override;
  ReflexStats stats() const override;
  std::size_t size() const override;
  std::size_t capacity() const override { return capacity_; }

  /// Present-state flow in hardware order: search, then write on a miss,
  /// bypass on a unique match, min/max on multiple matches, then predict.
  /// When `provide_next` is set the transition is also recorded.
  std::optional<Sdr> rm_step_mapped(const Sdr& present, const std::optional<Sdr>& provide_next);

  const CamArray& cam() const noexcept { return cam_; }
  CamArray& cam() noexcept { return cam_; }
  const CostLedger& ledger() const noexcept { return cam_.ledger(); }
  bool pending(std::uint32_t row) const { return pending_.at(row) != 0; }

 private:
  void require_width(const Sdr& s) const;
  std::uint32_t allocate_row();
  std::optional<Evicted> record(const Sdr& present, const Sdr& next, std::uint64_t now,
                                std::span<const std::uint32_t> present_matches);
  std::optional<Sdr> predict_from(std::span<const std::uint32_t> present_matches);
  std::vector<std::uint32_t> usable(const SearchResult& r) const;

  CamArray cam_;
  std::size_t capacity_;
  std::vector<std::uint64_t> last_access_;
  std::vector<std::uint8_t> pending_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace ahtm
