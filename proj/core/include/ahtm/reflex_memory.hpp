#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <unordered_map>
#include <vector>

#include "ahtm/sdr.hpp"

namespace ahtm {

/// How the table spends its capacity.
enum class ReflexLayout {
  /// One entry per present state holding all its successors. Capacity counts
  /// present states; eviction drops a whole entry; prediction ties go to the
  /// most recently observed successor, then the lowest fingerprint.
  Keyed,
  /// One slot per (present, next) pair, allocated lowest-free-first, the way
  /// the CAM stores rows. Capacity counts pairs; eviction drops a single pair;
  /// prediction ties go to the lowest slot.
  RowPerPair,
};

struct ReflexConfig {
  std::size_t capacity = 2048;
  ReflexLayout layout = ReflexLayout::Keyed;
  /// Saturation ceiling for recurrence counts; 0 means unbounded.
  std::uint64_t count_ceiling = 0;
};

struct Evicted {
  Sdr present;
  /// Set when a single pair was removed (RowPerPair / CAM).
  std::optional<Sdr> next;

  friend bool operator==(const Evicted&, const Evicted&) = default;
};

struct ReflexStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::size_t size = 0;

  friend bool operator==(const ReflexStats&, const ReflexStats&) = default;
};

/// First-order transition memory contract shared by the software table and
/// the CAM-backed implementation. Given the same operation stream, every
/// implementation with the same layout must produce the same predictions and
/// eviction victims.
class ReflexBackend {
 public:
  virtual ~ReflexBackend() = default;

  /// Highest-count successor of `present`, or nothing for an unknown key.
  /// Refreshes the key's access stamp.
  virtual std::optional<Sdr> lookup_predict(const Sdr& present) = 0;
  /// Counts one present -> next transition, evicting first when a new slot
  /// would exceed capacity.
  virtual std::optional<Evicted> observe(const Sdr& present, const Sdr& next) = 0;
  /// Lowers the pair's count by one, never below 1. Returns false (and
  /// changes nothing) when the pair is absent.
  virtual bool decrement(const Sdr& present, const Sdr& wrong_next) = 0;
  /// Throws ContractViolation on an empty table.
  virtual Evicted evict_one() = 0;
  virtual ReflexStats stats() const = 0;
  virtual std::size_t size() const = 0;
  virtual std::size_t capacity() const = 0;

  std::optional<Evicted> retrain(const Sdr& present, const Sdr& correct_next) { return observe(present, correct_next); }
};

struct ReflexSuccessor {
  Sdr next;
  std::uint64_t count = 0;
  std::uint64_t last_observed = 0;
  // RowPerPair bookkeeping.
  std::uint64_t last_access = 0;
  std::uint32_t slot = 0;

  friend bool operator==(const ReflexSuccessor&, const ReflexSuccessor&) = default;
};

struct ReflexEntry {
  Sdr present;
  std::vector<ReflexSuccessor> successors;
  std::uint64_t last_access = 0;

  std::uint64_t total_count() const;
  friend bool operator==(const ReflexEntry&, const ReflexEntry&) = default;
};

/// Dictionary-backed reflex table.
class ReflexTable final : public ReflexBackend {
 public:
  explicit ReflexTable(ReflexConfig cfg = {});

  std::optional<Sdr> lookup_predict(const Sdr& present) override;
  std::optional<Evicted> observe(const Sdr& present, const Sdr& next) override;
  bool decrement(const Sdr& present, const Sdr& wrong_next) override;
  Evicted evict_one() override;
  ReflexStats stats() const override;
  std::size_t size() const override;
  std::size_t capacity() const override { return cfg_.capacity; }

  const ReflexConfig& config() const noexcept { return cfg_; }
  std::uint64_t step_clock() const noexcept { return clock_; }
  const ReflexEntry* find(const Sdr& present) const;
  std::size_t entry_count() const noexcept { return entries_.size(); }
  /// Entries sorted by present fingerprint.
  std::vector<const ReflexEntry*> sorted_entries() const;

  /// JSON lines, one entry per line, sorted by present fingerprint.
  void dump(std::ostream& out) const;
  /// Throws ValidationError on malformed lines.
  static ReflexTable restore(ReflexConfig cfg, std::istream& in);

 private:
  std::uint64_t cap(std::uint64_t count) const;
  const ReflexSuccessor* best_successor(const ReflexEntry& e) const;

  ReflexConfig cfg_;
  std::unordered_map<Fingerprint, ReflexEntry> entries_;
  std::uint64_t clock_ = 0;
  std::size_t pairs_ = 0;
  std::set<std::uint32_t> free_slots_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t evictions_ = 0;
};

}  // namespace ahtm
