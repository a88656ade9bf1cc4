#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ahtm {

using BitIndex = std::uint32_t;

/// Sparse distributed representation: a fixed-width binary vector stored as
/// its ascending list of active bit indices.
///
/// Values are immutable once built. Construction sorts and de-duplicates the
/// given indices, so any two Sdrs describing the same bit pattern compare
/// equal and share a fingerprint.
class Sdr {
 public:
  Sdr() = default;
  explicit Sdr(std::uint32_t width);
  /// Throws ContractViolation if any index is >= width.
  Sdr(std::uint32_t width, std::vector<BitIndex> active);

  static Sdr from_dense(std::span<const std::uint8_t> bits);

  std::uint32_t width() const noexcept { return width_; }
  std::span<const BitIndex> active() const noexcept { return active_; }
  std::size_t size() const noexcept { return active_.size(); }
  bool empty() const noexcept { return active_.empty(); }
  bool test(BitIndex bit) const;

  std::vector<std::uint8_t> to_dense() const;

  /// `width:idx1,idx2,...`
  std::string to_string() const;
  static Sdr parse(std::string_view text);

  /// Cached hash of (width, active).
  std::size_t hash() const noexcept { return hash_; }

  friend bool operator==(const Sdr& a, const Sdr& b) noexcept {
    return a.width_ == b.width_ && a.hash_ == b.hash_ && a.active_ == b.active_;
  }
  /// Total order: width first, then lexicographic over active indices.
  friend std::strong_ordering operator<=>(const Sdr& a, const Sdr& b) noexcept;

 private:
  std::uint32_t width_ = 0;
  std::vector<BitIndex> active_;
  std::size_t hash_ = 0;
};

/// Canonical lookup key for an Sdr. Equality is exact bit-pattern equality;
/// the cached hash only accelerates lookups, so keys never collide.
class Fingerprint {
 public:
  Fingerprint() = default;
  explicit Fingerprint(Sdr sdr) : sdr_(std::move(sdr)) {}

  const Sdr& sdr() const noexcept { return sdr_; }
  std::size_t hash() const noexcept { return sdr_.hash(); }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
  friend std::strong_ordering operator<=>(const Fingerprint& a, const Fingerprint& b) noexcept {
    return a.sdr_ <=> b.sdr_;
  }

 private:
  Sdr sdr_;
};

Fingerprint fingerprint(const Sdr& a);

/// |a.active ∩ b.active|. Throws ContractViolation on width mismatch.
std::size_t overlap_count(const Sdr& a, const Sdr& b);

/// Fraction of the `width` bit positions on which a and b agree, zeros
/// included. Throws ContractViolation on width mismatch or zero width.
double hamming_similarity(const Sdr& a, const Sdr& b);

}  // namespace ahtm

template <>
struct std::hash<ahtm::Sdr> {
  std::size_t operator()(const ahtm::Sdr& s) const noexcept { return s.hash(); }
};

template <>
struct std::hash<ahtm::Fingerprint> {
  std::size_t operator()(const ahtm::Fingerprint& f) const noexcept { return f.hash(); }
};
