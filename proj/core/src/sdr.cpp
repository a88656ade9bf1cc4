#include "ahtm/sdr.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "ahtm/error.hpp"

namespace ahtm {
namespace {

std::size_t hash_active(std::uint32_t width, const std::vector<BitIndex>& active) {
  // FNV-1a over the width and every index.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(width);
  for (BitIndex i : active) mix(i);
  return static_cast<std::size_t>(h);
}

std::uint32_t parse_uint(std::string_view s, std::string_view whole) {
  std::uint32_t value = 0;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (s.empty() || ec != std::errc{} || ptr != last) {
    throw InputError("malformed SDR text: '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Sdr::Sdr(std::uint32_t width) : width_(width), hash_(hash_active(width, active_)) {}

Sdr::Sdr(std::uint32_t width, std::vector<BitIndex> active) : width_(width), active_(std::move(active)) {
  std::sort(active_.begin(), active_.end());
  active_.erase(std::unique(active_.begin(), active_.end()), active_.end());
  if (!active_.empty() && active_.back() >= width_) {
    throw ContractViolation("SDR index " + std::to_string(active_.back()) + " out of range for width " +
                            std::to_string(width_));
  }
  hash_ = hash_active(width_, active_);
}

Sdr Sdr::from_dense(std::span<const std::uint8_t> bits) {
  std::vector<BitIndex> active;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != 0) active.push_back(static_cast<BitIndex>(i));
  }
  return Sdr(static_cast<std::uint32_t>(bits.size()), std::move(active));
}

bool Sdr::test(BitIndex bit) const { return std::binary_search(active_.begin(), active_.end(), bit); }

std::vector<std::uint8_t> Sdr::to_dense() const {
  std::vector<std::uint8_t> bits(width_, 0);
  for (BitIndex i : active_) bits[i] = 1;
  return bits;
}

std::string Sdr::to_string() const {
  std::ostringstream out;
  out << width_ << ':';
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (i != 0) out << ',';
    out << active_[i];
  }
  return out.str();
}

Sdr Sdr::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw InputError("malformed SDR text: '" + std::string(text) + "'");
  }
  const std::uint32_t width = parse_uint(text.substr(0, colon), text);
  std::vector<BitIndex> active;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    active.push_back(parse_uint(rest.substr(0, comma), text));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (!std::is_sorted(active.begin(), active.end()) ||
      std::adjacent_find(active.begin(), active.end()) != active.end()) {
    throw InputError("SDR text indices must be strictly ascending: '" + std::string(text) + "'");
  }
  return Sdr(width, std::move(active));
}

std::strong_ordering operator<=>(const Sdr& a, const Sdr& b) noexcept {
  if (auto c = a.width_ <=> b.width_; c != 0) return c;
  return std::lexicographical_compare_three_way(a.active_.begin(), a.active_.end(), b.active_.begin(),
                                                b.active_.end());
}

Fingerprint fingerprint(const Sdr& a) { return Fingerprint(a); }

std::size_t overlap_count(const Sdr& a, const Sdr& b) {
  if (a.width() != b.width()) {
    throw ContractViolation("overlap_count: width mismatch " + std::to_string(a.width()) + " vs " +
                            std::to_string(b.width()));
  }
  std::size_t count = 0;
  auto ia = a.active().begin();
  auto ib = b.active().begin();
  while (ia != a.active().end() && ib != b.active().end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++count;
      ++ia;
      ++ib;
    }
  }
  return count;
}

double hamming_similarity(const Sdr& a, const Sdr& b) {
  if (a.width() != b.width()) {
    throw ContractViolation("hamming_similarity: width mismatch");
  }
  if (a.width() == 0) throw ContractViolation("hamming_similarity: zero-width SDR");
  const std::size_t common = overlap_count(a, b);
  const std::size_t differing = a.size() + b.size() - 2 * common;
  return 1.0 - static_cast<double>(differing) / static_cast<double>(a.width());
}

}  // namespace ahtm
