#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <tuple>
#include <random>
#include <vector>

#include "ahtm/sdr.hpp"

namespace ahtm::fixture {

inline Sdr random_sdr(std::uint32_t width, std::uint32_t active, std::mt19937_64& rng) {
  std::vector<BitIndex> all(width);
  std::iota(all.begin(), all.end(), BitIndex{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(active);
  return Sdr(width, std::move(all));
}

// Dense reference for 1 - |p & a| / |a|.
inline double dense_ars(const Sdr& predicted, const Sdr& actual) {
  const auto p = predicted.to_dense();
  const auto a = actual.to_dense();
  std::size_t both = 0, nz = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    both += static_cast<std::size_t>(p[i] & a[i]);
    nz += a[i];
  }
  return 1.0 - static_cast<double>(both) / static_cast<double>(nz);
}

// Brute-force keyed transition table: flat lists scanned on every call.
class ShadowReflex {
 public:
  explicit ShadowReflex(std::size_t capacity) : capacity_(capacity) {}

  std::optional<Sdr> lookup(const Sdr& present) {
    auto* k = key(present);
    if (k == nullptr) return std::nullopt;
    k->last_access = ++clock_;
    const Pair* best = nullptr;
    for (const auto& p : pairs_) {
      if (p.present != present) continue;
      if (best == nullptr || std::make_tuple(p.count, p.last_observed) > std::make_tuple(best->count, best->last_observed) ||
          (p.count == best->count && p.last_observed == best->last_observed && p.next < best->next)) {
        best = &p;
      }
    }
    return best->next;
  }

  std::optional<Sdr> observe(const Sdr& present, const Sdr& next) {
    const std::uint64_t now = ++clock_;
    for (auto& p : pairs_) {
      if (p.present == present && p.next == next) {
        ++p.count;
        p.last_observed = now;
        key(present)->last_access = now;
        return std::nullopt;
      }
    }
    std::optional<Sdr> victim;
    if (key(present) == nullptr) {
      if (keys_.size() >= capacity_) victim = evict();
      keys_.push_back({present, 0});
    }
    key(present)->last_access = now;
    pairs_.push_back({present, next, 1, now});
    return victim;
  }

  void decrement(const Sdr& present, const Sdr& next) {
    for (auto& p : pairs_) {
      if (p.present == present && p.next == next && p.count > 1) --p.count;
    }
  }

  std::size_t size() const { return keys_.size(); }

 private:
  struct Key {
    Sdr present;
    std::uint64_t last_access;
  };
  struct Pair {
    Sdr present;
    Sdr next;
    std::uint64_t count;
    std::uint64_t last_observed;
  };

  Key* key(const Sdr& present) {
    for (auto& k : keys_) {
      if (k.present == present) return &k;
    }
    return nullptr;
  }

  Sdr evict() {
    std::size_t victim = 0;
    auto rank = [this](const Key& k) {
      std::uint64_t total = 0;
      for (const auto& p : pairs_) total += p.present == k.present ? p.count : 0;
      return std::make_tuple(total, k.last_access);
    };
    for (std::size_t i = 1; i < keys_.size(); ++i) {
      const auto a = rank(keys_[i]);
      const auto b = rank(keys_[victim]);
      if (a < b || (a == b && keys_[i].present < keys_[victim].present)) victim = i;
    }
    Sdr out = keys_[victim].present;
    keys_.erase(keys_.begin() + static_cast<std::ptrdiff_t>(victim));
    std::erase_if(pairs_, [&out](const Pair& p) { return p.present == out; });
    return out;
  }

  std::size_t capacity_;
  std::uint64_t clock_ = 0;
  std::vector<Key> keys_;
  std::vector<Pair> pairs_;
};

}  // namespace ahtm::fixture
