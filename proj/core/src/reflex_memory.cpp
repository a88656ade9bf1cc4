#include "ahtm/reflex_memory.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ahtm/error.hpp"
#include "ahtm/log.hpp"

namespace ahtm {

std::uint64_t ReflexEntry::total_count() const {
  std::uint64_t total = 0;
  for (const auto& s : successors) total += s.count;
  return total;
}

ReflexTable::ReflexTable(ReflexConfig cfg) : cfg_(cfg) {
  if (cfg_.capacity == 0) throw ValidationError("rm.capacity must be positive");
  if (cfg_.layout == ReflexLayout::RowPerPair) {
    for (std::uint32_t s = 0; s < cfg_.capacity; ++s) free_slots_.insert(free_slots_.end(), s);
  }
}

std::uint64_t ReflexTable::cap(std::uint64_t count) const {
  return cfg_.count_ceiling == 0 ? count : std::min(count, cfg_.count_ceiling);
}

std::size_t ReflexTable::size() const { return cfg_.layout == ReflexLayout::Keyed ? entries_.size() : pairs_; }

ReflexStats ReflexTable::stats() const { return {hits_, misses_, evictions_, size()}; }

const ReflexEntry* ReflexTable::find(const Sdr& present) const {
  auto it = entries_.find(Fingerprint(present));
  return it == entries_.end() ? nullptr : &it->second;
}

const ReflexSuccessor* ReflexTable::best_successor(const ReflexEntry& e) const {
  const ReflexSuccessor* best = nullptr;
  for (const auto& s : e.successors) {
    if (best == nullptr) {
      best = &s;
      continue;
    }
    if (s.count != best->count) {
      if (s.count > best->count) best = &s;
      continue;
    }
    if (cfg_.layout == ReflexLayout::RowPerPair) {
      if (s.slot < best->slot) best = &s;
    } else if (s.last_observed != best->last_observed) {
      if (s.last_observed > best->last_observed) best = &s;
    } else if (s.next < best->next) {
      best = &s;
    }
  }
  return best;
}

std::optional<Sdr> ReflexTable::lookup_predict(const Sdr& present) {
  auto it = entries_.find(Fingerprint(present));
  if (it == entries_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ReflexEntry& e = it->second;
  e.last_access = ++clock_;
  if (cfg_.layout == ReflexLayout::RowPerPair) {
    for (auto& s : e.successors) s.last_access = clock_;
  }
  ++hits_;
  return best_successor(e)->next;
}

std::optional<Evicted> ReflexTable::observe(const Sdr& present, const Sdr& next) {
  if (present.width() != next.width()) throw ContractViolation("reflex observe: width mismatch");
  const std::uint64_t now = ++clock_;
  Fingerprint key(present);
  auto it = entries_.find(key);
  if (it != entries_.end()) {
    auto& succ = it->second.successors;
    auto s = std::find_if(succ.begin(), succ.end(), [&next](const ReflexSuccessor& x) { return x.next == next; });
    if (s != succ.end()) {
      s->count = cap(s->count + 1);
      s->last_observed = now;
      s->last_access = now;
      it->second.last_access = now;
      return std::nullopt;
    }
  }

  std::optional<Evicted> evicted;
  const bool needs_room = cfg_.layout == ReflexLayout::Keyed ? (it == entries_.end() && entries_.size() >= cfg_.capacity)
                                                             : pairs_ >= cfg_.capacity;
  if (needs_room) {
    evicted = evict_one();
    it = entries_.find(key);
  }
  if (it == entries_.end()) it = entries_.emplace(key, ReflexEntry{present, {}, 0}).first;

  ReflexSuccessor s{next, cap(1), now, now, 0};
  if (cfg_.layout == ReflexLayout::RowPerPair) {
    s.slot = *free_slots_.begin();
    free_slots_.erase(free_slots_.begin());
  }
  it->second.successors.push_back(std::move(s));
  it->second.last_access = now;
  ++pairs_;
  return evicted;
}

bool ReflexTable::decrement(const Sdr& present, const Sdr& wrong_next) {
  auto it = entries_.find(Fingerprint(present));
  if (it != entries_.end()) {
    for (auto& s : it->second.successors) {
      if (s.next == wrong_next) {
        if (s.count > 1) --s.count;
        return true;
      }
    }
  }
  log_debug("reflex decrement: pair absent, ignored");
  return false;
}

Evicted ReflexTable::evict_one() {
  if (entries_.empty()) throw ContractViolation("evict_one on empty reflex table");
  ++evictions_;
  if (cfg_.layout == ReflexLayout::Keyed) {
    auto victim = entries_.end();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (victim == entries_.end()) {
        victim = it;
        continue;
      }
      const auto lhs = std::make_tuple(it->second.total_count(), it->second.last_access);
      const auto rhs = std::make_tuple(victim->second.total_count(), victim->second.last_access);
      if (lhs < rhs || (lhs == rhs && it->first < victim->first)) victim = it;
    }
    Evicted out{victim->second.present, std::nullopt};
    pairs_ -= victim->second.successors.size();
    entries_.erase(victim);
    return out;
  }

  // RowPerPair: lowest (count, last_access, slot) pair.
  ReflexEntry* owner = nullptr;
  std::size_t index = 0;
  for (auto& [key, e] : entries_) {
    for (std::size_t i = 0; i < e.successors.size(); ++i) {
      const auto& s = e.successors[i];
      if (owner != nullptr) {
        const auto& b = owner->successors[index];
        if (std::make_tuple(s.count, s.last_access, s.slot) >= std::make_tuple(b.count, b.last_access, b.slot)) continue;
      }
      owner = &e;
      index = i;
    }
  }
  Evicted out{owner->present, owner->successors[index].next};
  free_slots_.insert(owner->successors[index].slot);
  owner->successors.erase(owner->successors.begin() + static_cast<std::ptrdiff_t>(index));
  --pairs_;
  if (owner->successors.empty()) entries_.erase(Fingerprint(out.present));
  return out;
}

std::vector<const ReflexEntry*> ReflexTable::sorted_entries() const {
  std::vector<const ReflexEntry*> out;
  out.reserve(entries_.size());
  for (const auto& [key, e] : entries_) out.push_back(&e);
  std::sort(out.begin(), out.end(), [](const ReflexEntry* a, const ReflexEntry* b) { return a->present < b->present; });
  return out;
}

void ReflexTable::dump(std::ostream& out) const {
  for (const ReflexEntry* e : sorted_entries()) {
    nlohmann::json line;
    line["present"] = e->present.to_string();
    line["last_access"] = e->last_access;
    auto& succ = line["successors"] = nlohmann::json::array();
    for (const auto& s : e->successors) {
      succ.push_back({{"next", s.next.to_string()},
                      {"count", s.count},
                      {"last_observed", s.last_observed},
                      {"last_access", s.last_access},
                      {"slot", s.slot}});
    }
    out << line.dump() << '\n';
  }
}

ReflexTable ReflexTable::restore(ReflexConfig cfg, std::istream& in) {
  ReflexTable t(cfg);
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty()) continue;
    try {
      const auto line = nlohmann::json::parse(text);
      ReflexEntry e;
      e.present = Sdr::parse(line.at("present").get<std::string>());
      e.last_access = line.at("last_access").get<std::uint64_t>();
      for (const auto& s : line.at("successors")) {
        ReflexSuccessor r;
        r.next = Sdr::parse(s.at("next").get<std::string>());
        r.count = s.at("count").get<std::uint64_t>();
        r.last_observed = s.at("last_observed").get<std::uint64_t>();
        r.last_access = s.value("last_access", std::uint64_t{0});
        r.slot = s.value("slot", std::uint32_t{0});
        if (r.count == 0) throw ValidationError("zero count");
        if (cfg.layout == ReflexLayout::RowPerPair) {
          if (t.free_slots_.erase(r.slot) == 0) throw ValidationError("duplicate or out-of-range slot");
        }
        t.clock_ = std::max({t.clock_, r.last_observed, r.last_access});
        e.successors.push_back(std::move(r));
        ++t.pairs_;
      }
      if (e.successors.empty()) throw ValidationError("entry without successors");
      t.clock_ = std::max(t.clock_, e.last_access);
      if (!t.entries_.emplace(Fingerprint(e.present), e).second) throw ValidationError("duplicate present state");
    } catch (const std::exception& ex) {
      throw ValidationError("reflex dump line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (t.size() > t.capacity()) throw ValidationError("reflex dump exceeds capacity");
  return t;
}

}  // namespace ahtm
