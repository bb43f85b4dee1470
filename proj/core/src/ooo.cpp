#include "leanmon/ooo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "leanmon/error.hpp"

namespace leanmon {

RecencyCache::RecencyCache(std::uint64_t window_ns, std::size_t capacity, std::uint64_t seed)
    : window_(window_ns), capacity_(capacity) {
  if (capacity == 0) {
    store_.emplace<Unbounded>();
  } else {
    store_.emplace<Bounded>(capacity, seed);
  }
}

RecentFlow* RecencyCache::find(const FlowKey& key) {
  return std::visit(
      [&](auto& s) -> RecentFlow* {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Unbounded>) {
          auto it = s.find(key);
          return it == s.end() ? nullptr : &it->second;
        } else {
          return s.find(key);
        }
      },
      store_);
}

void RecencyCache::put(const FlowKey& key, const RecentFlow& entry) {
  std::visit(
      [&](auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Unbounded>) {
          s[key] = entry;
        } else {
          s.insert(key, entry);
        }
      },
      store_);
  refreshes_.emplace_back(entry.last_ts, key);
}

void RecencyCache::expire(std::uint64_t now) {
  if (now < window_) return;
  const std::uint64_t cutoff = now - window_;
  while (!refreshes_.empty() && refreshes_.front().first < cutoff) {
    const auto [ts, key] = refreshes_.front();
    refreshes_.pop_front();
    RecentFlow* e = find(key);
    if (e == nullptr || e->last_ts != ts) continue;  // refreshed later, or dropped
    std::visit([&](auto& s) { s.erase(key); }, store_);
  }
}

std::size_t RecencyCache::size() const noexcept {
  return std::visit([](const auto& s) { return s.size(); }, store_);
}

std::uint64_t RecencyCache::dropped() const noexcept {
  if (const auto* b = std::get_if<Bounded>(&store_)) return b->dropped();
  return 0;
}

std::size_t RecencyCache::memory_bytes() const noexcept {
  constexpr std::size_t kSlot = FlowKey::kBytes + 8 + 8;
  if (const auto* b = std::get_if<Bounded>(&store_)) return b->capacity() * kSlot;
  return size() * kSlot;
}

std::vector<std::pair<FlowKey, RecentFlow>> RecencyCache::contents() const {
  std::vector<std::pair<FlowKey, RecentFlow>> out;
  std::visit(
      [&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, Unbounded>) {
          for (const auto& [k, v] : s) out.emplace_back(k, v);
        } else {
          s.for_each([&](const FlowKey& k, const RecentFlow& v) { out.emplace_back(k, v); });
        }
      },
      store_);
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

TopTable::TopTable(std::size_t slots) : keys_(slots), weights_(slots, 0) {
  if (slots == 0) throw ConfigError("top table needs at least one slot");
  free_.reserve(slots);
  for (std::size_t i = slots; i-- > 0;) free_.push_back(i);
}

void TopTable::decrement_all(std::uint64_t amount) {
  if (amount == 0) return;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] == 0) continue;
    weights_[i] -= amount;
    if (weights_[i] == 0) {
      index_.erase(keys_[i]);
      free_.push_back(i);
    }
  }
}

void TopTable::absorb(const FlowKey& key, std::uint64_t weight) {
  if (weight == 0) return;
  total_ += weight;
  if (auto it = index_.find(key); it != index_.end()) {
    weights_[it->second] += weight;
    return;
  }
  if (!free_.empty()) {
    const std::size_t z = free_.back();
    free_.pop_back();
    keys_[z] = key;
    weights_[z] = weight;
    index_.emplace(key, z);
    return;
  }
  const auto min_it = std::min_element(weights_.begin(), weights_.end());
  const std::uint64_t min_w = *min_it;
  if (min_w >= weight) {
    decrement_all(weight);
    return;
  }
  // The new key pays min_w like every slot; the emptied slot takes the rest.
  decrement_all(min_w);
  const std::size_t z = free_.back();
  free_.pop_back();
  keys_[z] = key;
  weights_[z] = weight - min_w;
  index_.emplace(key, z);
}

std::optional<std::uint64_t> TopTable::weight(const FlowKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return weights_[it->second];
}

std::vector<HeavyEntry> TopTable::entries() const {
  std::vector<HeavyEntry> out;
  out.reserve(index_.size());
  for (const auto& [k, i] : index_) out.push_back({k, static_cast<double>(weights_[i])});
  rank_and_truncate(out, out.size());
  return out;
}

std::size_t OooConfig::slots_for_budget(std::size_t budget_bytes) {
  const std::size_t s = budget_bytes / 8;
  if (s == 0) throw ConfigError("memory budget too small for a top table");
  return s;
}

std::size_t OooConfig::slots_for_epsilon(double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must be in (0, 1)");
  return static_cast<std::size_t>(std::ceil(1.0 / epsilon));
}

OooTracker::OooTracker(const OooConfig& cfg)
    : cfg_(cfg), cache_(cfg.window_ns, cfg.cache_capacity, cfg.seed), table_(cfg.slots) {}

bool OooTracker::observe(const PacketRecord& p) {
  if (p.type != PacketType::Data) return false;
  // Expiring first makes "in window" exactly ts - last_ts <= window.
  cache_.expire(p.ts);
  bool out_of_order = false;
  RecentFlow* e = cache_.find(p.key);
  if (e == nullptr) {
    cache_.put(p.key, RecentFlow{p.seq, p.ts});
    return false;
  }
  RecentFlow updated = *e;
  if (p.seq <= updated.max_seq) {
    table_.absorb(p.key, cfg_.weight == WeightMode::Bytes ? p.size : 1);
    out_of_order = true;
  } else {
    updated.max_seq = p.seq;
  }
  updated.last_ts = p.ts;
  cache_.put(p.key, updated);
  return out_of_order;
}

HeavyReport OooTracker::topk(std::size_t k) const {
  HeavyReport r;
  r.entries = table_.entries();
  r.total = static_cast<double>(table_.total_weight());
  rank_and_truncate(r.entries, k);
  return r;
}

}  // namespace leanmon
