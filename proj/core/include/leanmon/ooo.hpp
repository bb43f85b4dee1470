#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "leanmon/cuckoo.hpp"
#include "leanmon/heavy_report.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

inline constexpr std::uint64_t kDefaultWindowNs = 3'000'000;  // 3 ms
inline constexpr std::size_t kDefaultCacheCapacity = std::size_t{1} << 16;

/// Per-flow state for flows seen within the recency window.
struct RecentFlow {
  std::uint64_t max_seq = 0;
  std::uint64_t last_ts = 0;

  friend bool operator==(const RecentFlow&, const RecentFlow&) = default;
};

/// Flows with a packet in the last `window` nanoseconds. Capacity 0 means an
/// unbounded hash map; otherwise a two-way cuckoo table that drops entries
/// on insertion failure. Expiry is lazy, driven by a queue of refresh times.
class RecencyCache {
 public:
  RecencyCache(std::uint64_t window_ns, std::size_t capacity, std::uint64_t seed = 0);

  [[nodiscard]] RecentFlow* find(const FlowKey& key);
  void put(const FlowKey& key, const RecentFlow& entry);

  /// Removes flows whose last packet is older than now - window.
  void expire(std::uint64_t now);

  [[nodiscard]] std::size_t size() const noexcept;
  [[nodiscard]] std::uint64_t dropped() const noexcept;
  [[nodiscard]] std::uint64_t window() const noexcept { return window_; }
  [[nodiscard]] bool bounded() const noexcept { return capacity_ != 0; }
  /// Bytes for the cache slots (key + max_seq + last_ts per slot).
  [[nodiscard]] std::size_t memory_bytes() const noexcept;

  [[nodiscard]] std::vector<std::pair<FlowKey, RecentFlow>> contents() const;

 private:
  using Unbounded = std::unordered_map<FlowKey, RecentFlow>;
  using Bounded = CuckooMap<FlowKey, RecentFlow>;

  std::uint64_t window_;
  std::size_t capacity_;
  std::variant<Unbounded, Bounded> store_;
  std::deque<std::pair<std::uint64_t, FlowKey>> refreshes_;
};

/// Weighted Misra-Gries summary with `slots` counters. Any key whose total
/// weight exceeds W / (slots + 1) keeps a slot, where W is the total weight
/// absorbed; stored weights never exceed true weights.
class TopTable {
 public:
  explicit TopTable(std::size_t slots);

  void absorb(const FlowKey& key, std::uint64_t weight);

  [[nodiscard]] std::optional<std::uint64_t> weight(const FlowKey& key) const;
  /// Occupied slots (weight > 0).
  [[nodiscard]] std::vector<HeavyEntry> entries() const;
  [[nodiscard]] std::size_t slots() const noexcept { return keys_.size(); }
  [[nodiscard]] std::size_t occupied() const noexcept { return index_.size(); }
  [[nodiscard]] std::uint64_t total_weight() const noexcept { return total_; }

 private:
  void decrement_all(std::uint64_t amount);

  std::vector<FlowKey> keys_;
  std::vector<std::uint64_t> weights_;  // 0 means free
  std::unordered_map<FlowKey, std::size_t> index_;
  std::vector<std::size_t> free_;
  std::uint64_t total_ = 0;
};

enum class WeightMode : std::uint8_t { Bytes, Packets };

struct OooConfig {
  std::size_t slots = 100;  // ceil(1 / epsilon)
  std::uint64_t window_ns = kDefaultWindowNs;
  std::size_t cache_capacity = kDefaultCacheCapacity;  // 0 = unbounded
  WeightMode weight = WeightMode::Bytes;
  std::uint64_t seed = 0;

  /// Slot count from a register budget of 8 bytes per slot (32-bit key
  /// fingerprint plus 32-bit counter).
  [[nodiscard]] static std::size_t slots_for_budget(std::size_t budget_bytes);
  [[nodiscard]] static std::size_t slots_for_epsilon(double epsilon);
};

/// Tracks flows with the most out-of-order weight. A DATA packet is out of
/// order when its flow had a packet within the window and its seq does not
/// exceed the flow's max seq; such packets feed the TopTable.
class OooTracker {
 public:
  explicit OooTracker(const OooConfig& cfg);

  /// Returns true when the packet counted as out of order.
  bool observe(const PacketRecord& p);

  [[nodiscard]] HeavyReport topk(std::size_t k) const;

  [[nodiscard]] const TopTable& table() const noexcept { return table_; }
  [[nodiscard]] const RecencyCache& cache() const noexcept { return cache_; }
  [[nodiscard]] const OooConfig& config() const noexcept { return cfg_; }
  /// Total out-of-order weight seen (P).
  [[nodiscard]] std::uint64_t total_weight() const noexcept { return table_.total_weight(); }

 private:
  OooConfig cfg_;
  RecencyCache cache_;
  TopTable table_;
};

}  // namespace leanmon
