#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "leanmon/packet.hpp"

namespace leanmon {

struct HeavyEntry {
  FlowKey key;
  double value = 0;

  friend bool operator==(const HeavyEntry&, const HeavyEntry&) = default;
};

/// Ranked flows plus the normalization the detector thresholds against.
struct HeavyReport {
  std::vector<HeavyEntry> entries;  // descending by value, ties by key
  double total = 0;                 // running total behind the threshold
  double threshold = 0;             // entries all satisfy value >= threshold

  [[nodiscard]] std::vector<FlowKey> keys() const {
    std::vector<FlowKey> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.key);
    return out;
  }
};

/// Sorts descending by value with ties broken by ascending key, then keeps k.
inline void rank_and_truncate(std::vector<HeavyEntry>& entries, std::size_t k) {
  std::sort(entries.begin(), entries.end(), [](const HeavyEntry& a, const HeavyEntry& b) {
    if (a.value != b.value) return a.value > b.value;
    return a.key < b.key;
  });
  if (entries.size() > k) entries.resize(k);
}

}  // namespace leanmon
