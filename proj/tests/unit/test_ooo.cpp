#include <gtest/gtest.h>

#include <map>
#include <random>

#include "fixtures.hpp"
#include "leanmon/error.hpp"
#include "leanmon/ooo.hpp"

namespace leanmon {
namespace {

using test::data;
using test::nth_key;

constexpr std::uint64_t kMs = 1'000'000;

OooConfig unbounded(std::size_t slots = 10) {
  OooConfig c;
  c.slots = slots;
  c.cache_capacity = 0;
  return c;
}

TEST(Ooo, MonotoneFlowRecordsNothing) {
  OooTracker t(unbounded());
  const FlowKey k = nth_key(1);
  for (std::uint64_t s = 1; s <= 4; ++s) EXPECT_FALSE(t.observe(data(k, s, s * 100'000)));
  EXPECT_EQ(t.total_weight(), 0u);
  EXPECT_TRUE(t.topk(10).entries.empty());
}

TEST(Ooo, LatePacketInWindowCounts) {
  OooTracker t(unbounded());
  const FlowKey k = nth_key(1);
  t.observe(data(k, 1, 0));
  t.observe(data(k, 3, 1 * kMs));
  EXPECT_TRUE(t.observe(data(k, 2, 2 * kMs)));
  EXPECT_EQ(t.table().weight(k), 100u);
}

TEST(Ooo, LatePacketAfterExpiryStartsFresh) {
  OooTracker t(unbounded());
  const FlowKey k = nth_key(1);
  t.observe(data(k, 1, 0));
  t.observe(data(k, 3, 1 * kMs));
  EXPECT_FALSE(t.observe(data(k, 2, 6 * kMs)));
  EXPECT_FALSE(t.table().weight(k).has_value());
  const auto contents = t.cache().contents();
  ASSERT_EQ(contents.size(), 1u);
  EXPECT_EQ(contents[0].second.max_seq, 2u);
}

TEST(Ooo, WindowBoundaryIsInclusive) {
  OooTracker t(unbounded());
  const FlowKey k = nth_key(1);
  t.observe(data(k, 5, 0));
  EXPECT_TRUE(t.observe(data(k, 4, kDefaultWindowNs)));
}

TEST(Ooo, PacketModeWeighsOne) {
  OooConfig c = unbounded();
  c.weight = WeightMode::Packets;
  OooTracker t(c);
  const FlowKey k = nth_key(1);
  t.observe(data(k, 3, 0, 1500));
  t.observe(data(k, 1, 1, 1500));
  t.observe(data(k, 2, 2, 1500));
  EXPECT_EQ(t.table().weight(k), 2u);
}

TEST(Ooo, LoneFlowWeightIsExact) {
  OooTracker t(unbounded(10));
  const FlowKey k = nth_key(1);
  std::uint64_t expected = 0;
  std::uint64_t ts = 0;
  for (std::uint64_t s = 1; s <= 300; ++s) {
    t.observe(data(k, s + 1, ts += 1000, 100));
    t.observe(data(k, s, ts += 1000, 40));
    expected += 40;
  }
  EXPECT_EQ(t.table().weight(k), expected);
  EXPECT_EQ(t.topk(10).entries.size(), 1u);
}

TEST(Ooo, NonDataIgnored) {
  OooTracker t(unbounded());
  EXPECT_FALSE(t.observe(test::packet(nth_key(1), PacketType::Ack, 0, 1, 1)));
  EXPECT_EQ(t.cache().size(), 0u);
}

TEST(OooConfig, SlotSizing) {
  EXPECT_EQ(OooConfig::slots_for_budget(40'000), 5000u);
  EXPECT_EQ(OooConfig::slots_for_epsilon(0.01), 100u);
  EXPECT_THROW((void)OooConfig::slots_for_budget(4), ConfigError);
  EXPECT_THROW((void)OooConfig::slots_for_epsilon(0), ConfigError);
  EXPECT_THROW(TopTable(0), ConfigError);
}

// Replay oracle: per flow, the out-of-order weight and the live cache state.
struct Replay {
  std::map<FlowKey, std::uint64_t> weight;
  std::map<FlowKey, RecentFlow> recent;
  std::uint64_t total = 0;
};

Replay replay(const std::vector<PacketRecord>& trace, std::uint64_t window) {
  Replay r;
  for (const auto& p : trace) {
    auto it = r.recent.find(p.key);
    if (it == r.recent.end() || p.ts - it->second.last_ts > window) {
      r.recent[p.key] = RecentFlow{p.seq, p.ts};
      continue;
    }
    if (p.seq <= it->second.max_seq) {
      r.weight[p.key] += p.size;
      r.total += p.size;
    } else {
      it->second.max_seq = p.seq;
    }
    it->second.last_ts = p.ts;
  }
  const std::uint64_t now = trace.empty() ? 0 : trace.back().ts;
  std::erase_if(r.recent, [&](const auto& e) { return now - e.second.last_ts > window; });
  return r;
}

std::vector<PacketRecord> random_trace(std::mt19937_64& rng, std::size_t flows, std::size_t packets) {
  std::vector<std::uint64_t> next(flows, 1);
  std::vector<PacketRecord> out;
  std::uint64_t ts = 0;
  for (std::size_t i = 0; i < packets; ++i) {
    // Skewed flow choice so a few flows dominate.
    const std::size_t f = std::min<std::size_t>(flows - 1, static_cast<std::size_t>(
                                                               std::pow(rng() % 10000 / 10000.0, 3) * flows));
    std::uint64_t seq = next[f]++;
    if (rng() % 8 == 0 && seq > 3) seq -= 1 + rng() % 3;
    ts += rng() % (kMs / 2);
    out.push_back(data(nth_key(static_cast<std::uint32_t>(f)), seq, ts,
                       static_cast<std::uint32_t>(40 + rng() % 1460)));
  }
  return out;
}

TEST(Ooo, CacheMatchesReplayState) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const auto trace = random_trace(rng, 200, 5000);
    OooTracker t(unbounded(50));
    for (const auto& p : trace) t.observe(p);
    const Replay r = replay(trace, kDefaultWindowNs);
    std::vector<std::pair<FlowKey, RecentFlow>> want(r.recent.begin(), r.recent.end());
    EXPECT_EQ(t.cache().contents(), want);
  }
}

TEST(Ooo, MisraGriesKeepsHeavyFlowsAndNeverOverestimates) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto trace = random_trace(rng, 300, 4000);
    const std::size_t slots = 5 + rng() % 20;
    OooTracker t(unbounded(slots));
    for (const auto& p : trace) t.observe(p);
    const Replay r = replay(trace, kDefaultWindowNs);
    ASSERT_EQ(t.total_weight(), r.total);
    const double eps = 1.0 / static_cast<double>(slots);
    for (const auto& [k, w] : r.weight) {
      if (static_cast<double>(w) > eps * static_cast<double>(r.total)) {
        EXPECT_TRUE(t.table().weight(k).has_value()) << "trial " << trial;
      }
    }
    EXPECT_LE(t.table().occupied(), slots);
    for (const auto& e : t.table().entries()) {
      EXPECT_GT(e.value, 0);
      EXPECT_LE(e.value, static_cast<double>(r.weight.at(e.key)));
    }
  }
}

TEST(TopTable, WeightedReplacementChargesMinimum) {
  TopTable t(2);
  t.absorb(nth_key(1), 10);
  t.absorb(nth_key(2), 3);
  t.absorb(nth_key(3), 8);  // min 3: slots drop to 7 and 0, newcomer keeps 5
  EXPECT_EQ(t.weight(nth_key(1)), 7u);
  EXPECT_FALSE(t.weight(nth_key(2)).has_value());
  EXPECT_EQ(t.weight(nth_key(3)), 5u);
  t.absorb(nth_key(4), 2);  // below min: everyone pays 2
  EXPECT_EQ(t.weight(nth_key(1)), 5u);
  EXPECT_EQ(t.weight(nth_key(3)), 3u);
  EXPECT_FALSE(t.weight(nth_key(4)).has_value());
  EXPECT_EQ(t.total_weight(), 23u);
}

TEST(RecencyCache, BoundedCacheCountsDrops) {
  RecencyCache c(kDefaultWindowNs, 8, 1);
  EXPECT_TRUE(c.bounded());
  for (std::uint32_t i = 0; i < 100; ++i) c.put(nth_key(i), RecentFlow{1, 0});
  EXPECT_LE(c.size(), 8u);
  EXPECT_GT(c.dropped(), 0u);
  EXPECT_EQ(c.memory_bytes(), 8u * (FlowKey::kBytes + 16));
}

TEST(RecencyCache, ExpiryHonorsRefresh) {
  RecencyCache c(3 * kMs, 0);
  c.put(nth_key(1), RecentFlow{1, 0});
  c.put(nth_key(2), RecentFlow{1, 0});
  c.put(nth_key(1), RecentFlow{2, 2 * kMs});
  c.expire(4 * kMs);
  EXPECT_NE(c.find(nth_key(1)), nullptr);
  EXPECT_EQ(c.find(nth_key(2)), nullptr);
}

}  // namespace
}  // namespace leanmon
