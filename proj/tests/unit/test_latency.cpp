#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "leanmon/error.hpp"
#include "leanmon/latency.hpp"

namespace leanmon {
namespace {

using test::nth_key;
using test::packet;

LatencyConfig config(std::uint32_t buckets = 2000, std::uint64_t seed = 1) {
  LatencyConfig c;
  c.shape = {5, buckets};
  c.seed = seed;
  return c;
}

TEST(Latency, SingleHandshakeIsExact) {
  LatencyDetector d(config());
  const FlowKey k = nth_key(1);
  EXPECT_EQ(d.observe(packet(k, PacketType::Syn, 10'000)), ObserveStatus::Applied);
  EXPECT_EQ(d.observe(packet(k.reversed(), PacketType::SynAck, 25'000)), ObserveStatus::Applied);
  EXPECT_EQ(d.estimate(k), 15);
  EXPECT_EQ(d.estimate(k.reversed()), 15);
  EXPECT_EQ(d.accrued_rtt(), 15);
}

TEST(Latency, UnansweredRequestOverestimates) {
  LatencyDetector d(config());
  const FlowKey k = nth_key(1);
  d.observe(packet(k, PacketType::Syn, 10'000));
  EXPECT_EQ(d.estimate(k), 10);
}

TEST(Latency, FilterSkipsOtherTypes) {
  LatencyDetector d(config());
  const FlowKey k = nth_key(1);
  EXPECT_EQ(d.observe(packet(k, PacketType::Data, 1000)), ObserveStatus::Skipped);
  EXPECT_EQ(d.observe(packet(k.reversed(), PacketType::Ack, 2000)), ObserveStatus::Skipped);
  EXPECT_EQ(d.skipped(), 2u);
  EXPECT_EQ(d.estimate(k), 0);

  LatencyConfig all = config();
  all.filter = TypeFilter::All;
  LatencyDetector e(all);
  EXPECT_EQ(e.observe(packet(k, PacketType::Data, 1000)), ObserveStatus::Applied);
  EXPECT_EQ(e.observe(packet(k, PacketType::Fin, 1500)), ObserveStatus::Skipped);
  EXPECT_EQ(e.observe(packet(k.reversed(), PacketType::Ack, 4000)), ObserveStatus::Applied);
  EXPECT_EQ(e.estimate(k), 3);
}

TEST(Latency, PacketsBeforeEpochAreRejected) {
  LatencyConfig c = config();
  c.epoch_start_ns = 1'000'000;
  LatencyDetector d(c);
  EXPECT_EQ(d.observe(packet(nth_key(1), PacketType::Syn, 10)), ObserveStatus::Rejected);
  EXPECT_EQ(d.rejected(), 1u);
  EXPECT_NE(d.last_diagnostic().find("precedes epoch start"), std::string::npos);
  // Epoch-relative time: 1.5 ms -> 0.5 ms = 500 us.
  d.observe(packet(nth_key(2), PacketType::Syn, 1'500'000));
  EXPECT_EQ(d.estimate(nth_key(2)), 500);
}

TEST(Latency, ParseFilter) {
  EXPECT_EQ(parse_type_filter("handshake"), TypeFilter::Handshake);
  EXPECT_EQ(parse_type_filter("data-ack"), TypeFilter::DataAck);
  EXPECT_EQ(parse_type_filter("all"), TypeFilter::All);
  EXPECT_THROW((void)parse_type_filter("x"), ConfigError);
  EXPECT_THROW(LatencyDetector([] {
                 LatencyConfig c;
                 c.time_unit_ns = 0;
                 return c;
               }()),
               ConfigError);
}

struct Handshakes {
  std::vector<PacketRecord> trace;
  std::vector<std::int64_t> rtt_us;
};

Handshakes handshakes(std::size_t flows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Handshakes h;
  std::vector<std::pair<std::uint64_t, PacketRecord>> pkts;
  for (std::size_t i = 0; i < flows; ++i) {
    const FlowKey k = nth_key(static_cast<std::uint32_t>(i));
    const std::uint64_t t = 1000 * (1 + rng() % 1'000'000);
    const std::uint64_t rtt = 1000 * (1 + rng() % 5000);
    h.rtt_us.push_back(static_cast<std::int64_t>(rtt / 1000));
    pkts.push_back({t, packet(k, PacketType::Syn, t)});
    pkts.push_back({t + rtt, packet(k.reversed(), PacketType::SynAck, t + rtt)});
  }
  std::stable_sort(pkts.begin(), pkts.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [t, p] : pkts) h.trace.push_back(p);
  return h;
}

TEST(Latency, WideTableRecoversEveryRtt) {
  const Handshakes h = handshakes(100, 3);
  LatencyDetector d(config(10'000, 3));
  for (const auto& p : h.trace) d.observe(p);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(d.estimate(nth_key(static_cast<std::uint32_t>(i))), h.rtt_us[i]);
    total += h.rtt_us[i];
  }
  EXPECT_EQ(d.accrued_rtt(), total);
}

TEST(Latency, TotalL1OfBalancedTraceIsTimestampSum) {
  const Handshakes h = handshakes(50, 4);
  LatencyDetector d(config(10'000, 4));
  std::int64_t sum = 0;
  for (const auto& p : h.trace) {
    d.observe(p);
    sum += static_cast<std::int64_t>(p.ts / 1000);
  }
  EXPECT_EQ(d.table().total_l1(), sum);
}

TEST(Latency, SwappedEndpointsGiveSameMagnitudes) {
  const Handshakes h = handshakes(300, 5);
  LatencyDetector fwd(config(500, 5)), rev(config(500, 5));
  for (const auto& p : h.trace) {
    fwd.observe(p);
    PacketRecord q = p;
    q.key = p.key.reversed();
    rev.observe(q);
  }
  for (std::uint32_t i = 0; i < 300; ++i) EXPECT_EQ(fwd.estimate(nth_key(i)), rev.estimate(nth_key(i)));
}

TEST(Latency, TopkReturnsAllWhenKExceedsCandidates) {
  const Handshakes h = handshakes(20, 6);
  LatencyDetector d(config(10'000, 6));
  for (const auto& p : h.trace) d.observe(p);
  std::vector<FlowKey> cands;
  for (std::uint32_t i = 0; i < 20; ++i) cands.push_back(i % 2 ? nth_key(i) : nth_key(i).reversed());
  const HeavyReport r = d.topk(cands, 100, 0);
  ASSERT_EQ(r.entries.size(), 20u);
  for (const auto& e : r.entries) EXPECT_EQ(canonicalize(e.key).key(), e.key);
  for (std::size_t i = 1; i < r.entries.size(); ++i) EXPECT_GE(r.entries[i - 1].value, r.entries[i].value);
}

TEST(Latency, UniformBackgroundReportsNothing) {
  // Identical RTTs over many flows: none holds a 5% share of the total.
  std::vector<PacketRecord> trace;
  for (std::uint32_t i = 0; i < 1000; ++i) {
    trace.push_back(packet(nth_key(i), PacketType::Syn, 1000 * (2 * i + 1)));
    trace.push_back(packet(nth_key(i).reversed(), PacketType::SynAck, 1000 * (2 * i + 2)));
  }
  LatencyDetector d(config(2000, 7));
  for (const auto& p : trace) d.observe(p);
  std::vector<FlowKey> cands;
  for (std::uint32_t i = 0; i < 1000; ++i) cands.push_back(nth_key(i));
  EXPECT_TRUE(d.topk(cands, 100, 0.05).entries.empty());
}

TEST(Latency, TopkDedupsBothDirections) {
  LatencyDetector d(config());
  const FlowKey k = nth_key(1);
  d.observe(packet(k, PacketType::Syn, 10'000));
  d.observe(packet(k.reversed(), PacketType::SynAck, 25'000));
  const std::vector<FlowKey> cands{k, k.reversed(), k};
  EXPECT_EQ(d.topk(cands, 10, 0).entries.size(), 1u);
}

}  // namespace
}  // namespace leanmon
