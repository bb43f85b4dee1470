#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "leanmon/error.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {
namespace {

using test::key;

constexpr std::uint32_t kA = 0x0a000001;
constexpr std::uint32_t kB = 0x0a000002;

TEST(Canonicalize, OrderedKeyIsForward) {
  const auto p = canonicalize(key(kA, kB, 5, 6));
  EXPECT_EQ(p.lo, (Endpoint{kA, 5}));
  EXPECT_EQ(p.hi, (Endpoint{kB, 6}));
  EXPECT_TRUE(p.forward);
}

TEST(Canonicalize, ReversedKeyIsBackward) {
  const auto p = canonicalize(key(kB, kA, 6, 5));
  EXPECT_EQ(p.lo, (Endpoint{kA, 5}));
  EXPECT_EQ(p.hi, (Endpoint{kB, 6}));
  EXPECT_FALSE(p.forward);
}

TEST(Canonicalize, SelfPairIsForward) {
  const auto p = canonicalize(key(kA, kA, 7, 7));
  EXPECT_EQ(p.lo, p.hi);
  EXPECT_TRUE(p.forward);
}

TEST(Canonicalize, ReversalGivesSameConversation) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const FlowKey k{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                    static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()),
                    static_cast<std::uint8_t>(rng())};
    const auto a = canonicalize(k);
    const auto b = canonicalize(k.reversed());
    ASSERT_EQ(a.lo, b.lo);
    ASSERT_EQ(a.hi, b.hi);
    ASSERT_EQ(a.key(), b.key());
    ASSERT_EQ(key_bytes(a), key_bytes(b));
    if (a.lo != a.hi) ASSERT_NE(a.forward, b.forward);
  }
}

TEST(KeyBytes, ZeroKeyIsZeroBytes) {
  const KeyBytes b = key_bytes(FlowKey{});
  for (auto byte : b) EXPECT_EQ(byte, 0);
}

TEST(KeyBytes, RoundTripAndInjective) {
  std::mt19937_64 rng(5);
  std::set<KeyBytes> seen;
  std::set<FlowKey> keys;
  for (int i = 0; i < 100000; ++i) {
    const FlowKey k{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                    static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()),
                    static_cast<std::uint8_t>(rng())};
    const KeyBytes b = key_bytes(k);
    ASSERT_EQ(parse_key(b), k);
    keys.insert(k);
    seen.insert(b);
  }
  EXPECT_EQ(seen.size(), keys.size());
}

TEST(KeyBytes, ByteOrderMatchesKeyOrder) {
  const FlowKey a = key(1, 9, 9, 9);
  const FlowKey b = key(2, 0, 0, 0);
  EXPECT_LT(a, b);
  EXPECT_LT(key_bytes(a), key_bytes(b));
}

TEST(KeyHex, RoundTrip) {
  const FlowKey k = key(0xdeadbeef, 0x01020304, 443, 51234, 17);
  const std::string hex = key_hex(k);
  EXPECT_EQ(hex.size(), 26u);
  EXPECT_EQ(hex.substr(0, 8), "deadbeef");
  EXPECT_EQ(parse_key_hex(hex), k);
}

TEST(KeyHex, MalformedThrows) {
  EXPECT_THROW((void)parse_key_hex("abc"), DataError);
  EXPECT_THROW((void)parse_key_hex(std::string(26, 'z')), DataError);
}

TEST(PacketType, ParseNamesAndCodes) {
  EXPECT_EQ(parse_packet_type("synack"), PacketType::SynAck);
  EXPECT_EQ(parse_packet_type("DATA"), PacketType::Data);
  EXPECT_EQ(parse_packet_type("1"), PacketType::Ack);
  EXPECT_EQ(to_string(PacketType::Syn), "SYN");
  EXPECT_THROW((void)parse_packet_type("bogus"), DataError);
}

TEST(Epoch, SpansPacketsAndRejectsDecreasingTime) {
  const FlowKey k = key(kA, kB);
  const Epoch e = make_epoch({test::data(k, 1, 10), test::data(k, 2, 20)});
  EXPECT_EQ(e.start_ts, 10u);
  EXPECT_EQ(e.end_ts, 21u);
  EXPECT_THROW((void)make_epoch({test::data(k, 1, 20), test::data(k, 2, 10)}), DataError);
}

TEST(KeyMode, OdPairDropsPorts) {
  const FlowKey k = key(kA, kB, 5, 6, 17);
  EXPECT_EQ(apply_mode(k, KeyMode::OdPair), (FlowKey{kA, kB, 0, 0, 0}));
  EXPECT_EQ(apply_mode(k, KeyMode::FiveTuple), k);
}

}  // namespace
}  // namespace leanmon
