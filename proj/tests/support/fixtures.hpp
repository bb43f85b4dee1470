#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "leanmon/packet.hpp"

namespace leanmon::test {

inline FlowKey key(std::uint32_t src, std::uint32_t dst, std::uint16_t sport = 1000,
                   std::uint16_t dport = 80, std::uint8_t proto = 6) {
  return FlowKey{src, dst, sport, dport, proto};
}

/// Distinct keys numbered from 1; i and j != i never share a key.
inline FlowKey nth_key(std::uint32_t i) {
  return key(0x0a000000u + i, 0xc0a80001u, static_cast<std::uint16_t>(1024 + (i & 0x7fff)), 443);
}

inline PacketRecord data(const FlowKey& k, std::uint64_t seq, std::uint64_t ts,
                         std::uint32_t size = 100) {
  return PacketRecord{k, PacketType::Data, seq, 0, ts, size};
}

inline PacketRecord packet(const FlowKey& k, PacketType type, std::uint64_t ts,
                           std::uint64_t seq = 1, std::uint64_t ack = 0) {
  return PacketRecord{k, type, seq, ack, ts, 64};
}

inline std::vector<std::uint8_t> bytes_of(const FlowKey& k) {
  const KeyBytes b = key_bytes(k);
  return {b.begin(), b.end()};
}

/// Per-flow counts of `updates` draws from Zipf(s) over `flows` ranks.
inline std::vector<std::int64_t> zipf_counts(std::size_t flows, std::size_t updates, double s,
                                             std::mt19937_64& rng) {
  std::vector<double> w(flows);
  for (std::size_t i = 0; i < flows; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::vector<std::int64_t> counts(flows, 0);
  for (std::size_t u = 0; u < updates; ++u) ++counts[pick(rng)];
  return counts;
}

}  // namespace leanmon::test
