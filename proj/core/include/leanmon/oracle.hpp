#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "leanmon/latency.hpp"
#include "leanmon/ooo.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

/// Exact per-flow statistics. Linear memory; for evaluation only.
using FlowValues = std::unordered_map<FlowKey, double>;

struct RttOracle {
  /// |sum of response times - sum of request times| per conversation, in
  /// time units: the quantity the latency sketch estimates, unmatched
  /// packets included.
  FlowValues mirror;
  /// Sum of (response ts - request ts) over matched pairs only, in ns.
  FlowValues strict;
};

/// Keys are canonical conversations (lo -> hi). A request (SYN or DATA with
/// seq s) matches the first later response (SYNACK or ACK with ack s) in the
/// opposite direction.
[[nodiscard]] RttOracle oracle_rtt(const std::vector<PacketRecord>& trace,
                                   TypeFilter filter = TypeFilter::Handshake,
                                   std::uint64_t time_unit_ns = 1000,
                                   std::uint64_t epoch_start_ns = 0);

/// Missing ids below the flow's max DATA seq: max - distinct.
[[nodiscard]] FlowValues oracle_loss(const std::vector<PacketRecord>& trace);

/// Out-of-order weight per flow with the recency-window definition.
[[nodiscard]] FlowValues oracle_ooo(const std::vector<PacketRecord>& trace,
                                    std::uint64_t window_ns = kDefaultWindowNs,
                                    WeightMode weight = WeightMode::Bytes);

struct RtxStats {
  std::uint64_t packets = 0;
  std::uint64_t distinct = 0;
  [[nodiscard]] double average() const noexcept {
    return distinct == 0 ? 0.0 : static_cast<double>(packets) / static_cast<double>(distinct);
  }
  [[nodiscard]] std::uint64_t retransmissions() const noexcept { return packets - distinct; }
};

[[nodiscard]] std::unordered_map<FlowKey, RtxStats> oracle_rtx(
    const std::vector<PacketRecord>& trace);

/// DATA packets per flow.
[[nodiscard]] FlowValues oracle_count(const std::vector<PacketRecord>& trace);

/// Top k keys by value, ties by ascending key. Flows with value <= 0 are
/// never relevant.
[[nodiscard]] std::vector<FlowKey> relevant_topk(const FlowValues& values, std::size_t k);

}  // namespace leanmon
