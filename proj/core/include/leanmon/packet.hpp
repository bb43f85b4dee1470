#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace leanmon {

/// Flow identity: a 5-tuple, or an origin-destination pair when ports and
/// proto are zeroed. A run uses one mode throughout.
struct FlowKey {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t proto = 0;

  static constexpr std::size_t kBytes = 13;

  friend constexpr auto operator<=>(const FlowKey&, const FlowKey&) = default;

  [[nodiscard]] constexpr FlowKey reversed() const noexcept {
    return FlowKey{dst, src, dst_port, src_port, proto};
  }

  /// Same endpoints with ports and proto dropped.
  [[nodiscard]] constexpr FlowKey od_pair() const noexcept {
    return FlowKey{src, dst, 0, 0, 0};
  }
};

enum class KeyMode : std::uint8_t { FiveTuple, OdPair };

/// One side of a conversation.
struct Endpoint {
  std::uint32_t addr = 0;
  std::uint16_t port = 0;

  friend constexpr auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

/// Direction-free identity of a bidirectional conversation. `lo` sorts
/// before `hi` (ties allowed for self-pairs); `forward` records whether the
/// observed packet went lo -> hi.
struct CanonicalPair {
  Endpoint lo;
  Endpoint hi;
  std::uint8_t proto = 0;
  bool forward = true;

  static constexpr std::size_t kBytes = 2 * FlowKey::kBytes;

  /// The lo -> hi orientation as a FlowKey. Used as the flow's name in
  /// reports, oracles and candidate logs.
  [[nodiscard]] constexpr FlowKey key() const noexcept {
    return FlowKey{lo.addr, hi.addr, lo.port, hi.port, proto};
  }
};

enum class PacketType : std::uint8_t { Data = 0, Ack = 1, Syn = 2, SynAck = 3, Fin = 4 };

[[nodiscard]] std::string_view to_string(PacketType t) noexcept;
/// Accepts the names above (case-insensitive) or their numeric codes.
[[nodiscard]] PacketType parse_packet_type(std::string_view text);

/// Requests are matched by responses: SYN by SYNACK, DATA by ACK.
[[nodiscard]] constexpr bool is_request(PacketType t) noexcept {
  return t == PacketType::Data || t == PacketType::Syn;
}
[[nodiscard]] constexpr bool is_response(PacketType t) noexcept {
  return t == PacketType::Ack || t == PacketType::SynAck;
}

struct PacketRecord {
  FlowKey key;
  PacketType type = PacketType::Data;
  std::uint64_t seq = 0;    // per-flow logical index, 1-based
  std::uint64_t ack = 0;    // acknowledged index, 0 if absent
  std::uint64_t ts = 0;     // nanoseconds
  std::uint32_t size = 0;   // bytes

  friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// A measurement interval. Every packet satisfies start_ts <= ts < end_ts.
struct Epoch {
  std::uint64_t start_ts = 0;
  std::uint64_t end_ts = 0;
  std::vector<PacketRecord> packets;
};

/// Builds an epoch spanning the packets (end is one past the last ts).
/// Throws DataError if timestamps decrease.
[[nodiscard]] Epoch make_epoch(std::vector<PacketRecord> packets);

using KeyBytes = std::array<std::uint8_t, FlowKey::kBytes>;
using PairBytes = std::array<std::uint8_t, CanonicalPair::kBytes>;

/// Big-endian field order: src, dst, src_port, dst_port, proto. Byte order
/// therefore sorts keys the same way operator<=> does.
[[nodiscard]] KeyBytes key_bytes(const FlowKey& key) noexcept;
/// lo->hi key bytes followed by hi->lo key bytes. The direction flag is not
/// part of the identity.
[[nodiscard]] PairBytes key_bytes(const CanonicalPair& pair) noexcept;
[[nodiscard]] FlowKey parse_key(std::span<const std::uint8_t, FlowKey::kBytes> bytes) noexcept;

[[nodiscard]] CanonicalPair canonicalize(const FlowKey& key) noexcept;

/// Lowercase hex of key_bytes (26 characters).
[[nodiscard]] std::string key_hex(const FlowKey& key);
/// Throws DataError on malformed input.
[[nodiscard]] FlowKey parse_key_hex(std::string_view hex);

/// Normalizes a key for the run's identity mode.
[[nodiscard]] constexpr FlowKey apply_mode(const FlowKey& key, KeyMode mode) noexcept {
  return mode == KeyMode::OdPair ? key.od_pair() : key;
}

}  // namespace leanmon

template <>
struct std::hash<leanmon::FlowKey> {
  std::size_t operator()(const leanmon::FlowKey& k) const noexcept {
    std::uint64_t x = (std::uint64_t{k.src} << 32) | k.dst;
    std::uint64_t y = (std::uint64_t{k.src_port} << 24) | (std::uint64_t{k.dst_port} << 8) | k.proto;
    x ^= y * 0x9E3779B97F4A7C15ULL;
    x ^= x >> 31;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 29;
    return static_cast<std::size_t>(x);
  }
};
