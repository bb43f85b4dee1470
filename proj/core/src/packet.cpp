#include "leanmon/packet.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "leanmon/error.hpp"

namespace leanmon {

namespace {

void put_be(std::uint8_t* out, std::uint64_t v, int n) {
  for (int i = n - 1; i >= 0; --i) {
    out[i] = static_cast<std::uint8_t>(v & 0xFF);
    v >>= 8;
  }
}

std::uint64_t get_be(const std::uint8_t* in, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v = (v << 8) | in[i];
  return v;
}

}  // namespace

std::string_view to_string(PacketType t) noexcept {
  switch (t) {
    case PacketType::Data: return "DATA";
    case PacketType::Ack: return "ACK";
    case PacketType::Syn: return "SYN";
    case PacketType::SynAck: return "SYNACK";
    case PacketType::Fin: return "FIN";
  }
  return "?";
}

PacketType parse_packet_type(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (auto t : {PacketType::Data, PacketType::Ack, PacketType::Syn, PacketType::SynAck,
                 PacketType::Fin}) {
    if (upper == to_string(t)) return t;
  }
  unsigned code = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), code);
  if (ec == std::errc{} && ptr == text.data() + text.size() && code <= 4) {
    return static_cast<PacketType>(code);
  }
  throw DataError("unknown packet type '" + std::string(text) + "'");
}

Epoch make_epoch(std::vector<PacketRecord> packets) {
  Epoch e;
  if (!packets.empty()) {
    for (std::size_t i = 1; i < packets.size(); ++i) {
      if (packets[i].ts < packets[i - 1].ts) {
        throw DataError("timestamps decrease at record " + std::to_string(i));
      }
    }
    e.start_ts = packets.front().ts;
    e.end_ts = packets.back().ts + 1;
  }
  e.packets = std::move(packets);
  return e;
}

KeyBytes key_bytes(const FlowKey& key) noexcept {
  KeyBytes out{};
  put_be(out.data(), key.src, 4);
  put_be(out.data() + 4, key.dst, 4);
  put_be(out.data() + 8, key.src_port, 2);
  put_be(out.data() + 10, key.dst_port, 2);
  out[12] = key.proto;
  return out;
}

PairBytes key_bytes(const CanonicalPair& pair) noexcept {
  PairBytes out{};
  const FlowKey fwd = pair.key();
  const KeyBytes a = key_bytes(fwd);
  const KeyBytes b = key_bytes(fwd.reversed());
  std::copy(a.begin(), a.end(), out.begin());
  std::copy(b.begin(), b.end(), out.begin() + FlowKey::kBytes);
  return out;
}

FlowKey parse_key(std::span<const std::uint8_t, FlowKey::kBytes> bytes) noexcept {
  FlowKey k;
  k.src = static_cast<std::uint32_t>(get_be(bytes.data(), 4));
  k.dst = static_cast<std::uint32_t>(get_be(bytes.data() + 4, 4));
  k.src_port = static_cast<std::uint16_t>(get_be(bytes.data() + 8, 2));
  k.dst_port = static_cast<std::uint16_t>(get_be(bytes.data() + 10, 2));
  k.proto = bytes[12];
  return k;
}

CanonicalPair canonicalize(const FlowKey& key) noexcept {
  const Endpoint s{key.src, key.src_port};
  const Endpoint d{key.dst, key.dst_port};
  // Self-pairs (s == d) count as forward.
  if (d < s) return CanonicalPair{d, s, key.proto, false};
  return CanonicalPair{s, d, key.proto, true};
}

std::string key_hex(const FlowKey& key) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const KeyBytes b = key_bytes(key);
  std::string out;
  out.reserve(2 * b.size());
  for (auto byte : b) {
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 0xF]);
  }
  return out;
}

FlowKey parse_key_hex(std::string_view hex) {
  if (hex.size() != 2 * FlowKey::kBytes) {
    throw DataError("flow key hex must be 26 characters, got '" + std::string(hex) + "'");
  }
  KeyBytes b{};
  for (std::size_t i = 0; i < b.size(); ++i) {
    unsigned v = 0;
    auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, v, 16);
    if (ec != std::errc{} || ptr != hex.data() + 2 * i + 2) {
      throw DataError("bad hex in flow key '" + std::string(hex) + "'");
    }
    b[i] = static_cast<std::uint8_t>(v);
  }
  return parse_key(b);
}

}  // namespace leanmon
