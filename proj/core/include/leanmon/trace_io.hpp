#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "leanmon/packet.hpp"

namespace leanmon {

enum class TraceFormat : std::uint8_t { Binary, Text };

/// Binary trace: "LMT1" then 42-byte little-endian records
///   src u32, dst u32, src_port u16, dst_port u16, proto u8, type u8,
///   seq u64, ack u64, ts u64, size u32.
/// Text trace: CSV "src,dst,src_port,dst_port,proto,type,seq,ack,ts,size"
/// with hex addresses, type as a name or numeric code, '#' comments.
/// Both readers throw DataError when timestamps decrease.
inline constexpr std::size_t kTraceRecordBytes = 42;

[[nodiscard]] std::vector<std::uint8_t> encode_binary_trace(const std::vector<PacketRecord>& packets);
[[nodiscard]] std::vector<PacketRecord> decode_binary_trace(const std::vector<std::uint8_t>& bytes);

void write_text_trace(std::ostream& out, const std::vector<PacketRecord>& packets);
[[nodiscard]] std::vector<PacketRecord> read_text_trace(std::istream& in);

void write_trace(const std::filesystem::path& path, const std::vector<PacketRecord>& packets,
                 TraceFormat format = TraceFormat::Binary);
/// Detects the format from the magic.
[[nodiscard]] std::vector<PacketRecord> read_trace(const std::filesystem::path& path);

[[nodiscard]] std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
[[nodiscard]] TraceFormat parse_trace_format(const std::string& text);

/// Throws DataError naming the first record whose ts goes backwards.
void check_monotone(const std::vector<PacketRecord>& packets);

}  // namespace leanmon
