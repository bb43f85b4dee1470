#include "leanmon/trace_io.hpp"

#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>

#include "leanmon/error.hpp"

namespace leanmon {

namespace {

constexpr char kMagic[4] = {'L', 'M', 'T', '1'};

template <typename T>
void put_le(std::uint8_t*& p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    *p++ = static_cast<std::uint8_t>(v & 0xFF);
    v = static_cast<T>(v >> 8);
  }
}

template <typename T>
T get_le(const std::uint8_t*& p) {
  T v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<T>((v << 8) | p[i]);
  p += sizeof(T);
  return v;
}

PacketType checked_type(std::uint8_t code, std::size_t index) {
  if (code > static_cast<std::uint8_t>(PacketType::Fin)) {
    throw DataError("record " + std::to_string(index) + ": unknown packet type " +
                    std::to_string(code));
  }
  return static_cast<PacketType>(code);
}

template <typename T>
T parse_field(std::string_view f, int base, std::size_t lineno, const char* name) {
  T v{};
  auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v, base);
  if (ec != std::errc{} || ptr != f.data() + f.size()) {
    throw DataError("trace line " + std::to_string(lineno) + ": bad " + name + " '" +
                    std::string(f) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void check_monotone(const std::vector<PacketRecord>& packets) {
  for (std::size_t i = 1; i < packets.size(); ++i) {
    if (packets[i].ts < packets[i - 1].ts) {
      throw DataError("record " + std::to_string(i) + ": timestamp " +
                      std::to_string(packets[i].ts) + " precedes " +
                      std::to_string(packets[i - 1].ts));
    }
  }
}

std::vector<std::uint8_t> encode_binary_trace(const std::vector<PacketRecord>& packets) {
  std::vector<std::uint8_t> out(sizeof kMagic + packets.size() * kTraceRecordBytes);
  std::memcpy(out.data(), kMagic, sizeof kMagic);
  std::uint8_t* p = out.data() + sizeof kMagic;
  for (const auto& r : packets) {
    put_le(p, r.key.src);
    put_le(p, r.key.dst);
    put_le(p, r.key.src_port);
    put_le(p, r.key.dst_port);
    put_le(p, r.key.proto);
    put_le(p, static_cast<std::uint8_t>(r.type));
    put_le(p, r.seq);
    put_le(p, r.ack);
    put_le(p, r.ts);
    put_le(p, r.size);
  }
  return out;
}

std::vector<PacketRecord> decode_binary_trace(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw DataError("not a binary trace (missing LMT1 magic)");
  }
  const std::size_t body = bytes.size() - sizeof kMagic;
  if (body % kTraceRecordBytes != 0) {
    throw DataError("binary trace truncated: " + std::to_string(body % kTraceRecordBytes) +
                    " trailing bytes");
  }
  std::vector<PacketRecord> out(body / kTraceRecordBytes);
  const std::uint8_t* p = bytes.data() + sizeof kMagic;
  for (std::size_t i = 0; i < out.size(); ++i) {
    PacketRecord& r = out[i];
    r.key.src = get_le<std::uint32_t>(p);
    r.key.dst = get_le<std::uint32_t>(p);
    r.key.src_port = get_le<std::uint16_t>(p);
    r.key.dst_port = get_le<std::uint16_t>(p);
    r.key.proto = get_le<std::uint8_t>(p);
    r.type = checked_type(get_le<std::uint8_t>(p), i);
    r.seq = get_le<std::uint64_t>(p);
    r.ack = get_le<std::uint64_t>(p);
    r.ts = get_le<std::uint64_t>(p);
    r.size = get_le<std::uint32_t>(p);
  }
  check_monotone(out);
  return out;
}

void write_text_trace(std::ostream& out, const std::vector<PacketRecord>& packets) {
  out << "# src,dst,src_port,dst_port,proto,type,seq,ack,ts,size\n";
  char a[9];
  char b[9];
  for (const auto& r : packets) {
    std::snprintf(a, sizeof a, "%08x", r.key.src);
    std::snprintf(b, sizeof b, "%08x", r.key.dst);
    out << a << ',' << b << ',' << r.key.src_port << ',' << r.key.dst_port << ','
        << unsigned{r.key.proto} << ',' << to_string(r.type) << ',' << r.seq << ',' << r.ack
        << ',' << r.ts << ',' << r.size << '\n';
  }
}

std::vector<PacketRecord> read_text_trace(std::istream& in) {
  std::vector<PacketRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    std::string_view f[10];
    std::size_t n = 0;
    while (n < 10) {
      const auto c = s.find(',');
      f[n++] = trim(s.substr(0, c));
      if (c == std::string_view::npos) {
        s = {};
        break;
      }
      s.remove_prefix(c + 1);
    }
    if (n != 10 || !s.empty()) {
      throw DataError("trace line " + std::to_string(lineno) + ": expected 10 fields");
    }
    PacketRecord r;
    r.key.src = parse_field<std::uint32_t>(f[0], 16, lineno, "src");
    r.key.dst = parse_field<std::uint32_t>(f[1], 16, lineno, "dst");
    r.key.src_port = parse_field<std::uint16_t>(f[2], 10, lineno, "src_port");
    r.key.dst_port = parse_field<std::uint16_t>(f[3], 10, lineno, "dst_port");
    r.key.proto = parse_field<std::uint8_t>(f[4], 10, lineno, "proto");
    try {
      r.type = parse_packet_type(f[5]);
    } catch (const DataError& e) {
      throw DataError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    r.seq = parse_field<std::uint64_t>(f[6], 10, lineno, "seq");
    r.ack = parse_field<std::uint64_t>(f[7], 10, lineno, "ack");
    r.ts = parse_field<std::uint64_t>(f[8], 10, lineno, "ts");
    r.size = parse_field<std::uint32_t>(f[9], 10, lineno, "size");
    if (!out.empty() && r.ts < out.back().ts) {
      throw DataError("trace line " + std::to_string(lineno) + ": timestamp goes backwards");
    }
    out.push_back(r);
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::uint8_t> bytes(size);
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
    throw DataError("cannot read " + path.string());
  }
  return bytes;
}

void write_trace(const std::filesystem::path& path, const std::vector<PacketRecord>& packets,
                 TraceFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  if (format == TraceFormat::Binary) {
    const auto bytes = encode_binary_trace(packets);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  } else {
    write_text_trace(out, packets);
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<PacketRecord> read_trace(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= sizeof kMagic && std::memcmp(bytes.data(), kMagic, sizeof kMagic) == 0) {
    return decode_binary_trace(bytes);
  }
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  return read_text_trace(in);
}

TraceFormat parse_trace_format(const std::string& text) {
  if (text == "binary" || text == "bin") return TraceFormat::Binary;
  if (text == "text" || text == "csv") return TraceFormat::Text;
  throw ConfigError("unknown trace format '" + text + "' (expected binary or text)");
}

}  // namespace leanmon
