#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "leanmon/error.hpp"
#include "leanmon/trace_io.hpp"

namespace leanmon {
namespace {

namespace fs = std::filesystem;

std::vector<PacketRecord> sample(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<PacketRecord> v;
  std::uint64_t ts = 0;
  for (std::size_t i = 0; i < n; ++i) {
    PacketRecord p;
    p.key = FlowKey{static_cast<std::uint32_t>(rng()), static_cast<std::uint32_t>(rng()),
                    static_cast<std::uint16_t>(rng()), static_cast<std::uint16_t>(rng()),
                    static_cast<std::uint8_t>(rng())};
    p.type = static_cast<PacketType>(rng() % 5);
    p.seq = rng();
    p.ack = rng();
    p.ts = ts += rng() % 1000;
    p.size = static_cast<std::uint32_t>(rng());
    v.push_back(p);
  }
  return v;
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("leanmon_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(TraceIo, BinaryRoundTrip) {
  const auto trace = sample(1000, 1);
  const auto bytes = encode_binary_trace(trace);
  EXPECT_EQ(bytes.size(), 4 + 1000 * kTraceRecordBytes);
  EXPECT_EQ(decode_binary_trace(bytes), trace);
}

TEST(TraceIo, BinaryIsLittleEndian) {
  PacketRecord p;
  p.key.src = 0x01020304;
  p.ts = 0x0a;
  const auto bytes = encode_binary_trace({p});
  EXPECT_EQ(bytes[4], 0x04);
  EXPECT_EQ(bytes[7], 0x01);
}

TEST(TraceIo, TextRoundTrip) {
  const auto trace = sample(500, 2);
  std::stringstream ss;
  write_text_trace(ss, trace);
  EXPECT_EQ(read_text_trace(ss), trace);
}

TEST(TraceIo, TextAcceptsCommentsAndNumericTypes) {
  std::stringstream ss(
      "# comment\n"
      "0a000001,0a000002,1000,80,6,2,1,0,10,64\n"
      "\n"
      "0a000002,0a000001,80,1000,6,SYNACK,1,1,25,64\n");
  const auto t = read_text_trace(ss);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0].type, PacketType::Syn);
  EXPECT_EQ(t[1].type, PacketType::SynAck);
  EXPECT_EQ(t[1].key.src, 0x0a000002u);
}

TEST(TraceIo, MalformedInputsAreDataErrors) {
  std::stringstream fields("0a000001,0a000002,1000\n");
  EXPECT_THROW((void)read_text_trace(fields), DataError);
  std::stringstream number("0a000001,0a000002,1000,80,6,DATA,x,0,10,64\n");
  EXPECT_THROW((void)read_text_trace(number), DataError);
  std::stringstream backwards(
      "0a000001,0a000002,1000,80,6,DATA,1,0,10,64\n0a000001,0a000002,1000,80,6,DATA,2,0,5,64\n");
  EXPECT_THROW((void)read_text_trace(backwards), DataError);

  auto bytes = encode_binary_trace(sample(3, 3));
  bytes.pop_back();
  EXPECT_THROW((void)decode_binary_trace(bytes), DataError);
  EXPECT_THROW((void)decode_binary_trace({'X', 'X', 'X', 'X'}), DataError);
  auto bad_type = encode_binary_trace(sample(1, 4));
  bad_type[4 + 13] = 9;
  EXPECT_THROW((void)decode_binary_trace(bad_type), DataError);
}

TEST(TraceIo, CheckMonotone) {
  auto t = sample(10, 5);
  EXPECT_NO_THROW(check_monotone(t));
  std::swap(t[2].ts, t[7].ts);
  if (t[2].ts != t[7].ts) {
    EXPECT_THROW(check_monotone(t), DataError);
  }
}

TEST(TraceIo, ParseFormat) {
  EXPECT_EQ(parse_trace_format("binary"), TraceFormat::Binary);
  EXPECT_EQ(parse_trace_format("csv"), TraceFormat::Text);
  EXPECT_THROW((void)parse_trace_format("pcap"), ConfigError);
}

TEST_F(TempDir, FilesRoundTripWithFormatDetection) {
  const auto trace = sample(200, 6);
  write_trace(dir_ / "a.lmt", trace, TraceFormat::Binary);
  write_trace(dir_ / "a.csv", trace, TraceFormat::Text);
  EXPECT_EQ(read_trace(dir_ / "a.lmt"), trace);
  EXPECT_EQ(read_trace(dir_ / "a.csv"), trace);
  EXPECT_THROW((void)read_trace(dir_ / "missing.lmt"), DataError);
}

}  // namespace
}  // namespace leanmon
