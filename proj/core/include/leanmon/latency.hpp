#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "leanmon/count_sketch.hpp"
#include "leanmon/heavy_report.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

/// Which request/response pairs contribute round-trip time.
enum class TypeFilter : std::uint8_t {
  Handshake,  // SYN <-> SYNACK
  DataAck,    // DATA <-> ACK
  All,        // both
};

[[nodiscard]] bool passes(TypeFilter f, PacketType t) noexcept;
[[nodiscard]] TypeFilter parse_type_filter(const std::string& text);
[[nodiscard]] std::string to_string(TypeFilter f);

struct LatencyConfig {
  SketchShape shape;
  std::uint64_t seed = 0;
  HashFamily family = HashFamily::MultiplyShift;
  std::uint64_t time_unit_ns = 1000;  // counter unit: 1 us
  TypeFilter filter = TypeFilter::Handshake;
  std::uint64_t epoch_start_ns = 0;
  bool checked = kCheckedDefault;
};

enum class ObserveStatus : std::uint8_t { Applied, Skipped, Rejected };

/// Detects conversations whose cumulative round-trip time is a large
/// fraction of the total. Packets travelling lo->hi add their
/// epoch-relative time to the conversation's counters and packets
/// travelling hi->lo subtract it, so each matched pair leaves +/-RTT.
class LatencyDetector {
 public:
  explicit LatencyDetector(const LatencyConfig& cfg);

  /// Filtered-out types are skipped; timestamps before the epoch start are
  /// rejected and described by last_diagnostic().
  ObserveStatus observe(const PacketRecord& p);

  /// Estimated cumulative RTT for the conversation, in counter units.
  /// Either direction of the key names the same conversation.
  [[nodiscard]] std::int64_t estimate(const FlowKey& key) const;

  /// Round-trip time accrued so far, in counter units: completed pairs plus
  /// the time outstanding requests have waited. Equals the exact total RTT
  /// once every request has been answered.
  [[nodiscard]] std::int64_t accrued_rtt() const noexcept;

  /// Candidates with estimate >= epsilon * accrued_rtt(), best k first.
  /// Keys in the report are canonical (lo -> hi).
  [[nodiscard]] HeavyReport topk(std::span<const FlowKey> candidates, std::size_t k,
                                 double epsilon) const;

  [[nodiscard]] const CountSketchTable& table() const noexcept { return table_; }
  [[nodiscard]] const LatencyConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] std::uint64_t skipped() const noexcept { return skipped_; }
  [[nodiscard]] std::uint64_t rejected() const noexcept { return rejected_; }
  [[nodiscard]] const std::string& last_diagnostic() const noexcept { return diagnostic_; }

 private:
  LatencyConfig cfg_;
  CountSketchTable table_;
  std::int64_t request_sum_ = 0;
  std::int64_t response_sum_ = 0;
  std::int64_t outstanding_ = 0;
  std::int64_t now_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t rejected_ = 0;
  std::string diagnostic_;
};

}  // namespace leanmon
