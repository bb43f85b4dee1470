#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "leanmon/count_sketch.hpp"
#include "leanmon/heavy_report.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

/// HyperLogLog register array. `registers` must be a power of two in
/// [16, 65536]. Registers only grow, so estimate() of a fixed state is a
/// pure function and the reported value is clamped to be non-decreasing.
class HyperLogLog {
 public:
  HyperLogLog(std::uint32_t registers, std::uint64_t seed, std::uint32_t instance = 0);

  void insert(std::uint64_t item);
  [[nodiscard]] double estimate() const noexcept { return floor_; }
  [[nodiscard]] double raw_estimate() const noexcept;
  [[nodiscard]] std::uint32_t registers() const noexcept {
    return static_cast<std::uint32_t>(regs_.size());
  }
  void merge(const HyperLogLog& other);

 private:
  std::vector<std::uint8_t> regs_;
  std::uint32_t p_;
  std::uint64_t salt_;
  double inv_sum_;  // sum of 2^-register
  std::uint32_t zeros_;
  double floor_ = 0;
};

/// Median of three independently seeded HyperLogLogs.
class DistinctEstimator {
 public:
  static constexpr std::uint32_t kDefaultRegisters = 256;

  explicit DistinctEstimator(std::uint64_t seed = 0,
                             std::uint32_t registers = kDefaultRegisters);

  void insert(std::uint64_t item);
  [[nodiscard]] double estimate() const noexcept;
  [[nodiscard]] std::size_t memory_bytes() const noexcept;

 private:
  std::array<HyperLogLog, 3> instances_;
};

struct TrackedFlow {
  FlowKey key;
  std::uint64_t packets = 0;  // n_j, duplicates included
  DistinctEstimator distinct;  // d_j over seq ids
  std::uint64_t since_ts = 0;

  /// n_j / d_j, or 0 when d_j is 0.
  [[nodiscard]] double ratio() const noexcept;
};

struct RetransmitConfig {
  SketchShape shape;
  std::uint64_t seed = 0;
  HashFamily family = HashFamily::MultiplyShift;
  double epsilon = 0.01;
  std::uint32_t registers = DistinctEstimator::kDefaultRegisters;
  std::size_t slack = 16;  // extra tracked slots beyond ceil(2 / epsilon)
  bool checked = kCheckedDefault;
};

/// Tracks elephant flows (estimated share >= epsilon/2 of DATA packets) and
/// per tracked flow counts packets and distinct seq ids. Tracking stops when
/// the share estimate drops below epsilon/4.
class RetransmitTracker {
 public:
  explicit RetransmitTracker(const RetransmitConfig& cfg);

  /// Applies DATA packets; returns false for anything else.
  bool observe(const PacketRecord& p);

  /// Tracked flows with n_j / d_j >= k / 4, ratio descending, at most top_n.
  /// Throws ConfigError unless k > 1.
  [[nodiscard]] HeavyReport report(double k, std::size_t top_n) const;

  [[nodiscard]] bool tracked(const FlowKey& key) const { return flows_.contains(key); }
  [[nodiscard]] const TrackedFlow* flow(const FlowKey& key) const;
  [[nodiscard]] std::size_t tracked_count() const noexcept { return flows_.size(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::uint64_t total() const noexcept { return total_; }
  [[nodiscard]] std::uint64_t evictions() const noexcept { return evictions_; }
  [[nodiscard]] const CountSketchTable& table() const noexcept { return table_; }
  [[nodiscard]] const RetransmitConfig& config() const noexcept { return cfg_; }
  /// Sketch counters plus tracked-flow state at full capacity.
  [[nodiscard]] std::size_t memory_bytes() const noexcept;

 private:
  [[nodiscard]] double share(const FlowKey& key) const;
  void sweep();
  void evict_smallest();

  RetransmitConfig cfg_;
  CountSketchTable table_;
  std::unordered_map<FlowKey, TrackedFlow> flows_;
  std::size_t capacity_;
  std::uint64_t total_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t next_sweep_;
};

}  // namespace leanmon
