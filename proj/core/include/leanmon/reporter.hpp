#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <unordered_set>
#include <vector>

#include "leanmon/count_sketch.hpp"
#include "leanmon/heavy_report.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

/// Bloom filter over flow keys. No false negatives: a key once inserted
/// always tests present.
class BloomGate {
 public:
  static constexpr std::size_t kDefaultBits = std::size_t{1} << 16;
  static constexpr std::uint32_t kDefaultHashes = 4;

  explicit BloomGate(std::size_t bits = kDefaultBits, std::uint32_t hashes = kDefaultHashes,
                     std::uint64_t seed = 0);

  [[nodiscard]] bool contains(const FlowKey& key) const;
  void insert(const FlowKey& key);

  [[nodiscard]] std::size_t bits() const noexcept { return bits_.size(); }
  [[nodiscard]] std::uint32_t hashes() const noexcept { return static_cast<std::uint32_t>(hashes_.size()); }
  [[nodiscard]] std::size_t inserted() const noexcept { return inserted_; }
  /// (1 - e^(-h n / m))^h at the current insertion count.
  [[nodiscard]] double expected_fp_rate() const noexcept;

 private:
  std::vector<bool> bits_;
  std::vector<HashPair> hashes_;
  std::size_t inserted_ = 0;
};

/// Bloom mode emulates the mirroring filter; Exact mode is the one-to-one
/// table alternative (hash-set dedup).
enum class GateMode : std::uint8_t { Bloom, Exact };

/// Dedup gate in front of the candidate log. With audit enabled a Bloom
/// gate also keeps an exact shadow set and records each distinct key it
/// suppressed that an exact gate would have admitted (false positives).
class ReportGate {
 public:
  explicit ReportGate(GateMode mode = GateMode::Bloom, std::uint64_t seed = 0, bool audit = false,
                      std::size_t bloom_bits = BloomGate::kDefaultBits,
                      std::uint32_t bloom_hashes = BloomGate::kDefaultHashes);

  /// True if the key has not been admitted before (up to Bloom false
  /// positives); admits it in that case.
  bool admit(const FlowKey& key);

  [[nodiscard]] GateMode mode() const noexcept { return mode_; }
  [[nodiscard]] std::uint64_t false_positives() const noexcept { return false_positives_; }
  [[nodiscard]] const std::vector<FlowKey>& suppressed() const noexcept { return suppressed_; }
  [[nodiscard]] std::size_t memory_bytes() const noexcept;

 private:
  GateMode mode_;
  bool audit_;
  BloomGate bloom_;
  std::unordered_set<FlowKey> exact_;
  std::uint64_t false_positives_ = 0;
  std::vector<FlowKey> suppressed_;
};

struct Candidate {
  FlowKey key;
  std::uint64_t ts = 0;  // first trigger
  double value = 0;      // triggering statistic

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Ordered list of reported keys.
class CandidateLog {
 public:
  void append(const Candidate& c) { entries_.push_back(c); }
  [[nodiscard]] const std::vector<Candidate>& entries() const noexcept { return entries_; }
  [[nodiscard]] std::vector<FlowKey> keys() const;
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }

  /// CSV with header "key,ts,value"; key is 26 hex digits.
  void write_csv(std::ostream& out) const;
  [[nodiscard]] static CandidateLog read_csv(std::istream& in);

  friend bool operator==(const CandidateLog&, const CandidateLog&) = default;

 private:
  std::vector<Candidate> entries_;
};

/// Appends the key to the log when estimate >= threshold and the gate
/// admits it. Throws ConfigError for a negative threshold.
bool maybe_report(ReportGate& gate, CandidateLog& log, const FlowKey& key, std::uint64_t ts,
                  double estimate, double threshold);

/// How logged keys map onto sketch keys.
enum class KeyEncoding : std::uint8_t {
  Flow = 0,       // 13-byte FlowKey
  Canonical = 1,  // 26-byte canonical conversation
};

/// Re-estimates every logged key against a snapshot and returns the top k
/// by |estimate|. Throws ConfigError when the snapshot's run seed differs
/// from `expected_seed`.
[[nodiscard]] HeavyReport controller_topk(const CountSketchTable& snapshot, const CandidateLog& log,
                                          std::size_t k, std::uint64_t expected_seed,
                                          KeyEncoding encoding = KeyEncoding::Flow);

}  // namespace leanmon
