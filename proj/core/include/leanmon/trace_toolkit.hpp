#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "leanmon/packet.hpp"

namespace leanmon {

/// Deterministic 64-bit generator with platform-independent derived draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 bits.
  double uniform() noexcept;
  /// Uniform in [0, n); n >= 1.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::uint64_t state_;
};

struct SynthConfig {
  std::size_t flows = 100'000;
  std::size_t packets = 1'000'000;  // DATA packets
  double zipf = 1.1;
  bool bidirectional = false;  // adds SYN/SYNACK and one ACK per DATA
  std::uint64_t epoch_ns = 60'000'000'000;
  std::uint64_t rtt_min_ns = 50'000;
  std::uint64_t rtt_max_ns = 1'000'000;
  std::uint64_t max_gap_ns = 1'000'000;   // mean DATA spacing cap
  std::uint64_t tail_margin_ns = 200'000'000;  // room for injected shifts
  std::uint64_t seed = 1;
};

/// Zipf-sized flows, each flow's DATA packets spread over its own active
/// period; records sorted by ts with a total tiebreak. Throws ConfigError
/// when flows == 0 or flows > packets.
[[nodiscard]] std::vector<PacketRecord> synthesize(const SynthConfig& cfg);

enum class FaultKind : std::uint8_t { None, Latency, Loss, Reorder, Duplicate };

[[nodiscard]] std::string to_string(FaultKind k);
[[nodiscard]] FaultKind parse_fault_kind(const std::string& text);

struct VictimRule {
  std::size_t count = 100;
  std::size_t pool = 1000;       // drawn from the `pool` largest flows by DATA count
  std::vector<FlowKey> keys;     // explicit victims; overrides count/pool when set
};

struct InjectionPlan {
  FaultKind kind = FaultKind::Latency;
  VictimRule victims;
  /// Latency: delay in ns added to every response of a victim. Negative
  /// means draw one delay per flow in [delay_min_ns, delay_max_ns].
  /// Loss, reorder, duplicate: per-DATA-packet probability.
  double magnitude = 0;
  std::uint64_t delay_min_ns = 30'000'000;
  std::uint64_t delay_max_ns = 90'000'000;
  std::uint64_t reorder_shift_ns = 5'000'000;
  std::uint64_t duplicate_shift_ns = 1'000'000;
  std::uint64_t seed = 1;
};

struct Victim {
  FlowKey key;
  double magnitude = 0;
  /// Oracle value for the victim on the injected trace: matched RTT in ns
  /// (all request types), missing ids, out-of-order bytes, or retransmissions.
  double true_value = 0;

  friend bool operator==(const Victim&, const Victim&) = default;
};

struct Manifest {
  FaultKind kind = FaultKind::None;
  std::uint64_t seed = 0;
  std::string trace_sha256;
  double magnitude = 0;
  std::vector<Victim> victims;

  [[nodiscard]] std::string to_json() const;
  [[nodiscard]] static Manifest from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  [[nodiscard]] static Manifest load(const std::filesystem::path& path);

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

struct InjectedTrace {
  std::vector<PacketRecord> trace;
  Manifest manifest;
};

/// Largest flows by DATA count (ties by key), shuffled by `seed`, first
/// `count` kept. Throws ConfigError if count exceeds the pool or the flows.
[[nodiscard]] std::vector<FlowKey> select_victims(const std::vector<PacketRecord>& trace,
                                                  const VictimRule& rule, std::uint64_t seed);

/// Applies one fault class. Non-victim records are left unchanged and keep
/// their relative order. Throws DataError when explicit victims are absent
/// and ConfigError for out-of-range magnitudes.
[[nodiscard]] InjectedTrace inject(const std::vector<PacketRecord>& trace, const InjectionPlan& plan);

[[nodiscard]] std::string sha256_hex(std::span<const std::uint8_t> bytes);
/// SHA-256 of the binary trace encoding.
[[nodiscard]] std::string trace_sha256(const std::vector<PacketRecord>& trace);

/// Manifest for an uninjected trace.
[[nodiscard]] Manifest plain_manifest(const std::vector<PacketRecord>& trace, std::uint64_t seed);

}  // namespace leanmon
