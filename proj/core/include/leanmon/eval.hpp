#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "leanmon/hashing.hpp"
#include "leanmon/latency.hpp"
#include "leanmon/ooo.hpp"
#include "leanmon/reporter.hpp"
#include "leanmon/trace_toolkit.hpp"

namespace leanmon {

enum class DetectorKind : std::uint8_t { Latency, Loss, Ooo, Retransmit, FrameworkCount };

[[nodiscard]] std::string to_string(DetectorKind k);
[[nodiscard]] DetectorKind parse_detector(const std::string& text);
/// The fault class each detector is evaluated against (None for the
/// framework packet-count detector).
[[nodiscard]] FaultKind fault_for(DetectorKind k) noexcept;

struct DetectorConfig {
  DetectorKind kind = DetectorKind::Latency;
  std::size_t memory_bytes = 40'000;
  std::uint32_t rows = 5;
  std::uint64_t seed = 1;
  HashFamily family = HashFamily::MultiplyShift;
  std::size_t k = 100;

  /// Latency: report trigger as a fraction of accrued RTT (default 1e-3).
  /// Loss: report trigger as a fraction of l2; 0 selects 3/sqrt(B).
  /// Out-of-order: when set, slots = ceil(1/epsilon) instead of the budget.
  double epsilon = 0;

  TypeFilter filter = TypeFilter::Handshake;
  std::uint64_t time_unit_ns = 1000;

  std::uint64_t window_ns = kDefaultWindowNs;
  std::size_t cache_capacity = kDefaultCacheCapacity;
  WeightMode weight = WeightMode::Bytes;

  double k_threshold = 1.05;
  double rtx_epsilon = 1e-3;  // elephant share
  /// About 3% relative error; resolves a 10% ratio gap among elephants.
  std::uint32_t registers = 1024;

  GateMode gate = GateMode::Bloom;

  /// Keep the sketch snapshot and candidate log in the Detection.
  bool keep_artifacts = false;
};

/// Table shape for a budget of 32-bit counters.
[[nodiscard]] SketchShape shape_for(const DetectorConfig& cfg);

struct EvalResult {
  // The eight reported columns.
  std::string detector;
  std::size_t memory_bytes = 0;
  double magnitude = 0;
  std::uint64_t seed = 0;
  double recall = 0;
  double precision = 0;
  double runtime_ms = 0;
  double packets_per_sec = 0;
  // JSON-only details.
  std::size_t extended_memory_bytes = 0;  // plus caches, gates, tracked state
  std::size_t returned = 0;
  std::size_t relevant = 0;
  std::size_t candidates = 0;
  std::uint64_t gate_false_positives = 0;
};

/// Equal in every field that does not depend on wall-clock time.
[[nodiscard]] bool same_outcome(const EvalResult& a, const EvalResult& b) noexcept;

struct Scores {
  double recall = 0;
  double precision = 0;
};
/// Empty relevant set gives recall 1; empty returned set gives precision 0.
[[nodiscard]] Scores score(const std::vector<FlowKey>& returned, const std::vector<FlowKey>& relevant);

/// Oracle top-k for the detector's statistic.
[[nodiscard]] std::vector<FlowKey> relevant_flows(const std::vector<PacketRecord>& trace,
                                                  const DetectorConfig& cfg);

struct Detection {
  std::vector<FlowKey> returned;
  std::size_t counter_memory = 0;
  std::size_t extended_memory = 0;
  std::size_t candidates = 0;
  std::uint64_t gate_false_positives = 0;
  double runtime_ms = 0;
  // Filled when keep_artifacts is set and the detector has a sketch/log.
  std::string snapshot;
  CandidateLog log;
  KeyEncoding encoding = KeyEncoding::Flow;
};

/// Streams the trace through one detector (with the reporter path for the
/// sketch detectors) and returns its top-k.
[[nodiscard]] Detection detect(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg);

/// Checks the manifest hash, then scores detect() against the oracle.
/// Throws DataError on a hash mismatch.
[[nodiscard]] EvalResult run_experiment(const std::vector<PacketRecord>& trace,
                                        const Manifest& manifest, const DetectorConfig& cfg);

/// Precomputed trace, manifest and relevant set for repeated runs.
struct ExperimentCase {
  std::vector<PacketRecord> trace;
  Manifest manifest;
  std::vector<FlowKey> relevant;
};

[[nodiscard]] EvalResult run_case(const ExperimentCase& c, const DetectorConfig& cfg);

struct WorkloadSpec {
  SynthConfig synth;
  double magnitude = -1;  // < 0: the detector's standard magnitude
  std::size_t victims = 100;
  std::optional<std::size_t> pool;  // default per detector
};

/// The standard fault magnitude per detector: 50 ms delay, 4% loss, 4%
/// reorder, 10% duplicates.
[[nodiscard]] double standard_magnitude(DetectorKind k) noexcept;
/// Victim pool per detector: the 1000 largest flows, or the 100 largest for
/// retransmissions (the detector only sees elephants).
[[nodiscard]] std::size_t standard_pool(DetectorKind k) noexcept;

/// Synthesizes and injects the workload for one seed.
[[nodiscard]] ExperimentCase make_case(DetectorKind kind, std::uint64_t seed,
                                       const WorkloadSpec& spec, const DetectorConfig& cfg);

inline const std::vector<std::size_t> kStandardBudgets = {40'000, 80'000, 160'000, 320'000};

/// One row per (budget, case); detector seed follows the case's manifest seed.
[[nodiscard]] std::vector<EvalResult> sweep_memory(const std::vector<ExperimentCase>& cases,
                                                   const DetectorConfig& base,
                                                   const std::vector<std::size_t>& budgets);

[[nodiscard]] double median(std::vector<double> values);
/// Median recall (or precision) per budget, in budget order.
[[nodiscard]] std::vector<double> median_by_budget(const std::vector<EvalResult>& rows,
                                                   const std::vector<std::size_t>& budgets,
                                                   bool precision = false);

inline constexpr std::size_t kCsvColumns = 8;
void write_csv(std::ostream& out, const std::vector<EvalResult>& rows);
[[nodiscard]] std::string results_to_json(const std::vector<EvalResult>& rows);
[[nodiscard]] std::vector<EvalResult> results_from_json(const std::string& text);

}  // namespace leanmon
