#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "leanmon/count_sketch.hpp"
#include "leanmon/heavy_report.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

struct LossConfig {
  SketchShape shape;
  std::uint64_t seed = 0;
  HashFamily family = HashFamily::MultiplyShift;
  bool checked = kCheckedDefault;
};

/// Detects flows with many missing packet ids. Ids 2i-1 and 2i form pair i;
/// the odd member adds G(i) and the even member subtracts it, so a complete
/// flow cancels to at most one unpaired step while each missing id leaves a
/// random +/-1 step. A flow with m missing ids walks about sqrt(2m/pi).
class LossDetector {
 public:
  explicit LossDetector(const LossConfig& cfg);

  /// Applies DATA packets with seq >= 1; returns false for anything else.
  bool observe(const PacketRecord& p);

  /// |median over rows|: the walk length f_k for the flow.
  [[nodiscard]] std::int64_t estimate(const FlowKey& key) const;

  /// Median over rows of the row's |counter| sum; an online stand-in for
  /// the sum of f_x over all flows.
  [[nodiscard]] std::int64_t mass() const;

  /// Square root of the table's F2 estimate: the l2 norm of the walk
  /// lengths, against which CountSketch error is epsilon * l2.
  [[nodiscard]] double l2() const;

  /// Top k candidates with f_k > epsilon * sum of f_x over the candidates.
  [[nodiscard]] HeavyReport topk(std::span<const FlowKey> candidates, std::size_t k,
                                 double epsilon) const;

  /// The pair step G(i) in {-1, +1}.
  [[nodiscard]] int pair_sign(std::uint64_t pair_index) const noexcept;

  [[nodiscard]] const CountSketchTable& table() const noexcept { return table_; }
  [[nodiscard]] std::uint64_t skipped() const noexcept { return skipped_; }

 private:
  CountSketchTable table_;
  HashPair pair_hash_;
  std::uint64_t skipped_ = 0;
};

/// Expected-walk inversion: round(pi * f^2 / 2) lost packets.
[[nodiscard]] std::uint64_t loss_count_estimate(double walk_length);

}  // namespace leanmon
