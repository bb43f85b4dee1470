#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "leanmon/error.hpp"
#include "leanmon/hashing.hpp"
#include "leanmon/packet.hpp"

namespace leanmon {

// Generic g-heavy-hitter recovery for a flow-additive statistic g.
//
// Flows hash into M buckets. Each bucket holds 2L sub-buckets, one pair per
// id bit: sub-bucket 2k-1 sees flows whose k-th bit is 0 and sub-bucket 2k
// those whose k-th bit is 1 (1-based k, bit 1 = least significant). If one
// flow's g exceeds the rest of its bucket combined, comparing each pair
// spells out that flow's id.

/// A single-flow estimator for a flow-additive statistic. value() over a
/// merged stream must equal the sum of values over its parts.
template <typename E>
concept SingleFlowEstimator = std::default_initializable<E> && requires(E e, const E ce,
                                                                        const PacketRecord& p) {
  e.absorb(p);
  { ce.value() } -> std::convertible_to<double>;
};

struct PacketCountEstimator {
  std::uint64_t count = 0;
  void absorb(const PacketRecord&) noexcept { ++count; }
  [[nodiscard]] double value() const noexcept { return static_cast<double>(count); }
};

struct ByteCountEstimator {
  std::uint64_t bytes = 0;
  void absorb(const PacketRecord& p) noexcept { bytes += p.size; }
  [[nodiscard]] double value() const noexcept { return static_cast<double>(bytes); }
};

/// Signed timestamp sum: responses add their time, requests subtract it, so
/// matched pairs contribute their round-trip time. Other types are ignored.
struct LatencySumEstimator {
  std::int64_t sum_ns = 0;
  void absorb(const PacketRecord& p) noexcept {
    if (is_response(p.type)) sum_ns += static_cast<std::int64_t>(p.ts);
    else if (is_request(p.type)) sum_ns -= static_cast<std::int64_t>(p.ts);
  }
  [[nodiscard]] double value() const noexcept { return static_cast<double>(sum_ns); }
};

struct RecoveredFlow {
  std::uint64_t id = 0;
  std::size_t bucket = 0;
  double value = 0;   // min over bits of the larger sub-bucket value
  double margin = 0;  // min over bits of |value(2k-1) - value(2k)|
};

/// 32-bit flow id used by the framework (unseeded, stable across runs).
[[nodiscard]] inline std::uint32_t flow_id32(const FlowKey& key) noexcept {
  const KeyBytes b = key_bytes(key);
  return static_cast<std::uint32_t>(fold64(b) >> 32);
}

/// 1-based sub-bucket indices a flow id is absorbed by, in bit order.
[[nodiscard]] inline std::vector<std::size_t> sub_bucket_indices(std::uint64_t flow_id,
                                                                 unsigned bits) {
  std::vector<std::size_t> out;
  out.reserve(bits);
  for (unsigned k = 1; k <= bits; ++k) {
    const bool bit = (flow_id >> (k - 1)) & 1U;
    out.push_back(bit ? 2 * k : 2 * k - 1);
  }
  return out;
}

template <SingleFlowEstimator E>
class FrameworkSketch {
 public:
  /// Default bucket count ceil(c / eps^4).
  [[nodiscard]] static std::size_t default_buckets(double epsilon, double c = 1.0) {
    if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must be in (0, 1)");
    return static_cast<std::size_t>(std::ceil(c / std::pow(epsilon, 4)));
  }

  FrameworkSketch(std::size_t buckets, unsigned id_bits, std::uint64_t run_seed)
      : buckets_(buckets),
        bits_(id_bits),
        hash_(make_hash_pair(run_seed, HashStream::Framework, 0)),
        cells_(buckets * 2 * id_bits) {
    if (buckets == 0) throw ConfigError("framework needs at least one bucket");
    if (id_bits == 0 || id_bits > 64) throw ConfigError("id width must be in [1, 64]");
  }

  [[nodiscard]] std::size_t bucket_of(std::uint64_t flow_id) const noexcept {
    return bucket(hash_, flow_id, buckets_);
  }

  /// Feeds the packet to one estimator per bit position in the flow's bucket.
  void update(std::uint64_t flow_id, const PacketRecord& p) {
    if (bits_ < 64 && (flow_id >> bits_) != 0) {
      throw ConfigError("flow id " + std::to_string(flow_id) + " does not fit in " +
                        std::to_string(bits_) + " bits");
    }
    E* base = &cells_[bucket_of(flow_id) * 2 * bits_];
    for (unsigned k = 0; k < bits_; ++k) {
      base[2 * k + ((flow_id >> k) & 1U)].absorb(p);
    }
  }

  /// One candidate per non-empty bucket. Ties within a pair read as bit 1.
  [[nodiscard]] std::vector<RecoveredFlow> recover() const {
    std::vector<RecoveredFlow> out;
    for (std::size_t m = 0; m < buckets_; ++m) {
      const E* base = &cells_[m * 2 * bits_];
      bool any = false;
      for (std::size_t i = 0; i < 2 * bits_; ++i) any = any || base[i].value() != 0;
      if (!any) continue;
      RecoveredFlow r;
      r.bucket = m;
      r.value = std::numeric_limits<double>::infinity();
      r.margin = std::numeric_limits<double>::infinity();
      for (unsigned k = 0; k < bits_; ++k) {
        const double zero = base[2 * k].value();
        const double one = base[2 * k + 1].value();
        if (!(zero > one)) r.id |= std::uint64_t{1} << k;
        r.value = std::min(r.value, std::max(zero, one));
        r.margin = std::min(r.margin, std::abs(zero - one));
      }
      out.push_back(r);
    }
    return out;
  }

  /// Estimator at 1-based sub-bucket index `sub` of bucket `m`.
  [[nodiscard]] const E& estimator(std::size_t m, std::size_t sub) const {
    return cells_.at(m * 2 * bits_ + (sub - 1));
  }

  [[nodiscard]] std::size_t buckets() const noexcept { return buckets_; }
  [[nodiscard]] unsigned id_bits() const noexcept { return bits_; }
  [[nodiscard]] std::size_t estimator_count() const noexcept { return cells_.size(); }

 private:
  std::size_t buckets_;
  unsigned bits_;
  HashPair hash_;
  std::vector<E> cells_;
};

}  // namespace leanmon
