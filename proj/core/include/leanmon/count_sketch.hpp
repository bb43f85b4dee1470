#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "leanmon/hashing.hpp"

namespace leanmon {

/// Table dimensions: `rows` independent rows of `buckets` counters.
struct SketchShape {
  std::uint32_t rows = 5;
  std::uint32_t buckets = 2000;

  /// rows = ceil(log2(1/delta)), buckets = ceil(9/eps^2).
  [[nodiscard]] static SketchShape from_error(double epsilon, double delta);
  /// Emulates hardware register arrays: buckets = budget / (rows * counter_bytes).
  /// 40000 bytes with 5 rows of 32-bit counters gives 2000 buckets.
  [[nodiscard]] static SketchShape from_budget(std::size_t budget_bytes, std::uint32_t rows = 5,
                                               std::size_t counter_bytes = 4);

  /// Error guarantee of this width: the epsilon that from_error maps to
  /// `buckets`, 3 / sqrt(buckets).
  [[nodiscard]] double epsilon() const noexcept;
  /// Bytes used by the counters if they were `counter_bytes` wide.
  [[nodiscard]] std::size_t counter_memory(std::size_t counter_bytes = 4) const noexcept {
    return std::size_t{rows} * buckets * counter_bytes;
  }

  friend bool operator==(const SketchShape&, const SketchShape&) = default;
};

/// A key with its sketch estimate, as produced by heavy_keys().
struct RankedKey {
  std::vector<std::uint8_t> bytes;
  std::int64_t estimate = 0;
};

#ifdef NDEBUG
inline constexpr bool kCheckedDefault = false;
#else
inline constexpr bool kCheckedDefault = true;
#endif

/// CountSketch: an R x B table of signed 64-bit counters. Row j adds
/// sign_j(key) * delta to bucket_j(key); the estimate for a key is the
/// median over rows of sign_j(key) * counter.
///
/// Not thread-safe. One writer updates; readers may query once updates
/// have stopped. Concurrent update and query is undefined.
class CountSketchTable {
 public:
  CountSketchTable(SketchShape shape, std::uint64_t run_seed,
                   HashFamily family = HashFamily::MultiplyShift, bool checked = kCheckedDefault);

  /// Adds sign_j(key) * delta to one counter per row.
  /// In checked mode, counter overflow throws std::overflow_error naming the cell.
  void update(std::span<const std::uint8_t> key, std::int64_t delta);
  void update_digest(std::uint64_t digest, std::int64_t delta);

  /// Median over rows; for even R the lower of the two middle values.
  [[nodiscard]] std::int64_t estimate(std::span<const std::uint8_t> key) const;
  [[nodiscard]] std::int64_t estimate_digest(std::uint64_t digest) const;
  [[nodiscard]] std::int64_t estimate_abs(std::span<const std::uint8_t> key) const;

  /// Candidates whose |estimate| >= threshold, largest first, ties by bytes.
  [[nodiscard]] std::vector<RankedKey> heavy_keys(
      std::span<const std::vector<std::uint8_t>> candidates, std::int64_t threshold) const;

  /// Counter-wise addition. Both tables must share shape and hash functions.
  void merge(const CountSketchTable& other);
  void clear() noexcept;

  [[nodiscard]] SketchShape shape() const noexcept { return shape_; }
  [[nodiscard]] std::uint32_t rows() const noexcept { return shape_.rows; }
  [[nodiscard]] std::uint32_t buckets() const noexcept { return shape_.buckets; }
  [[nodiscard]] std::uint64_t run_seed() const noexcept { return run_seed_; }
  [[nodiscard]] HashFamily family() const noexcept { return family_; }
  [[nodiscard]] bool checked() const noexcept { return checked_; }

  /// Sum of |delta| over all updates.
  [[nodiscard]] std::int64_t total_l1() const noexcept { return total_l1_; }
  /// Sum of |counter| over one row; maintained incrementally.
  [[nodiscard]] std::int64_t row_l1(std::uint32_t row) const { return row_l1_.at(row); }
  /// Sum of counter^2 over one row; maintained incrementally in double
  /// precision, exact while counters stay below 2^26 in magnitude.
  [[nodiscard]] double row_f2(std::uint32_t row) const { return row_f2_.at(row); }
  /// Median over rows of row_f2: an estimate of the sum of squared flow
  /// values (the squared l2 norm).
  [[nodiscard]] double f2_estimate() const;

  [[nodiscard]] std::int64_t counter(std::uint32_t row, std::uint32_t bucket) const {
    return counters_.at(std::size_t{row} * shape_.buckets + bucket);
  }
  [[nodiscard]] std::span<const std::int64_t> counters() const noexcept { return counters_; }
  [[nodiscard]] const HashPair& row_hash(std::uint32_t row) const { return row_hashes_.at(row); }
  [[nodiscard]] const HashPair& sign_hash(std::uint32_t row) const { return sign_hashes_.at(row); }

  [[nodiscard]] bool same_hashes(const CountSketchTable& other) const noexcept;

  /// Snapshot: "LMS1", rows u32, buckets u32, family u8, run_seed u64,
  /// total_l1 i64, per row (bucket a,b, sign a,b) u64, then row-major
  /// counters as i64. Little-endian throughout.
  void write_snapshot(std::ostream& out) const;
  [[nodiscard]] static CountSketchTable read_snapshot(std::istream& in);

  friend bool operator==(const CountSketchTable& a, const CountSketchTable& b) noexcept;

 private:
  CountSketchTable() = default;
  void add(std::uint32_t row, std::size_t bucket, std::int64_t delta);

  SketchShape shape_;
  std::uint64_t run_seed_ = 0;
  HashFamily family_ = HashFamily::MultiplyShift;
  bool checked_ = kCheckedDefault;
  std::vector<HashPair> row_hashes_;
  std::vector<HashPair> sign_hashes_;
  std::vector<std::int64_t> counters_;
  std::vector<std::int64_t> row_l1_;
  std::vector<double> row_f2_;
  std::int64_t total_l1_ = 0;
};

/// Lower median of a small buffer; reorders it.
[[nodiscard]] std::int64_t lower_median(std::span<std::int64_t> values);

}  // namespace leanmon
