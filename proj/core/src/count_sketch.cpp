#include "leanmon/count_sketch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "leanmon/binary_io.hpp"
#include "leanmon/error.hpp"

namespace leanmon {

double SketchShape::epsilon() const noexcept { return 3.0 / std::sqrt(static_cast<double>(buckets)); }

namespace {

constexpr char kSnapshotMagic[4] = {'L', 'M', 'S', '1'};
constexpr std::uint32_t kMaxRows = 64;

std::int64_t abs64(std::int64_t v) { return v < 0 ? -v : v; }

}  // namespace

SketchShape SketchShape::from_error(double epsilon, double delta) {
  if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must be in (0, 1)");
  if (!(delta > 0 && delta < 1)) throw ConfigError("delta must be in (0, 1)");
  SketchShape s;
  s.rows = static_cast<std::uint32_t>(std::max(1.0, std::ceil(std::log2(1.0 / delta))));
  s.buckets = static_cast<std::uint32_t>(std::ceil(9.0 / (epsilon * epsilon)));
  return s;
}

SketchShape SketchShape::from_budget(std::size_t budget_bytes, std::uint32_t rows,
                                     std::size_t counter_bytes) {
  if (rows == 0 || counter_bytes == 0) throw ConfigError("rows and counter width must be positive");
  const std::size_t buckets = budget_bytes / (std::size_t{rows} * counter_bytes);
  if (buckets == 0) {
    throw ConfigError("memory budget of " + std::to_string(budget_bytes) +
                      " bytes is too small for " + std::to_string(rows) + " rows");
  }
  return SketchShape{rows, static_cast<std::uint32_t>(buckets)};
}

std::int64_t lower_median(std::span<std::int64_t> values) {
  if (values.empty()) return 0;
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

CountSketchTable::CountSketchTable(SketchShape shape, std::uint64_t run_seed, HashFamily family,
                                   bool checked)
    : shape_(shape), run_seed_(run_seed), family_(family), checked_(checked) {
  if (shape.rows == 0 || shape.rows > kMaxRows) {
    throw ConfigError("row count must be in [1, " + std::to_string(kMaxRows) + "]");
  }
  if (shape.buckets == 0) throw ConfigError("bucket count must be >= 1");
  row_hashes_.reserve(shape.rows);
  sign_hashes_.reserve(shape.rows);
  for (std::uint32_t j = 0; j < shape.rows; ++j) {
    row_hashes_.push_back(make_hash_pair(run_seed, HashStream::Bucket, j, family));
    sign_hashes_.push_back(make_hash_pair(run_seed, HashStream::Sign, j, family));
  }
  counters_.assign(std::size_t{shape.rows} * shape.buckets, 0);
  row_l1_.assign(shape.rows, 0);
  row_f2_.assign(shape.rows, 0.0);
}

void CountSketchTable::add(std::uint32_t row, std::size_t b, std::int64_t delta) {
  std::int64_t& cell = counters_[std::size_t{row} * shape_.buckets + b];
  const std::int64_t before = cell;
  if (checked_) {
    std::int64_t after;
    if (__builtin_add_overflow(before, delta, &after) || after == INT64_MIN) {
      throw std::overflow_error("CountSketch counter overflow at row " + std::to_string(row) +
                                ", bucket " + std::to_string(b));
    }
    cell = after;
  } else {
    cell = static_cast<std::int64_t>(static_cast<std::uint64_t>(before) +
                                     static_cast<std::uint64_t>(delta));
  }
  row_l1_[row] += abs64(cell) - abs64(before);
  row_f2_[row] += static_cast<double>(cell - before) * static_cast<double>(cell + before);
}

void CountSketchTable::update_digest(std::uint64_t digest, std::int64_t delta) {
  for (std::uint32_t j = 0; j < shape_.rows; ++j) {
    const std::size_t b = bucket(row_hashes_[j], digest, shape_.buckets);
    add(j, b, sign(sign_hashes_[j], digest) * delta);
  }
  total_l1_ += abs64(delta);
}

void CountSketchTable::update(std::span<const std::uint8_t> key, std::int64_t delta) {
  update_digest(fold64(key), delta);
}

std::int64_t CountSketchTable::estimate_digest(std::uint64_t digest) const {
  std::array<std::int64_t, kMaxRows> buf{};
  for (std::uint32_t j = 0; j < shape_.rows; ++j) {
    const std::size_t b = bucket(row_hashes_[j], digest, shape_.buckets);
    buf[j] = sign(sign_hashes_[j], digest) * counters_[std::size_t{j} * shape_.buckets + b];
  }
  return lower_median(std::span(buf.data(), shape_.rows));
}

std::int64_t CountSketchTable::estimate(std::span<const std::uint8_t> key) const {
  return estimate_digest(fold64(key));
}

std::int64_t CountSketchTable::estimate_abs(std::span<const std::uint8_t> key) const {
  return abs64(estimate(key));
}

std::vector<RankedKey> CountSketchTable::heavy_keys(
    std::span<const std::vector<std::uint8_t>> candidates, std::int64_t threshold) const {
  std::vector<RankedKey> out;
  for (const auto& c : candidates) {
    const std::int64_t e = estimate_abs(c);
    if (e >= threshold) out.push_back(RankedKey{c, e});
  }
  std::sort(out.begin(), out.end(), [](const RankedKey& x, const RankedKey& y) {
    if (x.estimate != y.estimate) return x.estimate > y.estimate;
    return x.bytes < y.bytes;
  });
  return out;
}

bool CountSketchTable::same_hashes(const CountSketchTable& other) const noexcept {
  return shape_ == other.shape_ && family_ == other.family_ && row_hashes_ == other.row_hashes_ &&
         sign_hashes_ == other.sign_hashes_;
}

void CountSketchTable::merge(const CountSketchTable& other) {
  if (!same_hashes(other)) {
    throw ConfigError("cannot merge CountSketch tables with different shapes or seeds");
  }
  for (std::uint32_t j = 0; j < shape_.rows; ++j) {
    for (std::uint32_t b = 0; b < shape_.buckets; ++b) {
      add(j, b, other.counters_[std::size_t{j} * shape_.buckets + b]);
    }
  }
  total_l1_ += other.total_l1_;
}

double CountSketchTable::f2_estimate() const {
  std::vector<double> v(row_f2_);
  std::nth_element(v.begin(), v.begin() + (v.size() - 1) / 2, v.end());
  return std::max(0.0, v[(v.size() - 1) / 2]);
}

void CountSketchTable::clear() noexcept {
  std::fill(counters_.begin(), counters_.end(), 0);
  std::fill(row_l1_.begin(), row_l1_.end(), 0);
  std::fill(row_f2_.begin(), row_f2_.end(), 0.0);
  total_l1_ = 0;
}

void CountSketchTable::write_snapshot(std::ostream& out) const {
  out.write(kSnapshotMagic, 4);
  binio::put<std::uint32_t>(out, shape_.rows);
  binio::put<std::uint32_t>(out, shape_.buckets);
  binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(family_));
  binio::put<std::uint64_t>(out, run_seed_);
  binio::put<std::int64_t>(out, total_l1_);
  for (std::uint32_t j = 0; j < shape_.rows; ++j) {
    binio::put<std::uint64_t>(out, row_hashes_[j].a);
    binio::put<std::uint64_t>(out, row_hashes_[j].b);
    binio::put<std::uint64_t>(out, sign_hashes_[j].a);
    binio::put<std::uint64_t>(out, sign_hashes_[j].b);
  }
  for (std::int64_t c : counters_) binio::put<std::int64_t>(out, c);
}

CountSketchTable CountSketchTable::read_snapshot(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kSnapshotMagic)) {
    throw DataError("not a sketch snapshot (bad magic)");
  }
  CountSketchTable t;
  t.shape_.rows = binio::get<std::uint32_t>(in, "snapshot rows");
  t.shape_.buckets = binio::get<std::uint32_t>(in, "snapshot buckets");
  if (t.shape_.rows == 0 || t.shape_.rows > kMaxRows || t.shape_.buckets == 0) {
    throw DataError("snapshot has invalid shape");
  }
  const auto fam = binio::get<std::uint8_t>(in, "snapshot hash family");
  if (fam > 1) throw DataError("snapshot has unknown hash family");
  t.family_ = static_cast<HashFamily>(fam);
  t.run_seed_ = binio::get<std::uint64_t>(in, "snapshot seed");
  t.total_l1_ = binio::get<std::int64_t>(in, "snapshot total");
  t.checked_ = kCheckedDefault;
  for (std::uint32_t j = 0; j < t.shape_.rows; ++j) {
    HashPair h{binio::get<std::uint64_t>(in, "hash"), binio::get<std::uint64_t>(in, "hash"), j,
               t.family_};
    HashPair g{binio::get<std::uint64_t>(in, "hash"), binio::get<std::uint64_t>(in, "hash"), j,
               t.family_};
    t.row_hashes_.push_back(h);
    t.sign_hashes_.push_back(g);
  }
  t.counters_.resize(std::size_t{t.shape_.rows} * t.shape_.buckets);
  t.row_l1_.assign(t.shape_.rows, 0);
  t.row_f2_.assign(t.shape_.rows, 0.0);
  for (std::size_t i = 0; i < t.counters_.size(); ++i) {
    t.counters_[i] = binio::get<std::int64_t>(in, "snapshot counters");
    const auto c = static_cast<double>(t.counters_[i]);
    t.row_l1_[i / t.shape_.buckets] += abs64(t.counters_[i]);
    t.row_f2_[i / t.shape_.buckets] += c * c;
  }
  return t;
}

bool operator==(const CountSketchTable& a, const CountSketchTable& b) noexcept {
  return a.same_hashes(b) && a.run_seed_ == b.run_seed_ && a.counters_ == b.counters_ &&
         a.total_l1_ == b.total_l1_;
}

}  // namespace leanmon
