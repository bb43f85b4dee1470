#include "leanmon/loss.hpp"

#include <array>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <unordered_set>
#include <vector>

#include "leanmon/error.hpp"

namespace leanmon {

LossDetector::LossDetector(const LossConfig& cfg)
    : table_(cfg.shape, cfg.seed, cfg.family, cfg.checked),
      pair_hash_(make_hash_pair(cfg.seed, HashStream::PairSign, 0, cfg.family)) {}

int LossDetector::pair_sign(std::uint64_t pair_index) const noexcept {
  return sign(pair_hash_, pair_index);
}

bool LossDetector::observe(const PacketRecord& p) {
  if (p.type != PacketType::Data || p.seq == 0) {
    ++skipped_;
    return false;
  }
  const std::int64_t step =
      (p.seq % 2 == 1) ? pair_sign((p.seq + 1) / 2) : -pair_sign(p.seq / 2);
  table_.update(key_bytes(p.key), step);
  return true;
}

std::int64_t LossDetector::estimate(const FlowKey& key) const {
  return std::llabs(table_.estimate(key_bytes(key)));
}

std::int64_t LossDetector::mass() const {
  std::vector<std::int64_t> sums(table_.rows());
  for (std::uint32_t j = 0; j < table_.rows(); ++j) sums[j] = table_.row_l1(j);
  return lower_median(sums);
}

double LossDetector::l2() const { return std::sqrt(table_.f2_estimate()); }

HeavyReport LossDetector::topk(std::span<const FlowKey> candidates, std::size_t k,
                               double epsilon) const {
  HeavyReport r;
  std::unordered_set<FlowKey> seen;
  for (const FlowKey& c : candidates) {
    if (!seen.insert(c).second) continue;
    const double f = static_cast<double>(estimate(c));
    r.total += f;
    r.entries.push_back({c, f});
  }
  r.threshold = epsilon * r.total;
  std::erase_if(r.entries, [&](const HeavyEntry& e) { return !(e.value > r.threshold); });
  rank_and_truncate(r.entries, k);
  return r;
}

std::uint64_t loss_count_estimate(double walk_length) {
  if (!(walk_length >= 0)) throw ConfigError("walk length must be non-negative");
  return static_cast<std::uint64_t>(std::llround(std::numbers::pi * walk_length * walk_length / 2));
}

}  // namespace leanmon
