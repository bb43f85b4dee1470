#include "leanmon/retransmit.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "leanmon/error.hpp"
#include "leanmon/hashing.hpp"

namespace leanmon {

namespace {

double alpha(std::uint32_t m) {
  switch (m) {
    case 16: return 0.673;
    case 32: return 0.697;
    case 64: return 0.709;
    default: return 0.7213 / (1.0 + 1.079 / m);
  }
}

}  // namespace

HyperLogLog::HyperLogLog(std::uint32_t registers, std::uint64_t seed, std::uint32_t instance)
    : regs_(registers, 0),
      p_(static_cast<std::uint32_t>(std::countr_zero(registers))),
      salt_(make_hash_pair(seed, HashStream::Distinct, instance).a),
      inv_sum_(registers),
      zeros_(registers) {
  if (registers < 16 || registers > 65536 || !std::has_single_bit(registers)) {
    throw ConfigError("register count must be a power of two in [16, 65536]");
  }
}

void HyperLogLog::insert(std::uint64_t item) {
  const std::uint64_t h = mix64(item * salt_ + (salt_ >> 7));
  const std::size_t idx = h >> (64 - p_);
  const std::uint64_t rest = (h << p_) | (std::uint64_t{1} << (p_ - 1));
  const auto rank = static_cast<std::uint8_t>(std::countl_zero(rest) + 1);
  std::uint8_t& r = regs_[idx];
  if (rank <= r) return;
  if (r == 0) --zeros_;
  inv_sum_ += std::ldexp(1.0, -rank) - std::ldexp(1.0, -r);
  r = rank;
  floor_ = std::max(floor_, raw_estimate());
}

double HyperLogLog::raw_estimate() const noexcept {
  const double m = static_cast<double>(regs_.size());
  if (zeros_ == regs_.size()) return 0;
  const double e = alpha(static_cast<std::uint32_t>(regs_.size())) * m * m / inv_sum_;
  if (e <= 2.5 * m && zeros_ > 0) return m * std::log(m / zeros_);
  return e;
}

void HyperLogLog::merge(const HyperLogLog& other) {
  if (other.regs_.size() != regs_.size() || other.salt_ != salt_) {
    throw ConfigError("cannot merge HyperLogLogs with different shapes or seeds");
  }
  for (std::size_t i = 0; i < regs_.size(); ++i) {
    if (other.regs_[i] <= regs_[i]) continue;
    if (regs_[i] == 0) --zeros_;
    inv_sum_ += std::ldexp(1.0, -other.regs_[i]) - std::ldexp(1.0, -regs_[i]);
    regs_[i] = other.regs_[i];
  }
  floor_ = std::max({floor_, other.floor_, raw_estimate()});
}

DistinctEstimator::DistinctEstimator(std::uint64_t seed, std::uint32_t registers)
    : instances_{HyperLogLog(registers, seed, 0), HyperLogLog(registers, seed, 1),
                 HyperLogLog(registers, seed, 2)} {}

void DistinctEstimator::insert(std::uint64_t item) {
  for (auto& h : instances_) h.insert(item);
}

double DistinctEstimator::estimate() const noexcept {
  std::array<double, 3> e{instances_[0].estimate(), instances_[1].estimate(),
                          instances_[2].estimate()};
  std::sort(e.begin(), e.end());
  return e[1];
}

std::size_t DistinctEstimator::memory_bytes() const noexcept {
  return instances_.size() * instances_[0].registers();
}

double TrackedFlow::ratio() const noexcept {
  const double d = distinct.estimate();
  return d > 0 ? static_cast<double>(packets) / d : 0.0;
}

RetransmitTracker::RetransmitTracker(const RetransmitConfig& cfg)
    : cfg_(cfg), table_(cfg.shape, cfg.seed, cfg.family, cfg.checked) {
  if (!(cfg.epsilon > 0 && cfg.epsilon < 1)) throw ConfigError("epsilon must be in (0, 1)");
  capacity_ = static_cast<std::size_t>(std::ceil(2.0 / cfg.epsilon)) + cfg.slack;
  next_sweep_ = capacity_;
  (void)DistinctEstimator(cfg.seed, cfg.registers);  // validates the register count
}

double RetransmitTracker::share(const FlowKey& key) const {
  return static_cast<double>(table_.estimate(key_bytes(key)));
}

bool RetransmitTracker::observe(const PacketRecord& p) {
  if (p.type != PacketType::Data) return false;
  const auto bytes = key_bytes(p.key);
  table_.update(bytes, 1);
  ++total_;
  const double est = static_cast<double>(table_.estimate(bytes));
  const double t = static_cast<double>(total_);

  if (auto it = flows_.find(p.key); it != flows_.end()) {
    if (est < cfg_.epsilon / 4 * t) {
      flows_.erase(it);
    } else {
      ++it->second.packets;
      it->second.distinct.insert(p.seq);
    }
  } else if (est >= cfg_.epsilon / 2 * t) {
    if (flows_.size() >= capacity_) sweep();
    if (flows_.size() >= capacity_) evict_smallest();
    TrackedFlow f{p.key, 1, DistinctEstimator(cfg_.seed, cfg_.registers), p.ts};
    f.distinct.insert(p.seq);
    flows_.emplace(p.key, std::move(f));
  }

  if (total_ >= next_sweep_) {
    sweep();
    next_sweep_ = total_ + capacity_;
  }
  return true;
}

void RetransmitTracker::sweep() {
  const double cut = cfg_.epsilon / 4 * static_cast<double>(total_);
  std::erase_if(flows_, [&](const auto& kv) { return share(kv.first) < cut; });
}

void RetransmitTracker::evict_smallest() {
  auto victim = flows_.end();
  double smallest = std::numeric_limits<double>::infinity();
  for (auto it = flows_.begin(); it != flows_.end(); ++it) {
    const double s = share(it->first);
    if (s < smallest || (s == smallest && it->first < victim->first)) {
      smallest = s;
      victim = it;
    }
  }
  if (victim != flows_.end()) {
    flows_.erase(victim);
    ++evictions_;
  }
}

const TrackedFlow* RetransmitTracker::flow(const FlowKey& key) const {
  auto it = flows_.find(key);
  return it == flows_.end() ? nullptr : &it->second;
}

HeavyReport RetransmitTracker::report(double k, std::size_t top_n) const {
  if (!(k > 1)) throw ConfigError("retransmission threshold k must exceed 1");
  HeavyReport r;
  r.total = static_cast<double>(total_);
  r.threshold = k / 4;
  const double cut = cfg_.epsilon / 4 * static_cast<double>(total_);
  for (const auto& [key, f] : flows_) {
    if (share(key) < cut) continue;  // tracking would have stopped
    const double ratio = f.ratio();
    if (ratio > 0 && ratio >= r.threshold) r.entries.push_back({key, ratio});
  }
  rank_and_truncate(r.entries, top_n);
  return r;
}

std::size_t RetransmitTracker::memory_bytes() const noexcept {
  const std::size_t per_flow =
      FlowKey::kBytes + 8 + 3 * std::size_t{cfg_.registers};
  return table_.shape().counter_memory() + capacity_ * per_flow;
}

}  // namespace leanmon
