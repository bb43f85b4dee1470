#include "leanmon/latency.hpp"

#include <cstdlib>
#include <unordered_set>

#include "leanmon/error.hpp"

namespace leanmon {

bool passes(TypeFilter f, PacketType t) noexcept {
  const bool handshake = t == PacketType::Syn || t == PacketType::SynAck;
  const bool data = t == PacketType::Data || t == PacketType::Ack;
  switch (f) {
    case TypeFilter::Handshake: return handshake;
    case TypeFilter::DataAck: return data;
    case TypeFilter::All: return handshake || data;
  }
  return false;
}

TypeFilter parse_type_filter(const std::string& text) {
  if (text == "handshake" || text == "syn") return TypeFilter::Handshake;
  if (text == "data" || text == "data-ack") return TypeFilter::DataAck;
  if (text == "all") return TypeFilter::All;
  throw ConfigError("unknown type filter '" + text + "' (handshake, data-ack, all)");
}

std::string to_string(TypeFilter f) {
  switch (f) {
    case TypeFilter::Handshake: return "handshake";
    case TypeFilter::DataAck: return "data-ack";
    case TypeFilter::All: return "all";
  }
  return "?";
}

LatencyDetector::LatencyDetector(const LatencyConfig& cfg)
    : cfg_(cfg), table_(cfg.shape, cfg.seed, cfg.family, cfg.checked) {
  if (cfg.time_unit_ns == 0) throw ConfigError("time unit must be positive");
}

ObserveStatus LatencyDetector::observe(const PacketRecord& p) {
  if (!passes(cfg_.filter, p.type)) {
    ++skipped_;
    return ObserveStatus::Skipped;
  }
  if (p.ts < cfg_.epoch_start_ns) {
    ++rejected_;
    diagnostic_ = "packet at ts=" + std::to_string(p.ts) + " precedes epoch start " +
                  std::to_string(cfg_.epoch_start_ns);
    return ObserveStatus::Rejected;
  }
  const auto t = static_cast<std::int64_t>((p.ts - cfg_.epoch_start_ns) / cfg_.time_unit_ns);
  const CanonicalPair pair = canonicalize(p.key);
  const PairBytes bytes = key_bytes(pair);
  table_.update(bytes, pair.forward ? t : -t);

  now_ = t;
  if (is_request(p.type)) {
    request_sum_ += t;
    ++outstanding_;
  } else {
    response_sum_ += t;
    --outstanding_;
  }
  return ObserveStatus::Applied;
}

std::int64_t LatencyDetector::estimate(const FlowKey& key) const {
  return std::llabs(table_.estimate(key_bytes(canonicalize(key))));
}

std::int64_t LatencyDetector::accrued_rtt() const noexcept {
  const std::int64_t waiting = outstanding_ > 0 ? outstanding_ * now_ : 0;
  const std::int64_t v = response_sum_ - request_sum_ + waiting;
  return v > 0 ? v : 0;
}

HeavyReport LatencyDetector::topk(std::span<const FlowKey> candidates, std::size_t k,
                                  double epsilon) const {
  HeavyReport r;
  r.total = static_cast<double>(accrued_rtt());
  r.threshold = epsilon * r.total;
  std::unordered_set<FlowKey> seen;
  for (const FlowKey& c : candidates) {
    const FlowKey name = canonicalize(c).key();
    if (!seen.insert(name).second) continue;
    const double v = static_cast<double>(estimate(c));
    if (v >= r.threshold) r.entries.push_back({name, v});
  }
  rank_and_truncate(r.entries, k);
  return r;
}

}  // namespace leanmon
