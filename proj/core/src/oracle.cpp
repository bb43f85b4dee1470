#include "leanmon/oracle.hpp"

#include <algorithm>
#include <cstdlib>
#include <deque>
#include <map>
#include <unordered_set>

namespace leanmon {

namespace {

struct PairId {
  FlowKey conv;
  bool handshake;
  std::uint64_t id;
  bool lo_to_hi;  // direction of the request

  friend bool operator<(const PairId& a, const PairId& b) {
    return std::tie(a.conv, a.handshake, a.id, a.lo_to_hi) <
           std::tie(b.conv, b.handshake, b.id, b.lo_to_hi);
  }
};

bool is_lo_to_hi(const FlowKey& k) {
  return std::tie(k.src, k.src_port) <= std::tie(k.dst, k.dst_port);
}

FlowKey conversation(const FlowKey& k) { return is_lo_to_hi(k) ? k : k.reversed(); }

}  // namespace

RttOracle oracle_rtt(const std::vector<PacketRecord>& trace, TypeFilter filter,
                     std::uint64_t time_unit_ns, std::uint64_t epoch_start_ns) {
  std::unordered_map<FlowKey, std::int64_t> signed_sum;
  std::map<PairId, std::deque<std::uint64_t>> open;
  RttOracle out;
  for (const auto& p : trace) {
    if (!passes(filter, p.type) || p.ts < epoch_start_ns) continue;
    const FlowKey conv = conversation(p.key);
    const bool handshake = p.type == PacketType::Syn || p.type == PacketType::SynAck;
    const auto t = static_cast<std::int64_t>((p.ts - epoch_start_ns) / time_unit_ns);
    if (is_request(p.type)) {
      signed_sum[conv] -= t;
      open[{conv, handshake, p.seq, is_lo_to_hi(p.key)}].push_back(p.ts);
    } else {
      signed_sum[conv] += t;
      // The request travelled the other way.
      auto it = open.find({conv, handshake, p.ack, !is_lo_to_hi(p.key)});
      if (it != open.end() && !it->second.empty()) {
        out.strict[conv] += static_cast<double>(p.ts - it->second.front());
        it->second.pop_front();
      }
    }
  }
  for (const auto& [k, v] : signed_sum) out.mirror[k] = static_cast<double>(std::llabs(v));
  return out;
}

FlowValues oracle_loss(const std::vector<PacketRecord>& trace) {
  std::unordered_map<FlowKey, std::unordered_set<std::uint64_t>> ids;
  std::unordered_map<FlowKey, std::uint64_t> max_id;
  for (const auto& p : trace) {
    if (p.type != PacketType::Data || p.seq == 0) continue;
    ids[p.key].insert(p.seq);
    auto& m = max_id[p.key];
    m = std::max(m, p.seq);
  }
  FlowValues out;
  for (const auto& [k, s] : ids) out[k] = static_cast<double>(max_id[k] - s.size());
  return out;
}

FlowValues oracle_ooo(const std::vector<PacketRecord>& trace, std::uint64_t window_ns,
                      WeightMode weight) {
  struct State {
    std::uint64_t max_seq;
    std::uint64_t last_ts;
  };
  std::unordered_map<FlowKey, State> state;
  FlowValues out;
  for (const auto& p : trace) {
    if (p.type != PacketType::Data) continue;
    auto it = state.find(p.key);
    if (it == state.end() || p.ts - it->second.last_ts > window_ns) {
      state[p.key] = {p.seq, p.ts};
      continue;
    }
    State& s = it->second;
    if (p.seq <= s.max_seq) {
      out[p.key] += weight == WeightMode::Bytes ? p.size : 1;
    } else {
      s.max_seq = p.seq;
    }
    s.last_ts = p.ts;
  }
  return out;
}

std::unordered_map<FlowKey, RtxStats> oracle_rtx(const std::vector<PacketRecord>& trace) {
  std::unordered_map<FlowKey, std::unordered_set<std::uint64_t>> ids;
  std::unordered_map<FlowKey, RtxStats> out;
  for (const auto& p : trace) {
    if (p.type != PacketType::Data) continue;
    ++out[p.key].packets;
    ids[p.key].insert(p.seq);
  }
  for (auto& [k, s] : out) s.distinct = ids[k].size();
  return out;
}

FlowValues oracle_count(const std::vector<PacketRecord>& trace) {
  FlowValues out;
  for (const auto& p : trace) {
    if (p.type == PacketType::Data) out[p.key] += 1;
  }
  return out;
}

std::vector<FlowKey> relevant_topk(const FlowValues& values, std::size_t k) {
  std::vector<std::pair<FlowKey, double>> v;
  for (const auto& kv : values) {
    if (kv.second > 0) v.push_back(kv);
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<FlowKey> out;
  for (std::size_t i = 0; i < v.size() && i < k; ++i) out.push_back(v[i].first);
  return out;
}

}  // namespace leanmon
