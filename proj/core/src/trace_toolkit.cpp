#include "leanmon/trace_toolkit.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "leanmon/error.hpp"
#include "leanmon/hashing.hpp"
#include "leanmon/oracle.hpp"
#include "leanmon/trace_io.hpp"

namespace leanmon {

namespace {

__extension__ typedef unsigned __int128 u128;

constexpr std::uint32_t kControlSize = 64;
constexpr std::uint32_t kMinDataSize = 64;
constexpr std::uint32_t kMaxDataSize = 1500;

bool record_less(const PacketRecord& a, const PacketRecord& b) {
  return std::tie(a.ts, a.key, a.type, a.seq, a.ack, a.size) <
         std::tie(b.ts, b.key, b.type, b.seq, b.ack, b.size);
}

std::vector<FlowKey> random_keys(std::size_t n, Rng& rng) {
  std::vector<FlowKey> keys;
  keys.reserve(n);
  std::unordered_set<FlowKey> conversations;
  while (keys.size() < n) {
    FlowKey k{static_cast<std::uint32_t>(rng.next()), static_cast<std::uint32_t>(rng.next()),
              static_cast<std::uint16_t>(1024 + rng.below(64512)),
              static_cast<std::uint16_t>(1024 + rng.below(64512)), 6};
    if (k.src == k.dst) continue;
    // A key and its reverse name the same conversation.
    if (!conversations.insert(canonicalize(k).key()).second) continue;
    keys.push_back(k);
  }
  return keys;
}

std::vector<std::size_t> zipf_sizes(const SynthConfig& cfg, Rng& rng) {
  std::vector<double> cdf(cfg.flows);
  double acc = 0;
  for (std::size_t r = 0; r < cfg.flows; ++r) {
    acc += std::pow(static_cast<double>(r + 1), -cfg.zipf);
    cdf[r] = acc;
  }
  std::vector<std::size_t> sizes(cfg.flows, 1);
  for (std::size_t i = cfg.flows; i < cfg.packets; ++i) {
    const double u = rng.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    ++sizes[std::min<std::size_t>(it - cdf.begin(), cfg.flows - 1)];
  }
  return sizes;
}

std::uint64_t log_uniform(std::uint64_t lo, std::uint64_t hi, Rng& rng) {
  if (hi <= lo) return lo;
  const double l = std::log(static_cast<double>(lo));
  const double h = std::log(static_cast<double>(hi));
  return static_cast<std::uint64_t>(std::exp(l + (h - l) * rng.uniform()));
}

void check_rate(double rate, const char* what) {
  if (!(rate >= 0 && rate < 1)) {
    throw ConfigError(std::string(what) + " rate must be in [0, 1)");
  }
}

}  // namespace

std::uint64_t Rng::next() noexcept { return splitmix64(state_); }

double Rng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1p-53; }

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  return static_cast<std::uint64_t>((static_cast<u128>(next()) * n) >> 64);
}

std::vector<PacketRecord> synthesize(const SynthConfig& cfg) {
  if (cfg.flows == 0) throw ConfigError("flow count must be at least 1");
  if (cfg.flows > cfg.packets) {
    throw ConfigError("infeasible trace: " + std::to_string(cfg.flows) + " flows but only " +
                      std::to_string(cfg.packets) + " packets");
  }
  if (!(cfg.zipf > 0)) throw ConfigError("zipf exponent must be positive");
  if (cfg.epoch_ns <= cfg.tail_margin_ns + cfg.rtt_max_ns) throw ConfigError("epoch too short");

  Rng rng(cfg.seed);
  const auto keys = random_keys(cfg.flows, rng);
  const auto sizes = zipf_sizes(cfg, rng);
  const std::uint64_t usable = cfg.epoch_ns - cfg.tail_margin_ns - cfg.rtt_max_ns;

  std::vector<PacketRecord> out;
  out.reserve(cfg.bidirectional ? 2 * cfg.packets + 2 * cfg.flows : cfg.packets);
  std::vector<std::uint64_t> times;
  for (std::size_t f = 0; f < cfg.flows; ++f) {
    const FlowKey& key = keys[f];
    const std::size_t n = sizes[f];
    const std::uint64_t gap = std::min<std::uint64_t>(cfg.max_gap_ns, usable / (2 * n));
    const std::uint64_t span = gap * n;
    std::uint64_t start = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(usable - span));
    const std::uint64_t rtt = cfg.bidirectional ? log_uniform(cfg.rtt_min_ns, cfg.rtt_max_ns, rng) : 0;
    if (cfg.bidirectional) {
      out.push_back({key, PacketType::Syn, 1, 0, start, kControlSize});
      out.push_back({key.reversed(), PacketType::SynAck, 0, 1, start + rtt, kControlSize});
      start += rtt;
    }
    times.resize(n);
    for (auto& t : times) t = start + static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(span));
    std::sort(times.begin(), times.end());
    for (std::size_t i = 0; i < n; ++i) {
      const auto size = static_cast<std::uint32_t>(kMinDataSize + rng.below(kMaxDataSize - kMinDataSize + 1));
      out.push_back({key, PacketType::Data, i + 1, 0, times[i], size});
      if (cfg.bidirectional) {
        out.push_back({key.reversed(), PacketType::Ack, 0, i + 1, times[i] + rtt, kControlSize});
      }
    }
  }
  std::sort(out.begin(), out.end(), record_less);
  return out;
}

std::string to_string(FaultKind k) {
  switch (k) {
    case FaultKind::None: return "none";
    case FaultKind::Latency: return "latency";
    case FaultKind::Loss: return "loss";
    case FaultKind::Reorder: return "reorder";
    case FaultKind::Duplicate: return "duplicate";
  }
  return "?";
}

FaultKind parse_fault_kind(const std::string& text) {
  for (auto k : {FaultKind::None, FaultKind::Latency, FaultKind::Loss, FaultKind::Reorder,
                 FaultKind::Duplicate}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown fault kind '" + text + "' (latency, loss, reorder, duplicate)");
}

std::vector<FlowKey> select_victims(const std::vector<PacketRecord>& trace, const VictimRule& rule,
                                    std::uint64_t seed) {
  if (!rule.keys.empty()) {
    std::unordered_set<FlowKey> present;
    for (const auto& p : trace) present.insert(p.key);
    std::string missing;
    for (const auto& k : rule.keys) {
      if (!present.contains(k)) missing += (missing.empty() ? "" : ", ") + key_hex(k);
    }
    if (!missing.empty()) throw DataError("victims not found in trace: " + missing);
    return rule.keys;
  }
  const FlowValues counts = oracle_count(trace);
  std::vector<std::pair<FlowKey, double>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t pool = std::min(rule.pool, ranked.size());
  if (rule.count > pool) {
    throw ConfigError("cannot pick " + std::to_string(rule.count) + " victims from a pool of " +
                      std::to_string(pool) + " flows");
  }
  std::vector<FlowKey> keys;
  for (std::size_t i = 0; i < pool; ++i) keys.push_back(ranked[i].first);
  Rng rng(seed ^ 0x564943544d53ULL);
  for (std::size_t i = keys.size(); i > 1; --i) std::swap(keys[i - 1], keys[rng.below(i)]);
  keys.resize(rule.count);
  return keys;
}

InjectedTrace inject(const std::vector<PacketRecord>& trace, const InjectionPlan& plan) {
  if (plan.kind == FaultKind::None) throw ConfigError("injection needs a fault kind");
  if (plan.kind == FaultKind::Latency) {
    if (plan.magnitude < 0 && plan.delay_max_ns < plan.delay_min_ns) {
      throw ConfigError("latency range is empty");
    }
  } else {
    check_rate(plan.magnitude, to_string(plan.kind).c_str());
  }

  const auto keys = select_victims(trace, plan.victims, plan.seed);
  Rng rng(plan.seed);
  std::unordered_map<FlowKey, std::size_t> victim_index;
  std::vector<Victim> victims(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    victim_index.emplace(keys[i], i);
    victims[i].key = keys[i];
    if (plan.kind == FaultKind::Latency) {
      victims[i].magnitude =
          plan.magnitude >= 0
              ? plan.magnitude
              : static_cast<double>(plan.delay_min_ns +
                                    rng.below(plan.delay_max_ns - plan.delay_min_ns + 1));
    } else {
      victims[i].magnitude = plan.magnitude;
    }
  }

  InjectedTrace out;
  out.trace.reserve(trace.size());
  std::vector<PacketRecord> appended;
  bool moved = false;
  for (const auto& p : trace) {
    if (plan.kind == FaultKind::Latency) {
      auto it = is_response(p.type) ? victim_index.find(p.key.reversed()) : victim_index.end();
      if (it != victim_index.end()) {
        PacketRecord q = p;
        q.ts += static_cast<std::uint64_t>(victims[it->second].magnitude);
        moved = moved || q.ts != p.ts;
        out.trace.push_back(q);
        continue;
      }
      out.trace.push_back(p);
      continue;
    }
    if (p.type != PacketType::Data || !victim_index.contains(p.key)) {
      out.trace.push_back(p);
      continue;
    }
    switch (plan.kind) {
      case FaultKind::Loss:
        if (!rng.bernoulli(plan.magnitude)) out.trace.push_back(p);
        break;
      case FaultKind::Reorder: {
        PacketRecord q = p;
        if (rng.bernoulli(plan.magnitude)) {
          q.ts += plan.reorder_shift_ns;
          moved = true;
        }
        out.trace.push_back(q);
        break;
      }
      case FaultKind::Duplicate:
        out.trace.push_back(p);
        if (rng.bernoulli(plan.magnitude)) {
          PacketRecord q = p;
          q.ts += plan.duplicate_shift_ns;
          appended.push_back(q);
        }
        break;
      default:
        break;
    }
  }
  if (!appended.empty()) {
    out.trace.insert(out.trace.end(), appended.begin(), appended.end());
    moved = true;
  }
  if (moved) {
    std::stable_sort(out.trace.begin(), out.trace.end(),
                     [](const PacketRecord& a, const PacketRecord& b) { return a.ts < b.ts; });
  }

  // Ground truth from the oracle over the victims' own packets.
  std::vector<PacketRecord> sub;
  for (const auto& p : out.trace) {
    if (victim_index.contains(p.key) || victim_index.contains(p.key.reversed())) sub.push_back(p);
  }
  switch (plan.kind) {
    case FaultKind::Latency: {
      const auto rtt = oracle_rtt(sub, TypeFilter::All);
      for (auto& v : victims) {
        auto it = rtt.strict.find(canonicalize(v.key).key());
        v.true_value = it == rtt.strict.end() ? 0 : it->second;
      }
      break;
    }
    case FaultKind::Loss: {
      const auto loss = oracle_loss(sub);
      for (auto& v : victims) {
        auto it = loss.find(v.key);
        v.true_value = it == loss.end() ? 0 : it->second;
      }
      break;
    }
    case FaultKind::Reorder: {
      const auto ooo = oracle_ooo(sub);
      for (auto& v : victims) {
        auto it = ooo.find(v.key);
        v.true_value = it == ooo.end() ? 0 : it->second;
      }
      break;
    }
    case FaultKind::Duplicate: {
      const auto rtx = oracle_rtx(sub);
      for (auto& v : victims) {
        auto it = rtx.find(v.key);
        v.true_value = it == rtx.end() ? 0 : static_cast<double>(it->second.retransmissions());
      }
      break;
    }
    default:
      break;
  }

  out.manifest.kind = plan.kind;
  out.manifest.seed = plan.seed;
  out.manifest.magnitude = plan.magnitude;
  out.manifest.victims = std::move(victims);
  out.manifest.trace_sha256 = trace_sha256(out.trace);
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw DataError("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string trace_sha256(const std::vector<PacketRecord>& trace) {
  const auto bytes = encode_binary_trace(trace);
  return sha256_hex(bytes);
}

Manifest plain_manifest(const std::vector<PacketRecord>& trace, std::uint64_t seed) {
  Manifest m;
  m.kind = FaultKind::None;
  m.seed = seed;
  m.trace_sha256 = trace_sha256(trace);
  return m;
}

std::string Manifest::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind);
  j["seed"] = seed;
  j["trace_sha256"] = trace_sha256;
  j["magnitude"] = magnitude;
  j["victims"] = nlohmann::ordered_json::array();
  for (const auto& v : victims) {
    j["victims"].push_back({{"key", key_hex(v.key)}, {"magnitude", v.magnitude},
                            {"true_value", v.true_value}});
  }
  return j.dump(2) + "\n";
}

Manifest Manifest::from_json(const std::string& text) {
  Manifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.kind = parse_fault_kind(j.at("kind").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.trace_sha256 = j.at("trace_sha256").get<std::string>();
    m.magnitude = j.at("magnitude").get<double>();
    for (const auto& v : j.at("victims")) {
      m.victims.push_back({parse_key_hex(v.at("key").get<std::string>()),
                           v.at("magnitude").get<double>(), v.at("true_value").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void Manifest::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json();
}

Manifest Manifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace leanmon
