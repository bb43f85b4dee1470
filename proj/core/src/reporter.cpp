#include "leanmon/reporter.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "leanmon/error.hpp"
#include "leanmon/hashing.hpp"

namespace leanmon {

BloomGate::BloomGate(std::size_t bits, std::uint32_t hashes, std::uint64_t seed) : bits_(bits) {
  if (bits == 0 || hashes == 0) throw ConfigError("bloom gate needs bits and hash functions");
  for (std::uint32_t i = 0; i < hashes; ++i) {
    hashes_.push_back(make_hash_pair(seed, HashStream::Bloom, i));
  }
}

bool BloomGate::contains(const FlowKey& key) const {
  const std::uint64_t d = fold64(key_bytes(key));
  for (const auto& h : hashes_) {
    if (!bits_[bucket(h, d, bits_.size())]) return false;
  }
  return true;
}

void BloomGate::insert(const FlowKey& key) {
  const std::uint64_t d = fold64(key_bytes(key));
  for (const auto& h : hashes_) bits_[bucket(h, d, bits_.size())] = true;
  ++inserted_;
}

double BloomGate::expected_fp_rate() const noexcept {
  const double h = static_cast<double>(hashes_.size());
  const double fill = 1.0 - std::exp(-h * static_cast<double>(inserted_) / bits_.size());
  return std::pow(fill, h);
}

ReportGate::ReportGate(GateMode mode, std::uint64_t seed, bool audit, std::size_t bloom_bits,
                       std::uint32_t bloom_hashes)
    : mode_(mode), audit_(audit), bloom_(bloom_bits, bloom_hashes, seed) {}

bool ReportGate::admit(const FlowKey& key) {
  if (mode_ == GateMode::Exact) return exact_.insert(key).second;
  if (bloom_.contains(key)) {
    // The shadow mirrors an exact gate, so a key suppressed twice counts once.
    if (audit_ && exact_.insert(key).second) {
      ++false_positives_;
      suppressed_.push_back(key);
    }
    return false;
  }
  bloom_.insert(key);
  if (audit_) exact_.insert(key);
  return true;
}

std::size_t ReportGate::memory_bytes() const noexcept {
  if (mode_ == GateMode::Exact) return exact_.size() * FlowKey::kBytes;
  return bloom_.bits() / 8;
}

std::vector<FlowKey> CandidateLog::keys() const {
  std::vector<FlowKey> out;
  out.reserve(entries_.size());
  for (const auto& c : entries_) out.push_back(c.key);
  return out;
}

void CandidateLog::write_csv(std::ostream& out) const {
  out << "key,ts,value\n";
  char buf[64];
  for (const auto& c : entries_) {
    auto res = std::to_chars(buf, buf + sizeof buf, c.value);
    out << key_hex(c.key) << ',' << c.ts << ',' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

CandidateLog CandidateLog::read_csv(std::istream& in) {
  CandidateLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("key", 0) == 0) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw DataError("candidate log line " + std::to_string(lineno) + ": expected 3 fields");
    }
    Candidate c;
    c.key = parse_key_hex(std::string_view(line).substr(0, c1));
    const char* b = line.data();
    auto r1 = std::from_chars(b + c1 + 1, b + c2, c.ts);
    auto r2 = std::from_chars(b + c2 + 1, b + line.size(), c.value);
    if (r1.ec != std::errc{} || r1.ptr != b + c2 || r2.ec != std::errc{} ||
        r2.ptr != b + line.size()) {
      throw DataError("candidate log line " + std::to_string(lineno) + ": bad number");
    }
    log.append(c);
  }
  return log;
}

bool maybe_report(ReportGate& gate, CandidateLog& log, const FlowKey& key, std::uint64_t ts,
                  double estimate, double threshold) {
  if (!(threshold >= 0)) throw ConfigError("report threshold must be non-negative");
  if (!(estimate >= threshold)) return false;
  if (!gate.admit(key)) return false;
  log.append({key, ts, estimate});
  return true;
}

HeavyReport controller_topk(const CountSketchTable& snapshot, const CandidateLog& log,
                            std::size_t k, std::uint64_t expected_seed, KeyEncoding encoding) {
  if (snapshot.run_seed() != expected_seed) {
    throw ConfigError("snapshot seed " + std::to_string(snapshot.run_seed()) +
                      " does not match run seed " + std::to_string(expected_seed));
  }
  HeavyReport r;
  std::unordered_set<FlowKey> seen;
  for (const auto& c : log.entries()) {
    FlowKey key = c.key;
    double v = 0;
    if (encoding == KeyEncoding::Canonical) {
      const CanonicalPair pair = canonicalize(key);
      key = pair.key();
      v = static_cast<double>(snapshot.estimate_abs(key_bytes(pair)));
    } else {
      v = static_cast<double>(snapshot.estimate_abs(key_bytes(key)));
    }
    if (!seen.insert(key).second) continue;
    r.entries.push_back({key, v});
    r.total += v;
  }
  rank_and_truncate(r.entries, k);
  return r;
}

}  // namespace leanmon
