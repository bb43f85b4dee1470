#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "leanmon/error.hpp"
#include "leanmon/eval.hpp"
#include "leanmon/reporter.hpp"

namespace leanmon {
namespace {

using test::bytes_of;
using test::nth_key;

TEST(Reporter, BelowThresholdLeavesLogUnchanged) {
  ReportGate gate;
  CandidateLog log;
  EXPECT_FALSE(maybe_report(gate, log, nth_key(1), 5, 9.0, 10.0));
  EXPECT_TRUE(log.empty());
}

TEST(Reporter, EachKeyReportedOnce) {
  for (GateMode mode : {GateMode::Bloom, GateMode::Exact}) {
    ReportGate gate(mode);
    CandidateLog log;
    EXPECT_TRUE(maybe_report(gate, log, nth_key(1), 5, 11.0, 10.0));
    EXPECT_FALSE(maybe_report(gate, log, nth_key(1), 6, 12.0, 10.0));
    ASSERT_EQ(log.size(), 1u);
    EXPECT_EQ(log.entries()[0], (Candidate{nth_key(1), 5, 11.0}));
  }
}

TEST(Reporter, NegativeThresholdIsConfigError) {
  ReportGate gate;
  CandidateLog log;
  EXPECT_THROW(maybe_report(gate, log, nth_key(1), 0, 1, -1), ConfigError);
}

TEST(BloomGate, NoFalseNegativesAndLowFalsePositives) {
  BloomGate bloom(BloomGate::kDefaultBits, BloomGate::kDefaultHashes, 17);
  for (std::uint32_t i = 0; i < 4000; ++i) bloom.insert(nth_key(i));
  for (std::uint32_t i = 0; i < 4000; ++i) ASSERT_TRUE(bloom.contains(nth_key(i)));
  int fp = 0;
  for (std::uint32_t i = 0; i < 100'000; ++i) fp += bloom.contains(nth_key(1'000'000 + i));
  EXPECT_LE(fp / 100'000.0, 0.01);
  EXPECT_NEAR(bloom.expected_fp_rate(), 0.0024, 0.0005);
  EXPECT_THROW(BloomGate(0, 4), ConfigError);
}

// Feeds the same trigger sequence to both gate modes.
std::pair<CandidateLog, CandidateLog> twin_logs(const std::vector<FlowKey>& stream,
                                                ReportGate& bloom) {
  ReportGate exact(GateMode::Exact);
  CandidateLog a, b;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    maybe_report(bloom, a, stream[i], i, 1.0, 0.5);
    maybe_report(exact, b, stream[i], i, 1.0, 0.5);
  }
  return {a, b};
}

TEST(Reporter, BloomAndExactDifferOnlyBySuppressions) {
  std::mt19937_64 rng(5);
  std::vector<FlowKey> stream;
  for (int i = 0; i < 20'000; ++i) stream.push_back(nth_key(static_cast<std::uint32_t>(rng() % 6000)));
  ReportGate bloom(GateMode::Bloom, 5, true, 8192, 4);  // small filter forces suppressions
  const auto [bl, ex] = twin_logs(stream, bloom);
  ASSERT_GT(bloom.false_positives(), 0u);
  std::set<FlowKey> bk, ek;
  for (const auto& k : bl.keys()) bk.insert(k);
  for (const auto& k : ex.keys()) ek.insert(k);
  std::vector<FlowKey> missing;
  std::set_difference(ek.begin(), ek.end(), bk.begin(), bk.end(), std::back_inserter(missing));
  std::set<FlowKey> suppressed(bloom.suppressed().begin(), bloom.suppressed().end());
  EXPECT_EQ(std::set<FlowKey>(missing.begin(), missing.end()), suppressed);
  EXPECT_TRUE(std::includes(ek.begin(), ek.end(), bk.begin(), bk.end()));
  EXPECT_EQ(bloom.false_positives(), suppressed.size());
  // Surviving entries keep their exact-mode order.
  std::vector<FlowKey> filtered;
  for (const auto& k : ex.keys()) {
    if (!suppressed.contains(k)) filtered.push_back(k);
  }
  EXPECT_EQ(filtered, bl.keys());
}

TEST(Reporter, ControllerTopkEmptyLog) {
  const CountSketchTable t({5, 100}, 3);
  EXPECT_TRUE(controller_topk(t, CandidateLog{}, 10, 3).entries.empty());
}

TEST(Reporter, ControllerTopkMatchesInProcessRanking) {
  CountSketchTable t({5, 500}, 4);
  std::mt19937_64 rng(4);
  CandidateLog log;
  std::vector<std::vector<std::uint8_t>> cands;
  for (std::uint32_t i = 0; i < 300; ++i) {
    const std::int64_t v = i < 20 ? 1000 + i : static_cast<std::int64_t>(rng() % 50);
    t.update(bytes_of(nth_key(i)), v);
    log.append({nth_key(i), i, static_cast<double>(v)});
    cands.push_back(bytes_of(nth_key(i)));
  }
  std::stringstream snap;
  t.write_snapshot(snap);
  const CountSketchTable restored = CountSketchTable::read_snapshot(snap);
  const HeavyReport r = controller_topk(restored, log, 20, 4);
  const auto heavy = t.heavy_keys(cands, 0);
  ASSERT_EQ(r.entries.size(), 20u);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(bytes_of(r.entries[i].key), heavy[i].bytes);
    EXPECT_EQ(r.entries[i].value, static_cast<double>(heavy[i].estimate));
  }
}

TEST(Reporter, ControllerRejectsSeedMismatch) {
  const CountSketchTable t({5, 100}, 3);
  EXPECT_THROW((void)controller_topk(t, CandidateLog{}, 10, 4), ConfigError);
}

TEST(Reporter, ControllerCanonicalEncodingMergesDirections) {
  CountSketchTable t({5, 100}, 6);
  const FlowKey k = nth_key(3);
  t.update(key_bytes(canonicalize(k)), 42);
  CandidateLog log;
  log.append({k, 1, 42});
  log.append({k.reversed(), 2, 42});
  const HeavyReport r = controller_topk(t, log, 10, 6, KeyEncoding::Canonical);
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].key, canonicalize(k).key());
  EXPECT_EQ(r.entries[0].value, 42);
}

// Searches gate seeds until a planted key collides with earlier admissions.
TEST(Reporter, SuppressedPlantedKeyIsRecallMiss) {
  const FlowKey planted = nth_key(999);
  std::vector<FlowKey> earlier;
  for (std::uint32_t i = 0; i < 40; ++i) earlier.push_back(nth_key(i));
  std::uint64_t seed = 0;
  for (;; ++seed) {
    // The earlier keys must all pass; only the planted key collides.
    BloomGate probe(128, 2, seed);
    bool clean = true;
    for (const auto& k : earlier) {
      clean = clean && !probe.contains(k);
      probe.insert(k);
    }
    if (clean && probe.contains(planted)) break;
    ASSERT_LT(seed, 1'000'000u);
  }
  CountSketchTable t({5, 200}, 8);
  ReportGate gate(GateMode::Bloom, seed, true, 128, 2);
  CandidateLog log;
  for (const auto& k : earlier) {
    t.update(bytes_of(k), 10);
    maybe_report(gate, log, k, 0, 10, 5);
  }
  t.update(bytes_of(planted), 10'000);
  EXPECT_FALSE(maybe_report(gate, log, planted, 1, 10'000, 5));
  EXPECT_EQ(gate.suppressed(), std::vector<FlowKey>{planted});
  const HeavyReport r = controller_topk(t, log, 5, 8);
  for (const auto& e : r.entries) EXPECT_NE(e.key, planted);
  EXPECT_LT(score(r.keys(), {planted}).recall, 1.0);
}

TEST(CandidateLog, CsvRoundTrip) {
  CandidateLog log;
  log.append({nth_key(1), 10, 3.25});
  log.append({nth_key(2), 20, 1e9});
  std::stringstream ss;
  log.write_csv(ss);
  EXPECT_EQ(ss.str().substr(0, 13), "key,ts,value\n");
  EXPECT_EQ(CandidateLog::read_csv(ss), log);
}

TEST(CandidateLog, MalformedCsvIsDataError) {
  std::stringstream a("key,ts,value\nnothex,1,2\n");
  EXPECT_THROW((void)CandidateLog::read_csv(a), DataError);
  std::stringstream b("key,ts,value\n" + key_hex(nth_key(1)) + ",x,2\n");
  EXPECT_THROW((void)CandidateLog::read_csv(b), DataError);
  std::stringstream c("key,ts,value\n" + key_hex(nth_key(1)) + "\n");
  EXPECT_THROW((void)CandidateLog::read_csv(c), DataError);
}

TEST(ReportGate, MemoryAccounting) {
  EXPECT_EQ(ReportGate().memory_bytes(), BloomGate::kDefaultBits / 8);
  ReportGate exact(GateMode::Exact);
  exact.admit(nth_key(1));
  EXPECT_EQ(exact.memory_bytes(), FlowKey::kBytes);
}

}  // namespace
}  // namespace leanmon
