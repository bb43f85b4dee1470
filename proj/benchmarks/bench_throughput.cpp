// Per-packet update throughput of the sketches and detectors.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "leanmon/count_sketch.hpp"
#include "leanmon/latency.hpp"
#include "leanmon/loss.hpp"
#include "leanmon/ooo.hpp"
#include "leanmon/retransmit.hpp"

namespace leanmon {
namespace {

FlowKey flow(std::uint32_t i) {
  FlowKey k;
  k.src = 0x0a000000 + i;
  k.dst = 0xc0a80001;
  k.src_port = static_cast<std::uint16_t>(1024 + (i & 0x7fff));
  k.dst_port = 443;
  k.proto = 6;
  return k;
}

// Skewed DATA stream over 10^4 flows with sequential ids per flow.
std::vector<PacketRecord> data_stream(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::uint64_t> next(10'000, 1);
  std::vector<PacketRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto f = static_cast<std::uint32_t>(u(rng) * u(rng) * 10'000);
    out[i] = {flow(f), PacketType::Data, next[f]++, 0, i * 1000, 1000};
  }
  return out;
}

const std::vector<PacketRecord>& stream() {
  static const auto s = data_stream(1 << 16);
  return s;
}

void BM_CountSketchUpdate(benchmark::State& st) {
  CountSketchTable t({static_cast<std::uint32_t>(st.range(0)), 2000}, 1);
  std::vector<KeyBytes> keys;
  for (std::uint32_t i = 0; i < 4096; ++i) keys.push_back(key_bytes(flow(i)));
  std::size_t i = 0;
  for (auto _ : st) t.update(keys[i++ & 4095], 1);
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_CountSketchUpdate)->Arg(1)->Arg(3)->Arg(5)->Arg(9);

void BM_CountSketchEstimate(benchmark::State& st) {
  CountSketchTable t({5, 2000}, 1);
  std::vector<KeyBytes> keys;
  for (std::uint32_t i = 0; i < 4096; ++i) {
    keys.push_back(key_bytes(flow(i)));
    t.update(keys.back(), i);
  }
  std::size_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(t.estimate(keys[i++ & 4095]));
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_CountSketchEstimate);

template <class Detector, class Config>
void run_stream(benchmark::State& st, const Config& cfg) {
  const auto& s = stream();
  Detector d(cfg);
  std::size_t i = 0;
  for (auto _ : st) {
    if (i == s.size()) {
      st.PauseTiming();
      d = Detector(cfg);
      i = 0;
      st.ResumeTiming();
    }
    benchmark::DoNotOptimize(d.observe(s[i++]));
  }
  st.SetItemsProcessed(st.iterations());
}

void BM_LossObserve(benchmark::State& st) {
  LossConfig c;
  c.shape = {5, 2000};
  run_stream<LossDetector>(st, c);
}
BENCHMARK(BM_LossObserve);

void BM_LatencyObserve(benchmark::State& st) {
  LatencyConfig c;
  c.shape = {5, 2000};
  c.filter = TypeFilter::All;
  run_stream<LatencyDetector>(st, c);
}
BENCHMARK(BM_LatencyObserve);

void BM_OooObserve(benchmark::State& st) {
  OooConfig c;
  c.slots = 5000;
  run_stream<OooTracker>(st, c);
}
BENCHMARK(BM_OooObserve);

void BM_RetransmitObserve(benchmark::State& st) {
  RetransmitConfig c;
  c.shape = {5, 2000};
  c.registers = static_cast<std::uint32_t>(st.range(0));
  run_stream<RetransmitTracker>(st, c);
}
BENCHMARK(BM_RetransmitObserve)->Arg(256)->Arg(1024);

void BM_HyperLogLogInsert(benchmark::State& st) {
  HyperLogLog h(static_cast<std::uint32_t>(st.range(0)), 3);
  std::uint64_t x = 0;
  for (auto _ : st) h.insert(++x);
  st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_HyperLogLogInsert)->Arg(256)->Arg(1024);

}  // namespace
}  // namespace leanmon

BENCHMARK_MAIN();
