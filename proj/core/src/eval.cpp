#include "leanmon/eval.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "leanmon/error.hpp"
#include "leanmon/framework.hpp"
#include "leanmon/loss.hpp"
#include "leanmon/oracle.hpp"
#include "leanmon/retransmit.hpp"

namespace leanmon {

namespace {

constexpr double kLatencyEpsilon = 1e-3;

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename Table>
void keep(Detection& d, const DetectorConfig& cfg, const Table& table, CandidateLog log,
          KeyEncoding encoding) {
  if (!cfg.keep_artifacts) return;
  std::ostringstream snap;
  table.write_snapshot(snap);
  d.snapshot = snap.str();
  d.log = std::move(log);
  d.encoding = encoding;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

Detection detect_latency(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  LatencyConfig lc;
  lc.shape = shape_for(cfg);
  lc.seed = cfg.seed;
  lc.family = cfg.family;
  lc.time_unit_ns = cfg.time_unit_ns;
  lc.filter = cfg.filter;
  LatencyDetector det(lc);
  ReportGate gate(cfg.gate, cfg.seed, /*audit=*/true);
  CandidateLog log;
  const double eps = cfg.epsilon > 0 ? cfg.epsilon : kLatencyEpsilon;

  const auto start = std::chrono::steady_clock::now();
  for (const auto& p : trace) {
    if (det.observe(p) != ObserveStatus::Applied || !is_response(p.type)) continue;
    const auto est = static_cast<double>(det.estimate(p.key));
    const double threshold = eps * static_cast<double>(det.accrued_rtt());
    maybe_report(gate, log, canonicalize(p.key).key(), p.ts, est, threshold);
  }
  const HeavyReport r = controller_topk(det.table(), log, cfg.k, cfg.seed, KeyEncoding::Canonical);

  Detection d;
  d.runtime_ms = elapsed_ms(start);
  d.returned = r.keys();
  d.counter_memory = lc.shape.counter_memory();
  d.extended_memory = d.counter_memory + gate.memory_bytes();
  d.candidates = log.size();
  d.gate_false_positives = gate.false_positives();
  keep(d, cfg, det.table(), std::move(log), KeyEncoding::Canonical);
  return d;
}

Detection detect_loss(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  LossConfig lc;
  lc.shape = shape_for(cfg);
  lc.seed = cfg.seed;
  lc.family = cfg.family;
  LossDetector det(lc);
  ReportGate gate(cfg.gate, cfg.seed, /*audit=*/true);
  CandidateLog log;
  const double eps = cfg.epsilon > 0 ? cfg.epsilon : lc.shape.epsilon();

  const auto start = std::chrono::steady_clock::now();
  for (const auto& p : trace) {
    if (!det.observe(p)) continue;
    const auto est = static_cast<double>(det.estimate(p.key));
    maybe_report(gate, log, p.key, p.ts, est, eps * det.l2());
  }
  const HeavyReport r = controller_topk(det.table(), log, cfg.k, cfg.seed, KeyEncoding::Flow);

  Detection d;
  d.runtime_ms = elapsed_ms(start);
  d.returned = r.keys();
  d.counter_memory = lc.shape.counter_memory();
  d.extended_memory = d.counter_memory + gate.memory_bytes();
  d.candidates = log.size();
  d.gate_false_positives = gate.false_positives();
  keep(d, cfg, det.table(), std::move(log), KeyEncoding::Flow);
  return d;
}

Detection detect_ooo(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  OooConfig oc;
  oc.slots = cfg.epsilon > 0 ? OooConfig::slots_for_epsilon(cfg.epsilon)
                             : OooConfig::slots_for_budget(cfg.memory_bytes);
  oc.window_ns = cfg.window_ns;
  oc.cache_capacity = cfg.cache_capacity;
  oc.weight = cfg.weight;
  oc.seed = cfg.seed;
  OooTracker det(oc);

  const auto start = std::chrono::steady_clock::now();
  for (const auto& p : trace) det.observe(p);
  const HeavyReport r = det.topk(cfg.k);

  Detection d;
  d.runtime_ms = elapsed_ms(start);
  d.returned = r.keys();
  d.counter_memory = oc.slots * 8;
  d.extended_memory = d.counter_memory + det.cache().memory_bytes();
  d.candidates = det.table().occupied();
  return d;
}

Detection detect_rtx(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  RetransmitConfig rc;
  rc.shape = shape_for(cfg);
  rc.seed = cfg.seed;
  rc.family = cfg.family;
  rc.epsilon = cfg.rtx_epsilon;
  rc.registers = cfg.registers;
  RetransmitTracker det(rc);

  const auto start = std::chrono::steady_clock::now();
  for (const auto& p : trace) det.observe(p);
  const HeavyReport r = det.report(cfg.k_threshold, cfg.k);

  Detection d;
  d.runtime_ms = elapsed_ms(start);
  d.returned = r.keys();
  d.counter_memory = rc.shape.counter_memory();
  d.extended_memory = det.memory_bytes();
  d.candidates = det.tracked_count();
  return d;
}

constexpr unsigned kFrameworkIdBits = 32;

Detection detect_framework(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  const std::size_t buckets = cfg.memory_bytes / (2 * kFrameworkIdBits * 4);
  if (buckets == 0) throw ConfigError("memory budget too small for the framework sketch");
  FrameworkSketch<PacketCountEstimator> sketch(buckets, kFrameworkIdBits, cfg.seed);

  const auto start = std::chrono::steady_clock::now();
  for (const auto& p : trace) {
    if (p.type == PacketType::Data) sketch.update(flow_id32(p.key), p);
  }
  auto recovered = sketch.recover();
  Detection d;
  d.runtime_ms = elapsed_ms(start);

  // Ids name flows only up to 32-bit collisions; resolve them against the
  // trace's keys (evaluation-side lookup).
  std::unordered_map<std::uint32_t, FlowKey> by_id;
  for (const auto& p : trace) {
    if (p.type == PacketType::Data) by_id.try_emplace(flow_id32(p.key), p.key);
  }
  std::vector<HeavyEntry> entries;
  for (const auto& r : recovered) {
    auto it = by_id.find(static_cast<std::uint32_t>(r.id));
    if (it != by_id.end()) entries.push_back({it->second, r.value});
  }
  rank_and_truncate(entries, cfg.k);
  for (const auto& e : entries) d.returned.push_back(e.key);
  d.counter_memory = buckets * 2 * kFrameworkIdBits * 4;
  d.extended_memory = d.counter_memory;
  d.candidates = recovered.size();
  return d;
}

}  // namespace

std::string to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::Latency: return "latency";
    case DetectorKind::Loss: return "loss";
    case DetectorKind::Ooo: return "ooo";
    case DetectorKind::Retransmit: return "retransmit";
    case DetectorKind::FrameworkCount: return "framework-count";
  }
  return "?";
}

DetectorKind parse_detector(const std::string& text) {
  for (auto k : {DetectorKind::Latency, DetectorKind::Loss, DetectorKind::Ooo,
                 DetectorKind::Retransmit, DetectorKind::FrameworkCount}) {
    if (text == to_string(k)) return k;
  }
  if (text == "reorder" || text == "out-of-order") return DetectorKind::Ooo;
  if (text == "duplicate" || text == "rtx") return DetectorKind::Retransmit;
  throw ConfigError("unknown detector '" + text +
                    "' (latency, loss, ooo, retransmit, framework-count)");
}

FaultKind fault_for(DetectorKind k) noexcept {
  switch (k) {
    case DetectorKind::Latency: return FaultKind::Latency;
    case DetectorKind::Loss: return FaultKind::Loss;
    case DetectorKind::Ooo: return FaultKind::Reorder;
    case DetectorKind::Retransmit: return FaultKind::Duplicate;
    case DetectorKind::FrameworkCount: return FaultKind::None;
  }
  return FaultKind::None;
}

SketchShape shape_for(const DetectorConfig& cfg) {
  return SketchShape::from_budget(cfg.memory_bytes, cfg.rows);
}

bool same_outcome(const EvalResult& a, const EvalResult& b) noexcept {
  return a.detector == b.detector && a.memory_bytes == b.memory_bytes &&
         a.magnitude == b.magnitude && a.seed == b.seed && a.recall == b.recall &&
         a.precision == b.precision && a.extended_memory_bytes == b.extended_memory_bytes &&
         a.returned == b.returned && a.relevant == b.relevant && a.candidates == b.candidates &&
         a.gate_false_positives == b.gate_false_positives;
}

Scores score(const std::vector<FlowKey>& returned, const std::vector<FlowKey>& relevant) {
  const std::unordered_set<FlowKey> rel(relevant.begin(), relevant.end());
  std::unordered_set<FlowKey> seen;
  std::size_t hits = 0;
  for (const auto& k : returned) {
    if (seen.insert(k).second && rel.contains(k)) ++hits;
  }
  Scores s;
  s.recall = rel.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(rel.size());
  s.precision = seen.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(seen.size());
  return s;
}

std::vector<FlowKey> relevant_flows(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  switch (cfg.kind) {
    case DetectorKind::Latency:
      return relevant_topk(oracle_rtt(trace, cfg.filter, cfg.time_unit_ns).mirror, cfg.k);
    case DetectorKind::Loss:
      return relevant_topk(oracle_loss(trace), cfg.k);
    case DetectorKind::Ooo:
      return relevant_topk(oracle_ooo(trace, cfg.window_ns, cfg.weight), cfg.k);
    case DetectorKind::Retransmit: {
      FlowValues v;
      for (const auto& [k, s] : oracle_rtx(trace)) v[k] = static_cast<double>(s.retransmissions());
      return relevant_topk(v, cfg.k);
    }
    case DetectorKind::FrameworkCount:
      return relevant_topk(oracle_count(trace), cfg.k);
  }
  return {};
}

Detection detect(const std::vector<PacketRecord>& trace, const DetectorConfig& cfg) {
  switch (cfg.kind) {
    case DetectorKind::Latency: return detect_latency(trace, cfg);
    case DetectorKind::Loss: return detect_loss(trace, cfg);
    case DetectorKind::Ooo: return detect_ooo(trace, cfg);
    case DetectorKind::Retransmit: return detect_rtx(trace, cfg);
    case DetectorKind::FrameworkCount: return detect_framework(trace, cfg);
  }
  throw ConfigError("unknown detector");
}

EvalResult run_case(const ExperimentCase& c, const DetectorConfig& cfg) {
  const Detection d = detect(c.trace, cfg);
  const Scores s = score(d.returned, c.relevant);
  EvalResult r;
  r.detector = to_string(cfg.kind);
  r.memory_bytes = d.counter_memory;
  r.magnitude = c.manifest.magnitude;
  r.seed = cfg.seed;
  r.recall = s.recall;
  r.precision = s.precision;
  r.runtime_ms = d.runtime_ms;
  r.packets_per_sec = d.runtime_ms > 0 ? static_cast<double>(c.trace.size()) / (d.runtime_ms / 1000) : 0;
  r.extended_memory_bytes = d.extended_memory;
  r.returned = d.returned.size();
  r.relevant = c.relevant.size();
  r.candidates = d.candidates;
  r.gate_false_positives = d.gate_false_positives;
  return r;
}

EvalResult run_experiment(const std::vector<PacketRecord>& trace, const Manifest& manifest,
                          const DetectorConfig& cfg) {
  const std::string sha = trace_sha256(trace);
  if (sha != manifest.trace_sha256) {
    throw DataError("manifest does not match trace: expected sha256 " + manifest.trace_sha256 +
                    ", trace has " + sha);
  }
  ExperimentCase c{trace, manifest, relevant_flows(trace, cfg)};
  return run_case(c, cfg);
}

double standard_magnitude(DetectorKind k) noexcept {
  switch (k) {
    case DetectorKind::Latency: return 50'000'000;
    case DetectorKind::Loss: return 0.04;
    case DetectorKind::Ooo: return 0.04;
    case DetectorKind::Retransmit: return 0.10;
    case DetectorKind::FrameworkCount: return 0;
  }
  return 0;
}

std::size_t standard_pool(DetectorKind k) noexcept {
  return k == DetectorKind::Retransmit ? 100 : 1000;
}

ExperimentCase make_case(DetectorKind kind, std::uint64_t seed, const WorkloadSpec& spec,
                         const DetectorConfig& cfg) {
  SynthConfig sc = spec.synth;
  sc.seed = seed;
  sc.bidirectional = kind == DetectorKind::Latency;
  auto base = synthesize(sc);
  DetectorConfig rc = cfg;
  rc.kind = kind;
  if (fault_for(kind) == FaultKind::None) {
    ExperimentCase c;
    c.relevant = relevant_flows(base, rc);
    c.manifest = plain_manifest(base, seed);
    c.trace = std::move(base);
    return c;
  }

  InjectionPlan plan;
  plan.kind = fault_for(kind);
  plan.victims.count = spec.victims;
  plan.victims.pool = spec.pool.value_or(standard_pool(kind));
  plan.magnitude = spec.magnitude >= 0 ? spec.magnitude : standard_magnitude(kind);
  plan.seed = seed;
  InjectedTrace injected = inject(base, plan);

  ExperimentCase c;
  c.relevant = relevant_flows(injected.trace, rc);
  c.trace = std::move(injected.trace);
  c.manifest = std::move(injected.manifest);
  return c;
}

std::vector<EvalResult> sweep_memory(const std::vector<ExperimentCase>& cases,
                                     const DetectorConfig& base,
                                     const std::vector<std::size_t>& budgets) {
  std::vector<EvalResult> rows;
  for (std::size_t budget : budgets) {
    for (const auto& c : cases) {
      DetectorConfig cfg = base;
      cfg.memory_bytes = budget;
      cfg.seed = c.manifest.seed;
      rows.push_back(run_case(c, cfg));
    }
  }
  return rows;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2;
}

std::vector<double> median_by_budget(const std::vector<EvalResult>& rows,
                                     const std::vector<std::size_t>& budgets, bool precision) {
  std::vector<double> out;
  for (std::size_t b : budgets) {
    std::vector<double> v;
    for (const auto& r : rows) {
      if (r.memory_bytes == b) v.push_back(precision ? r.precision : r.recall);
    }
    out.push_back(median(v));
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<EvalResult>& rows) {
  out << "detector,memory_bytes,magnitude,seed,recall,precision,runtime_ms,packets_per_sec\n";
  for (const auto& r : rows) {
    out << r.detector << ',' << r.memory_bytes << ',' << fmt_double(r.magnitude) << ',' << r.seed
        << ',' << fmt_double(r.recall) << ',' << fmt_double(r.precision) << ','
        << fmt_double(r.runtime_ms) << ',' << fmt_double(r.packets_per_sec) << '\n';
  }
}

std::string results_to_json(const std::vector<EvalResult>& rows) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j.push_back({{"detector", r.detector},
                 {"memory_bytes", r.memory_bytes},
                 {"magnitude", r.magnitude},
                 {"seed", r.seed},
                 {"recall", r.recall},
                 {"precision", r.precision},
                 {"runtime_ms", r.runtime_ms},
                 {"packets_per_sec", r.packets_per_sec},
                 {"extended_memory_bytes", r.extended_memory_bytes},
                 {"returned", r.returned},
                 {"relevant", r.relevant},
                 {"candidates", r.candidates},
                 {"gate_false_positives", r.gate_false_positives}});
  }
  return j.dump(2) + "\n";
}

std::vector<EvalResult> results_from_json(const std::string& text) {
  std::vector<EvalResult> rows;
  try {
    for (const auto& o : nlohmann::json::parse(text)) {
      EvalResult r;
      r.detector = o.at("detector").get<std::string>();
      r.memory_bytes = o.at("memory_bytes").get<std::size_t>();
      r.magnitude = o.at("magnitude").get<double>();
      r.seed = o.at("seed").get<std::uint64_t>();
      r.recall = o.at("recall").get<double>();
      r.precision = o.at("precision").get<double>();
      r.runtime_ms = o.at("runtime_ms").get<double>();
      r.packets_per_sec = o.at("packets_per_sec").get<double>();
      r.extended_memory_bytes = o.value("extended_memory_bytes", std::size_t{0});
      r.returned = o.value("returned", std::size_t{0});
      r.relevant = o.value("relevant", std::size_t{0});
      r.candidates = o.value("candidates", std::size_t{0});
      r.gate_false_positives = o.value("gate_false_positives", std::uint64_t{0});
      rows.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed results JSON: ") + e.what());
  }
  return rows;
}

}  // namespace leanmon
