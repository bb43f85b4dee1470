#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "leanmon/count_sketch.hpp"
#include "leanmon/error.hpp"
#include "leanmon/eval.hpp"
#include "leanmon/reporter.hpp"
#include "leanmon/trace_io.hpp"
#include "leanmon/trace_toolkit.hpp"

namespace fs = std::filesystem;
using namespace leanmon;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Globals {
  std::uint64_t seed = 1;
  std::string trace;
  std::string manifest;
  std::string out_dir = ".";
  std::string format = "csv";
};

struct SynthArgs {
  SynthConfig cfg;
  std::uint64_t epoch_ms = 60'000;
  std::string out = "trace.lmt";
  std::string trace_format = "binary";
};

struct InjectArgs {
  std::string kind = "latency";
  std::size_t victims = 100;
  std::size_t pool = 1000;
  std::vector<std::string> keys;
  double delay_ms = 50;
  bool random_delay = false;
  double rate = 0.04;
  std::string out = "injected.lmt";
};

struct RunArgs {
  std::string detector = "latency";
  double memory_kb = 40;
  std::uint32_t rows = 5;
  std::size_t k = 100;
  double epsilon = 0;
  double k_threshold = 1.05;
  double rtx_epsilon = 1e-3;
  std::uint32_t registers = 1024;
  std::string filter = "handshake";
  double delta = 0;
  std::uint64_t time_unit_ns = 1000;
  double window_ms = 3;
  std::size_t cache_capacity = kDefaultCacheCapacity;
  std::string weight = "bytes";
  std::string gate = "bloom";
  std::string family = "multiply-shift";
  bool save_artifacts = false;
};

struct SweepArgs {
  std::size_t seeds = 10;
  std::vector<double> budgets_kb = {40, 80, 160, 320};
  std::size_t flows = 100'000;
  std::size_t packets = 1'000'000;
  double magnitude = -1;
};

struct ReportArgs {
  std::string results;
  std::string snapshot;
  std::string candidates;
  std::string encoding = "flow";
};

void require_format(const std::string& f) {
  if (f != "csv" && f != "json") throw ConfigError("--format must be csv or json");
}

void emit_results(const Globals& g, const std::vector<EvalResult>& rows, const std::string& stem) {
  require_format(g.format);
  fs::create_directories(g.out_dir);
  const fs::path csv = fs::path(g.out_dir) / (stem + ".csv");
  const fs::path json = fs::path(g.out_dir) / (stem + ".json");
  {
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw DataError("cannot write " + csv.string());
    write_csv(out, rows);
  }
  {
    std::ofstream out(json, std::ios::trunc);
    if (!out) throw DataError("cannot write " + json.string());
    out << results_to_json(rows);
  }
  if (g.format == "json") {
    std::cout << results_to_json(rows);
  } else {
    write_csv(std::cout, rows);
  }
}

DetectorConfig detector_config(const Globals& g, const RunArgs& a) {
  DetectorConfig cfg;
  cfg.kind = parse_detector(a.detector);
  if (!(a.memory_kb > 0)) throw ConfigError("--memory-kb must be positive");
  cfg.memory_bytes = static_cast<std::size_t>(a.memory_kb * 1000);
  cfg.rows = a.rows;
  if (a.delta != 0) {
    if (!(a.delta > 0 && a.delta < 1)) throw ConfigError("--delta must be in (0, 1)");
    cfg.rows = static_cast<std::uint32_t>(std::ceil(std::log2(1.0 / a.delta)));
    if (cfg.rows == 0) cfg.rows = 1;
  }
  cfg.seed = g.seed;
  cfg.k = a.k;
  cfg.epsilon = a.epsilon;
  cfg.k_threshold = a.k_threshold;
  cfg.rtx_epsilon = a.rtx_epsilon;
  // For the retransmit detector --epsilon names the elephant share.
  if (cfg.kind == DetectorKind::Retransmit && a.epsilon != 0) {
    cfg.rtx_epsilon = a.epsilon;
    cfg.epsilon = 0;
  }
  if (a.time_unit_ns == 0) throw ConfigError("--time-unit must be positive");
  cfg.time_unit_ns = a.time_unit_ns;
  cfg.cache_capacity = a.cache_capacity;
  if (a.weight == "bytes") {
    cfg.weight = WeightMode::Bytes;
  } else if (a.weight == "packets") {
    cfg.weight = WeightMode::Packets;
  } else {
    throw ConfigError("--weight must be bytes or packets");
  }
  cfg.registers = a.registers;
  cfg.filter = parse_type_filter(a.filter);
  cfg.window_ns = static_cast<std::uint64_t>(a.window_ms * 1e6);
  if (a.gate == "bloom") {
    cfg.gate = GateMode::Bloom;
  } else if (a.gate == "exact") {
    cfg.gate = GateMode::Exact;
  } else {
    throw ConfigError("--gate must be bloom or exact");
  }
  if (a.family == "multiply-shift") {
    cfg.family = HashFamily::MultiplyShift;
  } else if (a.family == "mersenne") {
    cfg.family = HashFamily::MersennePrime;
  } else {
    throw ConfigError("--hash must be multiply-shift or mersenne");
  }
  if (cfg.kind == DetectorKind::Retransmit && !(cfg.k_threshold > 1)) {
    throw ConfigError("--k-threshold must exceed 1");
  }
  return cfg;
}

std::vector<PacketRecord> need_trace(const Globals& g) {
  if (g.trace.empty()) throw ConfigError("--trace is required");
  return read_trace(g.trace);
}

int cmd_synth(const Globals& g, SynthArgs a) {
  a.cfg.seed = g.seed;
  a.cfg.epoch_ns = a.epoch_ms * 1'000'000;
  const auto trace = synthesize(a.cfg);
  const fs::path out = g.trace.empty() ? fs::path(g.out_dir) / a.out : fs::path(g.trace);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_trace(out, trace, parse_trace_format(a.trace_format));
  const Manifest m = plain_manifest(trace, g.seed);
  if (!g.manifest.empty()) m.save(g.manifest);
  std::cout << "wrote " << trace.size() << " records to " << out.string() << " sha256 "
            << m.trace_sha256 << "\n";
  return 0;
}

int cmd_inject(const Globals& g, const InjectArgs& a) {
  const auto trace = need_trace(g);
  InjectionPlan plan;
  plan.kind = parse_fault_kind(a.kind);
  plan.seed = g.seed;
  plan.victims.count = a.victims;
  plan.victims.pool = a.pool;
  for (const auto& k : a.keys) plan.victims.keys.push_back(parse_key_hex(k));
  if (plan.kind == FaultKind::Latency) {
    if (!a.random_delay && a.delay_ms < 0) throw ConfigError("--delay-ms must be non-negative");
    plan.magnitude = a.random_delay ? -1 : a.delay_ms * 1e6;
  } else {
    plan.magnitude = a.rate;
  }
  const InjectedTrace out = inject(trace, plan);
  const fs::path path = fs::path(g.out_dir) / a.out;
  fs::create_directories(g.out_dir);
  write_trace(path, out.trace);
  const fs::path mpath = g.manifest.empty() ? fs::path(g.out_dir) / "manifest.json" : fs::path(g.manifest);
  out.manifest.save(mpath);
  std::cout << "injected " << to_string(plan.kind) << " into " << out.manifest.victims.size()
            << " flows; trace " << path.string() << ", manifest " << mpath.string() << "\n";
  return 0;
}

int cmd_run(const Globals& g, RunArgs a) {
  const auto trace = need_trace(g);
  DetectorConfig cfg = detector_config(g, a);
  // Detectors without a fault class score against the clean trace.
  const bool needs_manifest = fault_for(cfg.kind) != FaultKind::None;
  if (needs_manifest && g.manifest.empty()) throw ConfigError("--manifest is required");
  const Manifest manifest =
      g.manifest.empty() ? plain_manifest(trace, g.seed) : Manifest::load(g.manifest);
  cfg.keep_artifacts = a.save_artifacts;
  const EvalResult r = run_experiment(trace, manifest, cfg);
  emit_results(g, {r}, "run_" + to_string(cfg.kind));
  if (a.save_artifacts) {
    const Detection d = detect(trace, cfg);
    if (!d.snapshot.empty()) {
      std::ofstream snap(fs::path(g.out_dir) / "snapshot.lms", std::ios::binary | std::ios::trunc);
      snap << d.snapshot;
      std::ofstream log(fs::path(g.out_dir) / "candidates.csv", std::ios::trunc);
      d.log.write_csv(log);
    }
  }
  return 0;
}

int cmd_sweep(const Globals& g, const RunArgs& a, const SweepArgs& s) {
  const DetectorConfig base = detector_config(g, a);
  std::vector<std::size_t> budgets;
  for (double kb : s.budgets_kb) {
    if (!(kb > 0)) throw ConfigError("budgets must be positive");
    budgets.push_back(static_cast<std::size_t>(kb * 1000));
  }
  std::vector<EvalResult> rows;
  if (!g.trace.empty()) {
    // Fixed trace: independent runs differ only in the detector seed.
    const auto trace = need_trace(g);
    if (g.manifest.empty()) throw ConfigError("--manifest is required with --trace");
    const Manifest manifest = Manifest::load(g.manifest);
    if (trace_sha256(trace) != manifest.trace_sha256) {
      throw DataError("manifest does not match trace");
    }
    ExperimentCase c{trace, manifest, relevant_flows(trace, base)};
    for (std::size_t budget : budgets) {
      for (std::size_t i = 0; i < s.seeds; ++i) {
        DetectorConfig cfg = base;
        cfg.memory_bytes = budget;
        cfg.seed = g.seed + i;
        rows.push_back(run_case(c, cfg));
      }
    }
  } else {
    WorkloadSpec spec;
    spec.synth.flows = s.flows;
    spec.synth.packets = s.packets;
    spec.magnitude = s.magnitude;
    std::vector<ExperimentCase> cases;
    for (std::size_t i = 0; i < s.seeds; ++i) {
      cases.push_back(make_case(base.kind, g.seed + i, spec, base));
    }
    rows = sweep_memory(cases, base, budgets);
  }
  emit_results(g, rows, "sweep_" + to_string(base.kind));
  std::cerr << "median recall by budget:";
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    std::cerr << ' ' << budgets[i] / 1000 << "KB=" << median_by_budget(rows, budgets)[i];
  }
  std::cerr << "\n";
  return 0;
}

int cmd_report(const Globals& g, const ReportArgs& a, std::size_t k) {
  if (!a.results.empty()) {
    std::ifstream in(a.results);
    if (!in) throw DataError("cannot open " + a.results);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto rows = results_from_json(ss.str());
    emit_results(g, rows, fs::path(a.results).stem().string() + "_report");
    return 0;
  }
  if (a.snapshot.empty() || a.candidates.empty()) {
    throw ConfigError("report needs --results, or --snapshot with --candidates");
  }
  std::ifstream snap(a.snapshot, std::ios::binary);
  if (!snap) throw DataError("cannot open " + a.snapshot);
  const CountSketchTable table = CountSketchTable::read_snapshot(snap);
  std::ifstream cin_log(a.candidates);
  if (!cin_log) throw DataError("cannot open " + a.candidates);
  const CandidateLog log = CandidateLog::read_csv(cin_log);
  KeyEncoding enc = KeyEncoding::Flow;
  if (a.encoding == "canonical") {
    enc = KeyEncoding::Canonical;
  } else if (a.encoding != "flow") {
    throw ConfigError("--encoding must be flow or canonical");
  }
  const HeavyReport r = controller_topk(table, log, k, g.seed, enc);
  std::cout << "key,estimate\n";
  for (const auto& e : r.entries) std::cout << key_hex(e.key) << ',' << e.value << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leanmon: lean per-flow performance monitoring sketches"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Run seed");
  app.add_option("--trace", g.trace, "Trace file (binary or text)");
  app.add_option("--manifest", g.manifest, "Ground-truth manifest (JSON)");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--format", g.format, "Report format on stdout: csv or json");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize a Zipf trace");
  synth->fallthrough();
  synth->add_option("--flows", sa.cfg.flows, "Flow count");
  synth->add_option("--packets", sa.cfg.packets, "DATA packets");
  synth->add_option("--zipf", sa.cfg.zipf, "Zipf exponent");
  synth->add_flag("--bidirectional", sa.cfg.bidirectional, "Emit SYN/SYNACK and ACKs");
  synth->add_option("--epoch-ms", sa.epoch_ms, "Epoch length");
  synth->add_option("--out", sa.out, "Trace file name under --out-dir (ignored with --trace)");
  synth->add_option("--trace-format", sa.trace_format, "binary or text");

  InjectArgs ia;
  auto* inj = app.add_subcommand("inject", "Inject a fault class into a trace");
  inj->fallthrough();
  inj->add_option("--kind", ia.kind, "latency, loss, reorder or duplicate")->required();
  inj->add_option("--victims", ia.victims, "Victim count");
  inj->add_option("--pool", ia.pool, "Pick victims among this many largest flows");
  inj->add_option("--victim-key", ia.keys, "Explicit victim key (26 hex digits), repeatable");
  inj->add_option("--delay-ms", ia.delay_ms, "Latency: fixed delay per response");
  inj->add_flag("--random-delay", ia.random_delay, "Latency: per-flow delay in [30, 90] ms");
  inj->add_option("--rate", ia.rate, "Loss, reorder or duplicate probability");
  inj->add_option("--out", ia.out, "Output trace name under --out-dir");

  RunArgs ra;
  auto add_run_options = [&](CLI::App* cmd) {
    cmd->fallthrough();
    cmd->add_option("--detector", ra.detector,
                    "latency, loss, ooo, retransmit or framework-count")
        ->required();
    cmd->add_option("--memory-kb", ra.memory_kb, "Counter memory budget in KB");
    cmd->add_option("--rows", ra.rows, "Sketch rows");
    cmd->add_option("--delta", ra.delta, "Failure probability; sets rows = ceil(log2(1/delta))");
    cmd->add_option("--k", ra.k, "Flows to report");
    cmd->add_option("--epsilon", ra.epsilon,
                    "Report trigger fraction; out-of-order slot count 1/epsilon; "
                    "retransmit elephant share (0 = detector default)");
    cmd->add_option("--k-threshold", ra.k_threshold, "Retransmit: average retransmission threshold");
    cmd->add_option("--rtx-epsilon", ra.rtx_epsilon, "Retransmit: elephant share");
    cmd->add_option("--registers", ra.registers, "Retransmit: distinct-counter registers");
    cmd->add_option("--filter,--type-filter", ra.filter, "Latency: handshake, data-ack or all");
    cmd->add_option("--time-unit", ra.time_unit_ns, "Latency: timestamp unit in ns");
    cmd->add_option("--window-ms", ra.window_ms, "Out-of-order recency window");
    cmd->add_option("--cache-capacity", ra.cache_capacity,
                    "Out-of-order recency cache slots (0 = unbounded)");
    cmd->add_option("--weight", ra.weight, "Out-of-order weight: bytes or packets");
    cmd->add_option("--gate", ra.gate, "Report gate: bloom or exact");
    cmd->add_option("--hash", ra.family, "Hash family: multiply-shift or mersenne");
  };
  auto* run = app.add_subcommand("run", "Run one detector against a trace and manifest");
  add_run_options(run);
  run->add_flag("--save-artifacts", ra.save_artifacts,
                "Write snapshot.lms and candidates.csv to --out-dir");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Memory sweep over seeds");
  add_run_options(sweep);
  sweep->add_option("--seeds", sw.seeds, "Independent runs per budget");
  sweep->add_option("--budgets", sw.budgets_kb, "Budgets in KB")->delimiter(',');
  sweep->add_option("--flows", sw.flows, "Synthetic flows per run");
  sweep->add_option("--packets", sw.packets, "Synthetic DATA packets per run");
  sweep->add_option("--magnitude", sw.magnitude,
                    "Fault magnitude (ns delay or rate); default per detector");

  ReportArgs rp;
  std::size_t report_k = 100;
  auto* report = app.add_subcommand("report", "Tabulate results or re-estimate a snapshot");
  report->fallthrough();
  report->add_option("--results", rp.results, "Results JSON from run or sweep");
  report->add_option("--snapshot", rp.snapshot, "Sketch snapshot");
  report->add_option("--candidates", rp.candidates, "Candidate log CSV");
  report->add_option("--encoding", rp.encoding, "Candidate keys: flow or canonical");
  report->add_option("--k", report_k, "Flows to report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(g, sa);
    if (*inj) return cmd_inject(g, ia);
    if (*run) return cmd_run(g, ra);
    if (*sweep) return cmd_sweep(g, ra, sw);
    if (*report) return cmd_report(g, rp, report_k);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
