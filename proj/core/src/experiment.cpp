#include "ahtm/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ahtm/error.hpp"
#include "ahtm/snapshot.hpp"

namespace ahtm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  std::ostringstream o;
  o.precision(6);
  o << std::fixed << v;
  return o.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string mode_key(Mode m) {
  switch (m) {
    case Mode::HTM: return "htm";
    case Mode::AHTM: return "ahtm";
    case Mode::H_AHTM: return "h_ahtm";
  }
  return "unknown";
}

void write_files(const std::string& dir, const std::vector<std::pair<std::string, std::string>>& files,
                 std::vector<std::string>& written) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory: " + dir);
  for (const auto& [name, content] : files) {
    const fs::path path = fs::path(dir) / name;
    const fs::path tmp = fs::path(dir) / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw IoError("cannot write " + tmp.string());
      out << content;
      if (!out) throw IoError("cannot write " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot write " + path.string());
    written.push_back(path.string());
  }
}

const RunResult* find_run(const RunReport& r, Mode m) {
  for (const auto& run : r.runs) {
    if (run.mode == m) return &run;
  }
  return nullptr;
}

json run_json(const RunResult& r) {
  const auto& s = r.summary;
  json j{{"mode", std::string(to_string(r.mode))},
         {"steps", r.steps},
         {"precision", opt_json(s.precision)},
         {"recall", opt_json(s.recall)},
         {"f1", opt_json(s.f1)},
         {"roc_auc", opt_json(s.roc_auc)},
         {"match_rate", s.match_rate},
         {"rm_fraction", r.rm_fraction()},
         {"sm_invocations", r.sm_invocations},
         {"confusion", {{"tp", s.confusion.tp}, {"fp", s.confusion.fp}, {"tn", s.confusion.tn}, {"fn", s.confusion.fn}}},
         {"timing_measured",
          {{"repeat_count", r.timing.repeat_count},
           {"wall_ms", r.wall_ms},
           {"step_mean_ms", r.timing.mean_ms},
           {"step_p50_ms", r.timing.p50_ms},
           {"step_p95_ms", r.timing.p95_ms},
           {"total_ms", r.timing.total_ms}}}};
  if (r.ledger) j["cam_ledger"] = r.ledger->to_json();
  return j;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (modes.empty()) throw ValidationError("at least one mode is required");
  if (!synth && dataset.empty()) throw ValidationError("either --dataset or --synth is required");
  if (repeat == 0) throw ValidationError("--repeat must be positive");
  for (Mode m : modes) {
    PipelineConfig cfg = base;
    cfg.mode = m;
    cfg.validate();
  }
}

LoadedData load_data(const ExperimentSpec& spec) {
  LoadedData d;
  if (spec.synth) {
    SynthStream s = synth_stream(*spec.synth);
    d.name = std::string(to_string(spec.synth->kind));
    d.values = std::move(s.values);
    d.labels = std::move(s.labels);
    d.probation = s.probation;
    if (spec.synth->kind != SynthKind::InjectedAnomaly) d.labels.clear();
  } else {
    CsvSeries s = load_csv(spec.dataset, spec.column);
    d.name = fs::path(spec.dataset).stem().string();
    d.values = std::move(s.values);
  }
  return d;
}

std::string metrics_csv(const RunReport& r) {
  std::ostringstream o;
  o << "schema_version,dataset,mode,precision,recall,f1,roc_auc,match_rate,rm_fraction,steps\n";
  for (const auto& run : r.runs) {
    const auto& s = run.summary;
    o << kReportSchemaVersion << ',' << r.dataset << ',' << to_string(run.mode) << ',' << fmt(s.precision) << ','
      << fmt(s.recall) << ',' << fmt(s.f1) << ',' << fmt(s.roc_auc) << ',' << fmt(s.match_rate) << ','
      << fmt(run.rm_fraction()) << ',' << run.steps << '\n';
  }
  return o.str();
}

std::string timing_csv(const RunReport& r) {
  std::ostringstream o;
  o << "schema_version,dataset,repeat,HTM (ms),AHTM (ms),H-AHTM (ms),H-AHTM simulated CAM (ms)\n";
  o << kReportSchemaVersion << ',' << r.dataset << ',' << r.repeat;
  for (Mode m : {Mode::HTM, Mode::AHTM, Mode::H_AHTM}) {
    const RunResult* run = find_run(r, m);
    o << ',' << (run ? fmt(run->wall_ms) : std::string{});
  }
  const RunResult* cam = find_run(r, Mode::H_AHTM);
  o << ',' << (cam && cam->ledger ? fmt(cam->ledger->latency_ns() / 1e6) : std::string{}) << '\n';
  return o.str();
}

RunReport cmd_run(const ExperimentSpec& spec) {
  spec.validate();
  const LoadedData data = load_data(spec);
  RunReport report;
  report.dataset = data.name;
  report.repeat = spec.repeat;
  for (Mode m : spec.modes) {
    PipelineConfig cfg = spec.base;
    cfg.mode = m;
    RunOptions opt;
    opt.repeat = spec.repeat;
    opt.keep_traces = spec.trace;
    opt.probation = data.probation;
    opt.keep_snapshot = spec.snapshot;
    report.runs.push_back(run_stream(cfg, data.values, data.labels, opt));
  }

  std::vector<std::pair<std::string, std::string>> files;
  files.emplace_back("metrics.csv", metrics_csv(report));
  files.emplace_back("timing.csv", timing_csv(report));
  json summary{{"schema_version", kReportSchemaVersion},
               {"dataset", report.dataset},
               {"steps", data.values.size()},
               {"probation", data.probation},
               {"labelled", !data.labels.empty()},
               {"measured_fields", {"timing_measured", "timing.csv mode columns"}},
               {"runs", json::array()}};
  for (const auto& run : report.runs) summary["runs"].push_back(run_json(run));
  files.emplace_back("report.json", summary.dump(2) + "\n");
  if (const RunResult* cam = find_run(report, Mode::H_AHTM); cam && cam->ledger) {
    const auto& g = spec.base.cam;
    json ledger{{"schema_version", kReportSchemaVersion},
                {"dataset", report.dataset},
                {"geometry", {{"n", g.n}, {"m", g.m}, {"stages", g.stages}, {"p", g.p}, {"q", g.q}}},
                {"ledger", cam->ledger->to_json()}};
    files.emplace_back("cost_ledger.json", ledger.dump(2) + "\n");
  }
  if (spec.trace) {
    for (const auto& run : report.runs) {
      std::ostringstream t;
      write_trace_jsonl(t, run.traces);
      files.emplace_back("traces_" + mode_key(run.mode) + ".jsonl", t.str());
    }
  }
  if (spec.snapshot) {
    for (const auto& run : report.runs) files.emplace_back("snapshot_" + mode_key(run.mode) + ".json", *run.snapshot);
  }
  write_files(spec.out_dir, files, report.files);
  return report;
}

SweepReport sweep_cu_window(PipelineConfig base, const LoadedData& data, const std::vector<std::uint32_t>& windows,
                            std::uint32_t repeat) {
  if (windows.size() < 2) throw ValidationError("window sweep needs at least two window values");
  if (std::any_of(windows.begin(), windows.end(), [](std::uint32_t w) { return w == 0; })) {
    throw ValidationError("window values must be positive");
  }
  RunOptions opt;
  opt.repeat = repeat;
  opt.keep_traces = false;
  opt.probation = data.probation;

  SweepReport rep;
  rep.dataset = data.name;
  PipelineConfig sm_only = base;
  sm_only.mode = Mode::HTM;
  const RunResult baseline = run_stream(sm_only, data.values, data.labels, opt);
  rep.baseline_match_rate = baseline.summary.match_rate;
  rep.baseline_wall_ms = baseline.wall_ms;

  for (std::uint32_t w : windows) {
    PipelineConfig cfg = base;
    cfg.mode = Mode::AHTM;
    cfg.cu.window = w;
    cfg.cu.skip_sm_when_rm_confident = true;
    cfg.cu.pin.reset();
    const RunResult r = run_stream(cfg, data.values, data.labels, opt);
    SweepRow row;
    row.window = w;
    row.match_rate = r.summary.match_rate;
    row.accuracy_penalty = baseline.summary.match_rate - r.summary.match_rate;
    row.speedup = static_cast<double>(baseline.sm_invocations) / static_cast<double>(std::max<std::uint64_t>(1, r.sm_invocations));
    row.wall_clock_speedup = r.wall_ms > 0.0 ? baseline.wall_ms / r.wall_ms : 0.0;
    row.rm_fraction = r.rm_fraction();
    rep.rows.push_back(row);
  }
  return rep;
}

std::string sweep_csv(const SweepReport& r) {
  std::ostringstream o;
  o << "schema_version,dataset,window,accuracy_penalty,speedup,wall_clock_speedup,rm_fraction,match_rate,"
       "baseline_match_rate\n";
  for (const auto& row : r.rows) {
    o << kReportSchemaVersion << ',' << r.dataset << ',' << row.window << ',' << fmt(row.accuracy_penalty) << ','
      << fmt(row.speedup) << ',' << fmt(row.wall_clock_speedup) << ',' << fmt(row.rm_fraction) << ','
      << fmt(row.match_rate) << ',' << fmt(r.baseline_match_rate) << '\n';
  }
  return o.str();
}

SweepReport cmd_sweep_cu_window(const ExperimentSpec& spec, const std::vector<std::uint32_t>& windows) {
  if (windows.size() < 2) throw ValidationError("window sweep needs at least two window values");
  spec.validate();
  const LoadedData data = load_data(spec);
  SweepReport rep = sweep_cu_window(spec.base, data, windows, spec.repeat);
  write_files(spec.out_dir, {{"sweep.csv", sweep_csv(rep)}}, rep.files);
  return rep;
}

bool SelftestReport::passed() const {
  return !cases.empty() && std::all_of(cases.begin(), cases.end(), [](const SelftestCase& c) { return c.passed; });
}

namespace {

Sdr random_sdr(std::uint32_t width, std::uint32_t active, std::mt19937_64& rng) {
  std::vector<BitIndex> all(width);
  std::iota(all.begin(), all.end(), BitIndex{0});
  for (std::uint32_t i = 0; i < active; ++i) {
    std::uniform_int_distribution<std::uint32_t> pick(i, width - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(active);
  return Sdr(width, std::move(all));
}

SelftestCase run_case(const std::string& name, const std::function<std::string()>& body) {
  SelftestCase c{name, false, ""};
  try {
    c.detail = body();
    c.passed = c.detail.empty();
  } catch (const SnapshotError& e) {
    c.detail = "module " + e.module() + ": " + e.what();
  } catch (const std::exception& e) {
    c.detail = e.what();
  }
  if (c.passed) c.detail = "ok";
  return c;
}

std::string ars_oracle() {
  std::mt19937_64 rng(101);
  for (int i = 0; i < 2000; ++i) {
    const Sdr a = random_sdr(1024, 20, rng);
    const Sdr b = random_sdr(1024, 20, rng);
    const auto da = a.to_dense();
    const auto db = b.to_dense();
    std::size_t both = 0, nz = 0;
    for (std::size_t k = 0; k < da.size(); ++k) {
      both += (da[k] & db[k]);
      nz += db[k];
    }
    const double expect = 1.0 - static_cast<double>(both) / static_cast<double>(nz);
    if (ars(a, b) != expect) return "ars disagrees with dense evaluation at pair " + std::to_string(i);
    if (ars(a, a) != 0.0) return "ars(a,a) != 0";
  }
  return {};
}

std::string cam_search_scan() {
  std::mt19937_64 rng(202);
  CamGeometry g{4, 2, 3, 8, 3};
  CamArray cam(g);
  std::vector<Sdr> pool;
  for (int i = 0; i < 6; ++i) pool.push_back(random_sdr(g.word_bits(), 3, rng));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<std::uint32_t> row(0, g.rows() - 1);
  std::vector<std::optional<Sdr>> shadow(g.rows());
  for (int step = 0; step < 2000; ++step) {
    const std::uint32_t r = row(rng);
    if (step % 5 == 4 && shadow[r]) {
      cam.update(r);
      shadow[r].reset();
    } else {
      const Sdr& w = pool[pick(rng)];
      cam.write(CamStage::Present, r, w);
      shadow[r] = w;
    }
    const Sdr& q = pool[pick(rng)];
    const SearchResult res = cam.search(CamStage::Present, q);
    bool any = false;
    for (std::uint32_t k = 0; k < g.rows(); ++k) {
      const bool expect = shadow[k] && *shadow[k] == q;
      any = any || expect;
      if ((res.match[k] != 0) != expect) return "search disagrees with scan at step " + std::to_string(step);
    }
    if (res.miss == any) return "miss flag wrong at step " + std::to_string(step);
  }
  return {};
}

std::string cam_minmax_scan() {
  CamGeometry g{1, 1, 3, 8, 3};
  CamArray cam(g);
  // Every assignment of 3-bit confidences to 3 rows, every candidate subset.
  for (std::uint32_t code = 0; code < 512; ++code) {
    std::vector<std::uint32_t> conf = {code & 7u, (code >> 3) & 7u, (code >> 6) & 7u};
    for (std::uint32_t r = 0; r < 3; ++r) cam.write_confidence(r, conf[r]);
    for (std::uint32_t subset = 1; subset < 8; ++subset) {
      std::vector<std::uint32_t> cand;
      for (std::uint32_t r = 0; r < 3; ++r) {
        if (subset & (1u << r)) cand.push_back(r);
      }
      std::uint32_t best_max = cand.front(), best_min = cand.front();
      for (std::uint32_t r : cand) {
        if (conf[r] > conf[best_max]) best_max = r;
        if (conf[r] < conf[best_min]) best_min = r;
      }
      if (cam.minmax(cand, MinMaxMode::Max) != best_max) return "max disagrees with scan";
      if (cam.minmax(cand, MinMaxMode::Min) != best_min) return "min disagrees with scan";
    }
  }
  return {};
}

std::string reflex_equivalence() {
  std::mt19937_64 rng(303);
  CamGeometry g{8, 2, 3, 32, 8};
  const std::size_t capacity = 48;
  ReflexTable soft({capacity, ReflexLayout::RowPerPair, g.confidence_max()});
  CamReflexBackend cam(g, capacity);
  std::vector<Sdr> states;
  for (int i = 0; i < 40; ++i) states.push_back(random_sdr(g.word_bits(), 6, rng));
  std::uniform_int_distribution<std::size_t> pick(0, states.size() - 1);
  std::uniform_int_distribution<int> op(0, 9);
  for (int step = 0; step < 3000; ++step) {
    const Sdr& a = states[pick(rng)];
    const Sdr& b = states[pick(rng)];
    const int o = op(rng);
    if (o < 3) {
      if (soft.lookup_predict(a) != cam.lookup_predict(a)) return "prediction differs at step " + std::to_string(step);
    } else if (o < 4) {
      if (soft.decrement(a, b) != cam.decrement(a, b)) return "decrement differs at step " + std::to_string(step);
    } else if (soft.observe(a, b) != cam.observe(a, b)) {
      return "eviction victim differs at step " + std::to_string(step);
    }
    if (soft.size() != cam.size()) return "size differs at step " + std::to_string(step);
  }
  return {};
}

std::string cu_rules() {
  using A = MemoryAction;
  if (apply_training_rules(false, false) != std::vector<A>{A::RmUpdate, A::RmDecrement, A::SmLearn}) return "(F,F)";
  if (apply_training_rules(false, true) != std::vector<A>{A::EmitSm, A::RmDecrement, A::RmRetrain}) return "(F,T)";
  if (apply_training_rules(true, false) != std::vector<A>{A::EmitRm, A::SmLearn}) return "(T,F)";
  if (apply_training_rules(true, true) != std::vector<A>{A::EmitRm, A::SmLearnBoosted}) return "(T,T)";
  if (arbitrate(1.2, 1.5) != Memory::RM || arbitrate(2.0, 1.0) != Memory::SM || arbitrate(1.0, 1.0) != Memory::RM) {
    return "arbitration examples";
  }
  return {};
}

std::string snapshot_roundtrip() {
  PipelineConfig cfg = toy_pipeline_config(Mode::AHTM);
  const auto stream = synth_stream(SynthKind::NoisyCycle, 300, 5);
  calibrate_encoder(cfg, stream.values);
  Pipeline a(cfg);
  for (std::size_t i = 0; i < 200; ++i) a.step(stream.values[i]);
  std::stringstream buf;
  save_snapshot(a, buf);
  Pipeline b(cfg);
  load_snapshot(b, buf);
  if (!(b.spatial_pooler().matrix() == a.spatial_pooler().matrix())) return "sp state differs after restore";
  if (!b.sequence_memory().same_network(a.sequence_memory())) return "sm state differs after restore";
  return {};
}

}  // namespace

SelftestReport cmd_selftest(const std::optional<std::string>& snapshot_path) {
  SelftestReport rep;
  rep.cases.push_back(run_case("ars_oracle", ars_oracle));
  rep.cases.push_back(run_case("cam_search_vs_scan", cam_search_scan));
  rep.cases.push_back(run_case("cam_minmax_vs_scan", cam_minmax_scan));
  rep.cases.push_back(run_case("reflex_software_vs_cam", reflex_equivalence));
  rep.cases.push_back(run_case("control_unit_rules", cu_rules));
  rep.cases.push_back(run_case("snapshot_roundtrip", snapshot_roundtrip));
  if (snapshot_path) {
    rep.cases.push_back(run_case("snapshot_file", [&]() -> std::string {
      std::ifstream in(*snapshot_path);
      if (!in) throw IoError("cannot read snapshot: " + *snapshot_path);
      validate_snapshot(in);
      return {};
    }));
  }
  return rep;
}

}  // namespace ahtm
