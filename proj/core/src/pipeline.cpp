#include "ahtm/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ahtm/error.hpp"
#include "ahtm/snapshot.hpp"

namespace ahtm {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::unique_ptr<ReflexBackend> make_reflex(const PipelineConfig& cfg) {
  switch (cfg.mode) {
    case Mode::HTM: return nullptr;
    case Mode::AHTM: return std::make_unique<ReflexTable>(cfg.rm);
    case Mode::H_AHTM: return std::make_unique<CamReflexBackend>(cfg.cam, cfg.rm.capacity);
  }
  return nullptr;
}

SmConfig sm_for(const PipelineConfig& cfg) {
  SmConfig sm = cfg.sm;
  sm.columns = cfg.sp.columns;
  return sm;
}

double score(const std::optional<Sdr>& prediction, const Sdr& actual) {
  return prediction ? ars(*prediction, actual) : kNoPredictionArs;
}

bool correct(const std::optional<Sdr>& prediction, const Sdr& actual) {
  return prediction && is_match(*prediction, actual);
}

bool has(const std::vector<MemoryAction>& actions, MemoryAction a) {
  return std::find(actions.begin(), actions.end(), a) != actions.end();
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::HTM: return "HTM";
    case Mode::AHTM: return "AHTM";
    case Mode::H_AHTM: return "H-AHTM";
  }
  return "unknown";
}

Mode parse_mode(std::string_view text) {
  const std::string m = lower(text);
  if (m == "htm") return Mode::HTM;
  if (m == "ahtm") return Mode::AHTM;
  if (m == "h_ahtm" || m == "h-ahtm" || m == "hahtm") return Mode::H_AHTM;
  throw ValidationError("unknown mode '" + std::string(text) + "' (expected htm, ahtm or h_ahtm)");
}

void PipelineConfig::validate() const {
  encoder.validate();
  sp.validate();
  sm_for(*this).validate();
  cu.validate();
  if (sp.columns < sp.k) throw ValidationError("sp.k exceeds sp.columns");
  if (rm.capacity == 0) throw ValidationError("rm.capacity must be positive");
  if (repeat_count == 0) throw ValidationError("repeat must be positive");
  if (mode == Mode::H_AHTM) {
    cam.validate();
    if (cam.word_bits() != sp.columns) {
      throw ValidationError("cam.n * cam.q (" + std::to_string(cam.word_bits()) + ") must equal sp.columns (" +
                            std::to_string(sp.columns) + ") [keys: cam.n, cam.q, sp.columns]");
    }
    if (rm.capacity > cam.rows()) {
      throw ValidationError("rm.capacity exceeds cam rows cam.m * cam.p [keys: rm.capacity, cam.m, cam.p]");
    }
  }
}

PipelineConfig toy_pipeline_config(Mode mode) {
  PipelineConfig cfg;
  cfg.mode = mode;
  cfg.encoder.width = 256;
  cfg.encoder.active_width = 16;
  cfg.sp.columns = 256;
  cfg.sp.k = 10;
  cfg.sm = SmConfig::toy(256, 4);
  cfg.cam.n = 32;
  cfg.cam.q = 8;
  cfg.rm.capacity = 512;
  cfg.repeat_count = 1;
  return cfg;
}

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      encoder_(cfg_.encoder),
      sp_(cfg_.sp, cfg_.encoder.width),
      sm_(sm_for(cfg_)),
      rm_(make_reflex(cfg_)),
      cu_(cfg_.cu) {
  cfg_.sm.columns = cfg_.sp.columns;
}

const CamReflexBackend* Pipeline::cam_reflex() const noexcept {
  return cfg_.mode == Mode::H_AHTM ? static_cast<const CamReflexBackend*>(rm_.get()) : nullptr;
}

StepTrace Pipeline::step(double x) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool adaptive = cfg_.mode != Mode::HTM;

  StepTrace tr;
  tr.step = steps_;
  tr.raw = x;
  tr.encoded = encoder_.encode(x);
  tr.pooled = sp_.pool(tr.encoded, cfg_.learning);
  const Sdr& r = tr.pooled;

  tr.scores.step = steps_;
  tr.scores.ars_rm = score(rm_pred_, r);
  tr.scores.ars_sm = score(sm_pred_, r);
  tr.scores.ars_emitted = score(emitted_pred_, r);
  tr.scores.matched = correct(emitted_pred_, r);
  const bool rm_ok = correct(rm_pred_, r);
  const bool sm_ok = correct(sm_pred_, r);

  std::vector<MemoryAction> actions;
  if (adaptive && prev_pooled_) {
    cu_.record_outcome(tr.scores.ars_rm, tr.scores.ars_sm);
    actions = apply_training_rules(rm_ok, sm_ok);
  }

  if (adaptive && cfg_.learning && prev_pooled_) {
    if (has(actions, MemoryAction::RmDecrement) && rm_pred_) rm_->decrement(*prev_pooled_, *rm_pred_);
    // The observed transition doubles as the update and as the retrain target.
    rm_->observe(*prev_pooled_, r);
  }

  std::optional<Sdr> rm_next;
  if (adaptive) rm_next = rm_->lookup_predict(r);

  const Memory choice = adaptive ? cu_.choose() : Memory::SM;
  const bool pinned_sm = cfg_.cu.pin == Memory::SM;
  const double boost =
      (!pinned_sm && has(actions, MemoryAction::SmLearnBoosted)) ? cfg_.cu.boost_factor : 1.0;

  tr.sm_skipped = adaptive && cfg_.cu.skip_sm_when_rm_confident && choice == Memory::RM && rm_ok && rm_next;
  std::optional<Sdr> sm_next;
  if (tr.sm_skipped) {
    sm_.reset_context();
  } else {
    SmStepOutput out = sm_.step(r, cfg_.learning, boost);
    ++sm_invocations_;
    if (!out.predicted_columns.empty()) sm_next = std::move(out.predicted_columns);
  }

  tr.chosen = choice;
  tr.rm_prediction = rm_next;
  tr.sm_prediction = sm_next;
  tr.emitted = choice == Memory::RM ? rm_next : sm_next;
  if (adaptive && choice == Memory::RM) ++rm_served_;
  tr.rm_sum = cu_.rm_sum();
  tr.sm_sum = cu_.sm_sum();

  prev_pooled_ = r;
  rm_pred_ = std::move(rm_next);
  sm_pred_ = std::move(sm_next);
  emitted_pred_ = tr.emitted;
  ++steps_;
  tr.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return tr;
}

void calibrate_encoder(PipelineConfig& cfg, const std::vector<double>& values) {
  if (!cfg.encoder_auto_range || values.empty()) return;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double a = *lo, b = *hi;
  if (!std::isfinite(a) || !std::isfinite(b)) throw InputError("stream contains non-finite values");
  if (a == b) {
    a -= 0.5;
    b += 0.5;
  }
  cfg.encoder.min_value = a;
  cfg.encoder.max_value = b;
}

RunResult run_stream(PipelineConfig cfg, const std::vector<double>& values, const std::vector<std::uint8_t>& labels,
                     RunOptions options) {
  if (values.empty()) throw ContractViolation("run_stream: empty value sequence");
  if (!labels.empty() && labels.size() != values.size()) throw ContractViolation("run_stream: label length mismatch");
  calibrate_encoder(cfg, values);
  const std::uint32_t repeat = options.repeat.value_or(cfg.repeat_count);
  if (repeat == 0) throw ValidationError("repeat must be positive");

  RunResult res;
  res.mode = cfg.mode;
  std::vector<double> durations;
  durations.reserve(values.size() * repeat);
  double wall_total = 0.0;

  for (std::uint32_t pass = 0; pass < repeat; ++pass) {
    Pipeline p(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    for (double v : values) {
      StepTrace tr = p.step(v);
      durations.push_back(tr.duration_ms);
      if (pass == 0) {
        res.records.push_back(tr.scores);
        if (options.keep_traces) res.traces.push_back(std::move(tr));
      }
    }
    wall_total += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (pass == 0) {
      res.steps = p.steps();
      res.rm_served = p.rm_served();
      res.sm_invocations = p.sm_invocations();
      if (const auto* cam = p.cam_reflex()) res.ledger = cam->ledger();
      if (options.keep_snapshot) {
        std::ostringstream snap;
        save_snapshot(p, snap);
        res.snapshot = snap.str();
      }
    }
  }

  const std::vector<std::uint8_t> truth = labels.empty() ? std::vector<std::uint8_t>(values.size(), 0) : labels;
  const std::size_t skip = std::min(options.probation, res.records.size());
  res.summary = classification_metrics(std::span(res.records).subspan(skip), std::span(truth).subspan(skip));
  const auto matched = std::count_if(res.records.begin(), res.records.end(), [](const ArsRecord& r) { return r.matched; });
  res.summary.match_rate = static_cast<double>(matched) / static_cast<double>(res.records.size());
  res.timing = timing_stats(durations, repeat);
  res.wall_ms = wall_total / repeat;
  res.summary.mean_step_time_ms = res.timing.mean_ms;
  res.summary.rm_hit_fraction = res.rm_fraction();
  return res;
}

std::string_view to_string(SynthKind k) {
  switch (k) {
    case SynthKind::Cycle: return "cycle";
    case SynthKind::NoisyCycle: return "noisy-cycle";
    case SynthKind::RandomWalk: return "random-walk";
    case SynthKind::InjectedAnomaly: return "injected-anomaly";
  }
  return "unknown";
}

SynthSpec parse_synth_spec(std::string_view text) {
  SynthSpec s;
  const auto colon = text.find(':');
  const std::string kind = lower(text.substr(0, colon));
  if (kind == "cycle") s.kind = SynthKind::Cycle;
  else if (kind == "noisy-cycle") s.kind = SynthKind::NoisyCycle;
  else if (kind == "random-walk") s.kind = SynthKind::RandomWalk;
  else if (kind == "injected-anomaly") s.kind = SynthKind::InjectedAnomaly;
  else throw ValidationError("unknown synth kind '" + kind + "'");
  if (colon == std::string_view::npos) return s;

  std::stringstream rest{std::string(text.substr(colon + 1))};
  std::string item;
  while (std::getline(rest, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("synth option '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    try {
      if (key == "length") s.length = std::stoull(val);
      else if (key == "period") s.period = static_cast<std::uint32_t>(std::stoul(val));
      else if (key == "noise") s.noise = std::stod(val);
      else if (key == "anomalies") s.anomalies = std::stoull(val);
      else if (key == "seed") s.seed = std::stoull(val);
      else throw ValidationError("unknown synth option '" + key + "'");
    } catch (const std::logic_error&) {
      throw ValidationError("bad value for synth option '" + key + "': " + val);
    }
  }
  return s;
}

SynthStream synth_stream(const SynthSpec& spec) {
  if (spec.period == 0) throw ValidationError("synth period must be positive");
  if (spec.noise < 0.0 || spec.noise > 1.0) throw ValidationError("synth noise must lie in [0,1]");
  SynthStream out;
  out.values.reserve(spec.length);
  out.labels.assign(spec.length, 0);
  std::mt19937_64 rng(spec.seed);

  switch (spec.kind) {
    case SynthKind::Cycle:
      for (std::size_t i = 0; i < spec.length; ++i) out.values.push_back(static_cast<double>(i % spec.period));
      break;
    case SynthKind::NoisyCycle: {
      std::bernoulli_distribution flip(spec.noise);
      std::uniform_int_distribution<std::uint32_t> level(0, spec.period - 1);
      for (std::size_t i = 0; i < spec.length; ++i) {
        const auto v = flip(rng) ? level(rng) : static_cast<std::uint32_t>(i % spec.period);
        out.values.push_back(static_cast<double>(v));
      }
      break;
    }
    case SynthKind::RandomWalk: {
      std::normal_distribution<double> stepd(0.0, 1.0);
      double x = 0.0;
      for (std::size_t i = 0; i < spec.length; ++i) {
        out.values.push_back(x);
        x += stepd(rng);
      }
      break;
    }
    case SynthKind::InjectedAnomaly: {
      // Anomalies land after a warm-up quarter, never adjacent to each other.
      const std::size_t warm = spec.length / 4;
      const std::size_t slots = spec.length > warm ? (spec.length - warm) / 2 : 0;
      if (spec.anomalies > slots) throw ValidationError("too many anomalies for the stream length");
      out.probation = warm;
      for (std::size_t i = 0; i < spec.length; ++i) out.values.push_back(static_cast<double>(i % spec.period));
      std::vector<std::size_t> candidates(slots);
      for (std::size_t j = 0; j < slots; ++j) candidates[j] = warm + 2 * j;
      std::shuffle(candidates.begin(), candidates.end(), rng);
      // The jump level sits well above the cycle's range.
      const double jump = static_cast<double>(spec.period) + 2.0;
      for (std::size_t j = 0; j < spec.anomalies; ++j) {
        out.values[candidates[j]] = jump;
        out.labels[candidates[j]] = 1;
      }
      break;
    }
  }
  return out;
}

double first_order_determinism(const std::vector<double>& values) {
  if (values.size() < 2) return 1.0;
  std::map<double, std::map<double, std::size_t>> table;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) ++table[values[i]][values[i + 1]];
  std::size_t best_total = 0;
  for (const auto& [from, succ] : table) {
    std::size_t best = 0;
    for (const auto& [to, n] : succ) best = std::max(best, n);
    best_total += best;
  }
  return static_cast<double>(best_total) / static_cast<double>(values.size() - 1);
}

CsvSeries parse_csv(std::istream& in, const std::string& column, const std::string& origin) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      cells.push_back(cell);
    }
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(origin + ": missing header row");
  const auto header = split(line);
  const auto col_it = std::find(header.begin(), header.end(), column);
  if (col_it == header.end()) throw ValidationError(origin + ": no column named '" + column + "'");
  const auto col = static_cast<std::size_t>(col_it - header.begin());
  const auto ts_it = std::find(header.begin(), header.end(), "timestamp");

  CsvSeries out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() <= col) throw InputError(origin + ":" + std::to_string(line_no) + ": missing value column");
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cells[col], &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != cells[col].size() || !std::isfinite(v)) {
      throw InputError(origin + ":" + std::to_string(line_no) + ": not a finite number: '" + cells[col] + "'");
    }
    out.values.push_back(v);
    if (ts_it != header.end()) {
      const auto ts = static_cast<std::size_t>(ts_it - header.begin());
      out.timestamps.push_back(ts < cells.size() ? cells[ts] : std::string{});
    }
  }
  if (out.values.empty()) throw ValidationError(origin + ": no data rows");
  return out;
}

CsvSeries load_csv(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read dataset: " + path);
  return parse_csv(in, column, path);
}

void write_trace_jsonl(std::ostream& out, const std::vector<StepTrace>& traces) {
  auto opt = [](const std::optional<Sdr>& s) -> nlohmann::json {
    return s ? nlohmann::json(s->to_string()) : nlohmann::json(nullptr);
  };
  for (const auto& t : traces) {
    nlohmann::json j{{"step", t.step},
                     {"raw", t.raw},
                     {"encoded", t.encoded.to_string()},
                     {"pooled", t.pooled.to_string()},
                     {"rm_prediction", opt(t.rm_prediction)},
                     {"sm_prediction", opt(t.sm_prediction)},
                     {"emitted", opt(t.emitted)},
                     {"chosen", std::string(to_string(t.chosen))},
                     {"ars_rm", t.scores.ars_rm},
                     {"ars_sm", t.scores.ars_sm},
                     {"ars_emitted", t.scores.ars_emitted},
                     {"matched", t.scores.matched},
                     {"rm_sum", t.rm_sum},
                     {"sm_sum", t.sm_sum},
                     {"sm_skipped", t.sm_skipped},
                     {"duration_ms", t.duration_ms}};
    out << j.dump() << '\n';
  }
}

}  // namespace ahtm
