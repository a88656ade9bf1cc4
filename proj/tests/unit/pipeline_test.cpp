#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "ahtm/error.hpp"
#include "ahtm/pipeline.hpp"

using namespace ahtm;

namespace {

PipelineConfig toy(Mode mode, double max_value = 4.0) {
  PipelineConfig cfg = toy_pipeline_config(mode);
  cfg.encoder.min_value = 0.0;
  cfg.encoder.max_value = max_value;
  return cfg;
}

std::vector<double> cycle(std::size_t n, std::uint32_t period) {
  std::vector<double> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(static_cast<double>(i % period));
  return v;
}

std::vector<std::optional<Sdr>> emitted(Pipeline& p, const std::vector<double>& values) {
  std::vector<std::optional<Sdr>> out;
  for (double x : values) out.push_back(p.step(x).emitted);
  return out;
}

}  // namespace

TEST(Mode, ParseAndPrint) {
  EXPECT_EQ(parse_mode("htm"), Mode::HTM);
  EXPECT_EQ(parse_mode("AHTM"), Mode::AHTM);
  EXPECT_EQ(parse_mode("h-ahtm"), Mode::H_AHTM);
  EXPECT_EQ(parse_mode("H_AHTM"), Mode::H_AHTM);
  EXPECT_EQ(to_string(Mode::H_AHTM), "H-AHTM");
  EXPECT_THROW(parse_mode("fast"), ValidationError);
}

TEST(PipelineConfig, HardwareModeNeedsMatchingWordWidth) {
  PipelineConfig cfg = toy(Mode::H_AHTM);
  EXPECT_NO_THROW(cfg.validate());
  cfg.cam.n = 16;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = toy(Mode::H_AHTM);
  cfg.rm.capacity = cfg.cam.rows() + 1;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Pipeline, LearnsAPeriodicStream) {
  for (Mode mode : {Mode::HTM, Mode::AHTM, Mode::H_AHTM}) {
    Pipeline p(toy(mode));
    std::size_t late_matches = 0;
    const auto values = cycle(400, 4);
    for (std::size_t t = 0; t < values.size(); ++t) {
      const auto tr = p.step(values[t]);
      if (t >= 300) late_matches += tr.scores.matched ? 1 : 0;
    }
    EXPECT_EQ(late_matches, 100u) << to_string(mode);
  }
}

TEST(Pipeline, FirstStepHasNoPredictionToScore) {
  Pipeline p(toy(Mode::AHTM));
  const auto tr = p.step(1.0);
  EXPECT_DOUBLE_EQ(tr.scores.ars_emitted, kNoPredictionArs);
  EXPECT_FALSE(tr.scores.matched);
  EXPECT_EQ(p.control_unit().filled(), 0u);
}

TEST(Pipeline, HtmModeNeverUsesTheReflexMemory) {
  Pipeline p(toy(Mode::HTM));
  for (double x : cycle(100, 3)) {
    const auto tr = p.step(x);
    EXPECT_EQ(tr.chosen, Memory::SM);
    EXPECT_FALSE(tr.sm_skipped);
  }
  EXPECT_EQ(p.reflex(), nullptr);
  EXPECT_EQ(p.rm_served(), 0u);
  EXPECT_EQ(p.sm_invocations(), 100u);
}

TEST(Pipeline, AhtmPinnedToSmEqualsHtm) {
  const auto values = cycle(300, 5);
  PipelineConfig pinned = toy(Mode::AHTM, 5.0);
  pinned.cu.pin = Memory::SM;
  Pipeline a(pinned);
  Pipeline h(toy(Mode::HTM, 5.0));
  EXPECT_EQ(emitted(a, values), emitted(h, values));
  EXPECT_TRUE(a.sequence_memory().same_network(h.sequence_memory()));
}

TEST(Pipeline, SoftwareAndCamReflexAgree) {
  SynthSpec s;
  s.kind = SynthKind::NoisyCycle;
  s.length = 1500;
  s.period = 6;
  s.noise = 0.05;
  const auto stream = synth_stream(s);
  for (bool skip : {false, true}) {
    PipelineConfig sw = toy(Mode::AHTM, 6.0);
    sw.cu.skip_sm_when_rm_confident = skip;
    PipelineConfig hw = sw;
    hw.mode = Mode::H_AHTM;
    Pipeline a(sw);
    Pipeline b(hw);
    EXPECT_EQ(emitted(a, stream.values), emitted(b, stream.values));
    EXPECT_EQ(a.rm_served(), b.rm_served());
    EXPECT_EQ(a.sm_invocations(), b.sm_invocations());
    ASSERT_NE(b.cam_reflex(), nullptr);
    EXPECT_GT(b.cam_reflex()->ledger().count(CamOp::Search), 0u);
  }
}

TEST(Pipeline, LearningOffLeavesStateUntouched) {
  Pipeline trained(toy(Mode::AHTM));
  for (double x : cycle(120, 3)) trained.step(x);
  PipelineConfig frozen_cfg = toy(Mode::AHTM);
  frozen_cfg.learning = false;
  Pipeline frozen(frozen_cfg);
  const auto sp_before = frozen.spatial_pooler().matrix();
  const auto sm_before = frozen.sequence_memory();
  for (double x : cycle(120, 3)) frozen.step(x);
  EXPECT_EQ(frozen.spatial_pooler().matrix(), sp_before);
  EXPECT_TRUE(frozen.sequence_memory().same_network(sm_before));
  EXPECT_EQ(frozen.reflex()->size(), 0u);
}

TEST(Pipeline, SkippingSmCountsInvocations) {
  PipelineConfig cfg = toy(Mode::AHTM);
  cfg.cu.skip_sm_when_rm_confident = true;
  Pipeline p(cfg);
  std::size_t skipped = 0;
  for (double x : cycle(600, 4)) skipped += p.step(x).sm_skipped ? 1 : 0;
  EXPECT_GT(skipped, 400u);
  EXPECT_EQ(p.sm_invocations() + skipped, 600u);
}

TEST(RunStream, RepeatsAreIdenticalAndTimed) {
  const auto values = cycle(200, 3);
  PipelineConfig cfg = toy(Mode::AHTM);
  RunOptions opt;
  opt.repeat = 3;
  const auto r = run_stream(cfg, values, {}, opt);
  EXPECT_EQ(r.steps, 200u);
  EXPECT_EQ(r.traces.size(), 200u);
  EXPECT_EQ(r.records.size(), 200u);
  EXPECT_EQ(r.timing.samples, 600u);
  EXPECT_EQ(r.timing.repeat_count, 3u);
  EXPECT_FALSE(r.ledger.has_value());
  EXPECT_GT(r.summary.match_rate, 0.8);
  cfg.mode = Mode::H_AHTM;
  EXPECT_TRUE(run_stream(cfg, values, {}, opt).ledger.has_value());
}

TEST(RunStream, ProbationExcludesWarmUpFromDetectionMetrics) {
  SynthSpec s;
  s.kind = SynthKind::InjectedAnomaly;
  s.length = 800;
  s.period = 4;
  s.anomalies = 8;
  const auto stream = synth_stream(s);
  RunOptions opt;
  opt.probation = stream.probation;
  const auto r = run_stream(toy(Mode::HTM), stream.values, stream.labels, opt);
  const auto& c = r.summary.confusion;
  EXPECT_EQ(c.tp + c.fp + c.tn + c.fn, 800u - stream.probation);
}

TEST(Synth, DeterministicPerSeed) {
  SynthSpec s;
  s.kind = SynthKind::RandomWalk;
  s.length = 100;
  EXPECT_EQ(synth_stream(s).values, synth_stream(s).values);
  SynthSpec t = s;
  t.seed = 2;
  EXPECT_NE(synth_stream(s).values, synth_stream(t).values);
}

TEST(Synth, InjectedAnomaliesAreCountedAndOutsideProbation) {
  SynthSpec s;
  s.kind = SynthKind::InjectedAnomaly;
  s.length = 2000;
  s.period = 5;
  s.anomalies = 25;
  const auto stream = synth_stream(s);
  std::size_t count = 0;
  for (std::size_t i = 0; i < stream.labels.size(); ++i) {
    if (stream.labels[i] == 0) continue;
    ++count;
    EXPECT_GE(i, stream.probation);
    EXPECT_DOUBLE_EQ(stream.values[i], 7.0);
    if (i + 1 < stream.labels.size()) EXPECT_EQ(stream.labels[i + 1], 0);
  }
  EXPECT_EQ(count, 25u);
}

TEST(Synth, CycleIsFullyDeterministic) {
  SynthSpec s;
  s.period = 7;
  s.length = 700;
  EXPECT_DOUBLE_EQ(first_order_determinism(synth_stream(s).values), 1.0);
  s.kind = SynthKind::NoisyCycle;
  s.noise = 0.02;
  const double d = first_order_determinism(synth_stream(s).values);
  EXPECT_GT(d, 0.9);
  EXPECT_LT(d, 1.0);
}

TEST(Synth, ParsesKindAndOptions) {
  const auto s = parse_synth_spec("noisy-cycle:length=500,period=9,noise=0.1,seed=4");
  EXPECT_EQ(s.kind, SynthKind::NoisyCycle);
  EXPECT_EQ(s.length, 500u);
  EXPECT_EQ(s.period, 9u);
  EXPECT_DOUBLE_EQ(s.noise, 0.1);
  EXPECT_EQ(s.seed, 4u);
  EXPECT_EQ(parse_synth_spec("cycle").kind, SynthKind::Cycle);
  EXPECT_THROW(parse_synth_spec("sine"), ValidationError);
  EXPECT_THROW(parse_synth_spec("cycle:colour=red"), ValidationError);
  EXPECT_THROW(parse_synth_spec("cycle:length=abc"), ValidationError);
}

TEST(Csv, ParsesNamedColumn) {
  std::istringstream in("timestamp,value\n2020-01-01,1.5\n2020-01-02,2\n");
  const auto s = parse_csv(in);
  EXPECT_EQ(s.values, (std::vector<double>{1.5, 2.0}));
  EXPECT_EQ(s.timestamps.front(), "2020-01-01");
}

TEST(Csv, ReportsErrors) {
  std::istringstream missing("timestamp,reading\nx,1\n");
  EXPECT_THROW(parse_csv(missing), ValidationError);
  std::istringstream bad("timestamp,value\nx,1\ny,oops\n");
  try {
    parse_csv(bad);
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty), ValidationError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv"), IoError);
}

TEST(Trace, JsonLinesOnePerStep) {
  Pipeline p(toy(Mode::AHTM));
  std::vector<StepTrace> traces;
  for (double x : cycle(5, 3)) traces.push_back(p.step(x));
  std::ostringstream out;
  write_trace_jsonl(out, traces);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
}
