#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "ahtm/cam.hpp"
#include "ahtm/metrics.hpp"
#include "ahtm/pipeline.hpp"
#include "ahtm/reflex_memory.hpp"
#include "ahtm/sequence_memory.hpp"
#include "ahtm/spatial_pooler.hpp"

using namespace ahtm;

namespace {

Sdr random_sdr(std::uint32_t width, std::uint32_t active, std::mt19937_64& rng) {
  std::vector<BitIndex> bits(width);
  for (BitIndex i = 0; i < width; ++i) bits[i] = i;
  std::shuffle(bits.begin(), bits.end(), rng);
  bits.resize(active);
  return Sdr(width, std::move(bits));
}

std::vector<Sdr> pool_of(std::size_t n, std::uint32_t width, std::uint32_t active, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Sdr> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_sdr(width, active, rng));
  return out;
}

void BM_Ars(benchmark::State& state) {
  const auto sdrs = pool_of(64, 1024, 20, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ars(sdrs[i % 64], sdrs[(i + 1) % 64]));
    ++i;
  }
}
BENCHMARK(BM_Ars);

void BM_SpatialPoolerPool(benchmark::State& state) {
  SpConfig cfg;
  SpatialPooler sp(cfg, 1024);
  const auto inputs = pool_of(32, 1024, 40, 2);
  const bool learning = state.range(0) != 0;
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sp.pool(inputs[i++ % inputs.size()], learning));
}
BENCHMARK(BM_SpatialPoolerPool)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_SequenceMemoryStep(benchmark::State& state) {
  SequenceMemory sm(SmConfig{});
  const auto cycle = pool_of(static_cast<std::size_t>(state.range(0)), 1024, 20, 3);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sm.step(cycle[i++ % cycle.size()], true));
}
BENCHMARK(BM_SequenceMemoryStep)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_ReflexLookup(benchmark::State& state) {
  ReflexTable t({2048, ReflexLayout::RowPerPair, 255});
  const auto states = pool_of(1024, 1024, 20, 4);
  for (std::size_t i = 0; i + 1 < states.size(); ++i) t.observe(states[i], states[i + 1]);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(t.lookup_predict(states[i++ % states.size()]));
}
BENCHMARK(BM_ReflexLookup);

void BM_ReflexObserve(benchmark::State& state) {
  ReflexTable t({2048, ReflexLayout::RowPerPair, 255});
  const auto states = pool_of(4096, 1024, 20, 5);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.observe(states[i % states.size()], states[(i * 7 + 1) % states.size()]));
    ++i;
  }
}
BENCHMARK(BM_ReflexObserve)->Unit(benchmark::kMicrosecond);

void BM_CamSearch(benchmark::State& state) {
  CamArray cam;
  const auto words = pool_of(cam.geometry().rows(), cam.geometry().word_bits(), 20, 6);
  for (std::uint32_t r = 0; r < cam.geometry().rows(); ++r) cam.write(CamStage::Present, r, words[r]);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cam.search(CamStage::Present, words[i++ % words.size()]));
}
BENCHMARK(BM_CamSearch)->Unit(benchmark::kMicrosecond);

void BM_CamMinMax(benchmark::State& state) {
  CamArray cam;
  std::mt19937_64 rng(7);
  std::vector<std::uint32_t> cand;
  for (std::uint32_t r = 0; r < static_cast<std::uint32_t>(state.range(0)); ++r) {
    cam.write_confidence(r, static_cast<std::uint32_t>(rng() % 256));
    cand.push_back(r);
  }
  for (auto _ : state) benchmark::DoNotOptimize(cam.minmax(cand, MinMaxMode::Max));
}
BENCHMARK(BM_CamMinMax)->Arg(2)->Arg(16)->Arg(128);

void BM_CamPredict(benchmark::State& state) {
  CamArray cam;
  const auto words = pool_of(2, cam.geometry().word_bits(), 20, 8);
  cam.write(CamStage::Present, 0, words[0]);
  cam.write(CamStage::Next, 0, words[1]);
  for (auto _ : state) benchmark::DoNotOptimize(cam.predict(0));
}
BENCHMARK(BM_CamPredict);

void BM_PipelineStep(benchmark::State& state) {
  PipelineConfig cfg;
  cfg.mode = static_cast<Mode>(state.range(0));
  cfg.cu.skip_sm_when_rm_confident = state.range(1) != 0;
  cfg.encoder.min_value = 0.0;
  cfg.encoder.max_value = 15.0;
  Pipeline p(cfg);
  std::size_t i = 0;
  // Warm up so the reflex table is populated.
  for (; i < 200; ++i) p.step(static_cast<double>(i % 16));
  for (auto _ : state) benchmark::DoNotOptimize(p.step(static_cast<double>(i++ % 16)));
  state.SetLabel(std::string(to_string(cfg.mode)) + (cfg.cu.skip_sm_when_rm_confident ? " skip-SM" : ""));
}
BENCHMARK(BM_PipelineStep)
    ->Args({static_cast<int>(Mode::HTM), 0})
    ->Args({static_cast<int>(Mode::AHTM), 0})
    ->Args({static_cast<int>(Mode::AHTM), 1})
    ->Args({static_cast<int>(Mode::H_AHTM), 1})
    ->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
