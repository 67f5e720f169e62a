// Microbenchmarks for the generation hot paths: impulse responses, long
// convolutions, conversation planning and full-session rendering. These back
// the throughput numbers in the top-level benchmark CSV with per-primitive
// timings; run the binary directly (supports the usual --benchmark_* flags).

#include <benchmark/benchmark.h>

#include <array>
#include <string>
#include <vector>

#include "../tests/testutil.hpp"
#include "convsim/acoustics.hpp"
#include "convsim/dsp.hpp"
#include "convsim/planner.hpp"
#include "convsim/renderer.hpp"
#include "convsim/rng.hpp"
#include "convsim/turntaking.hpp"

using namespace convsim;

namespace {

TurnTakingParams callhome_params() {
  TurnTakingParams t;
  t.mode = TurnTakingMode::Categorical;
  t.prior = {0.15, 0.21, 0.44, 0.20};
  for (auto& row : t.matrix) row = t.prior;
  t.beta_th = 2.0;
  t.beta_ts = 2.5;
  t.beta_ir = 3.0;
  t.bc_max_duration = 1.0;
  return t;
}

std::vector<SpeakerPool> dry_pools(int num_speakers, int utts_per_speaker) {
  static constexpr double kDurations[] = {0.5, 0.8, 1.2, 1.7, 2.3};
  std::vector<SpeakerPool> pools;
  for (int s = 0; s < num_speakers; ++s) {
    SpeakerPool pool;
    pool.speaker_id = "spk" + std::to_string(s);
    for (int u = 0; u < utts_per_speaker; ++u) {
      SourceUtterance utt;
      utt.id = pool.speaker_id + "_u" + std::to_string(u);
      utt.speaker_id = pool.speaker_id;
      utt.sample_rate = 16000;
      utt.audio = AudioRef{"unused.wav", 0.0, kDurations[(s + u) % 5]};
      pool.utterances.push_back(std::move(utt));
    }
    pools.push_back(std::move(pool));
  }
  return pools;
}

// On-disk corpus shared by the render benchmarks; built once, removed at exit.
struct RenderFixture {
  testutil::TempDir tmp{"bench"};
  std::vector<SpeakerPool> pools;
  SourceAudioStore store;
  ConversationPlan plan;

  RenderFixture()
      : pools((testutil::build_corpus(tmp / "corpus", 2, 10),
               load_utterance_manifest(tmp / "corpus" / "utterances.jsonl"))),
        store(pools, 16000) {
    Rng rng(5);
    plan = build_plan("bench", 5, callhome_params(), pools, 2, 30.0, {0.0, 0.0}, rng);
  }

  static RenderFixture& instance() {
    static RenderFixture f;
    return f;
  }
};

void BM_image_method_rir(benchmark::State& state) {
  RoomSpec room;
  room.dimensions = {6.0, 4.0, 3.0};
  room.absorption = 0.4;
  room.max_order = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(image_method_rir(room, {1.2, 1.1, 1.4}, {4.4, 2.9, 1.3}, 16000));
  }
}
BENCHMARK(BM_image_method_rir)->Arg(1)->Arg(3)->Arg(6);

void BM_convolve_fft(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> x(static_cast<std::size_t>(state.range(0)));
  std::vector<double> h(2048);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : h) v = 0.01 * rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(convolve_fft(x, h));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_convolve_fft)->Arg(16000)->Arg(160000);

void BM_convolve_direct(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> x(16000);
  std::vector<double> h(128);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : h) v = 0.01 * rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(convolve_direct(x, h));
  }
  state.SetItemsProcessed(state.iterations() * 16000);
}
BENCHMARK(BM_convolve_direct);

void BM_build_plan(benchmark::State& state) {
  const TurnTakingParams params = callhome_params();
  const std::vector<SpeakerPool> pools = dry_pools(4, 10);
  const double target = static_cast<double>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Rng rng(seed++);
    benchmark::DoNotOptimize(build_plan("b", seed, params, pools, 2, target, {0.0, 0.0}, rng));
  }
}
BENCHMARK(BM_build_plan)->Arg(60)->Arg(600);

void BM_classify_transitions(benchmark::State& state) {
  const TurnTakingParams params = callhome_params();
  const std::vector<SpeakerPool> pools = dry_pools(2, 10);
  Rng rng(9);
  const ConversationPlan plan = build_plan("c", 9, params, pools, 2, 600.0, {0.0, 0.0}, rng);
  std::vector<TimelineEntry> timeline;
  for (const PlacedUtterance& p : plan.placements) {
    timeline.push_back(TimelineEntry{p.speaker_id, p.onset, p.onset + p.duration});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify_transitions(timeline, params.bc_max_duration));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(timeline.size()));
}
BENCHMARK(BM_classify_transitions);

void BM_render_session(benchmark::State& state) {
  RenderFixture& f = RenderFixture::instance();
  AcousticConfig acoustic;  // clean by default; reverb when arg is 1
  if (state.range(0) == 1) {
    acoustic.reverb = true;
    acoustic.max_order = 3;
  }
  NoisePool no_noise;
  std::int64_t samples = 0;
  for (auto _ : state) {
    Rng rng(7);
    RenderResult r = render(f.plan, acoustic, f.store, no_noise, rng);
    samples += static_cast<std::int64_t>(r.samples.size());
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(samples);
}
BENCHMARK(BM_render_session)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
