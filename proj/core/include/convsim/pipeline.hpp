#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <vector>

#include "convsim/config.hpp"
#include "convsim/corpus_io.hpp"
#include "convsim/renderer.hpp"
#include "convsim/rng.hpp"

namespace convsim {

// Per-conversation seed: SplitMix64 finalizer over global_seed XOR index.
// Bit-exact definition in docs/determinism.md; everything a conversation
// does derives from this value, never from the worker running it.
inline std::uint64_t conversation_seed(std::uint64_t global_seed, std::uint64_t index) {
  return mix64(global_seed ^ index);
}

struct DatasetSummary {
  int num_sessions = 0;
  long long num_supervisions = 0;
  double total_audio_hours = 0.0;
  double wall_seconds = 0.0;
};

// Splits preflight (corpus load, pause splitting, audio preload, noise load)
// from generation so config/input problems surface before any worker starts.
// run() renders conversations round-robin across worker threads, each writing
// only its own shard manifest, per-session wav and rttm; shards are merged
// into sessions.jsonl and all.rttm in conversation order and deleted. On a
// worker failure the run aborts, names the failing conversation, and leaves
// the partial shards on disk. All merged artifacts are byte-identical for
// any worker count.
class DatasetGenerator {
 public:
  explicit DatasetGenerator(const SimulationConfig& config);

  DatasetSummary run() { return run(config_.num_workers, config_.output_dir); }
  DatasetSummary run(int num_workers, const std::filesystem::path& output_dir);

  const std::vector<SpeakerPool>& pools() const { return pools_; }

 private:
  SimulationConfig config_;
  std::vector<SpeakerPool> pools_;
  SourceAudioStore store_;
  NoisePool noise_;
};

DatasetSummary generate_dataset(const SimulationConfig& config);

struct BenchmarkRow {
  int workers = 0;
  double wall_s = 0.0;
  double hours_per_min = 0.0;
};

// Generates the configured dataset once per worker count (repetitions > 1
// take the median wall time) into throwaway directories under scratch_dir.
std::vector<BenchmarkRow> run_benchmark(DatasetGenerator& generator,
                                        std::span<const int> worker_counts,
                                        int repetitions,
                                        const std::filesystem::path& scratch_dir);

// Header `workers,wall_s,hours_per_min`, one row per worker count.
void write_benchmark_csv(std::span<const BenchmarkRow> rows, std::ostream& out);

// Physical cores from /proc/cpuinfo (unique physical id + core id pairs);
// falls back to hardware_concurrency where that is unavailable.
int physical_core_count();

}  // namespace convsim
