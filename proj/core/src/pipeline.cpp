#include "convsim/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "convsim/error.hpp"
#include "convsim/planner.hpp"
#include "convsim/wav.hpp"

namespace convsim {
namespace {

std::vector<SpeakerPool> load_pools(const SimulationConfig& config) {
  std::vector<SpeakerPool> pools = load_utterance_manifest(config.source_manifest);
  for (SpeakerPool& pool : pools) {
    for (const SourceUtterance& u : pool.utterances) {
      if (u.sample_rate != config.sample_rate) {
        throw ValidationError("utterance '" + u.id + "' is " + std::to_string(u.sample_rate) +
                              " Hz but the config wants " + std::to_string(config.sample_rate) +
                              " Hz (resampling is not supported)");
      }
    }
    if (config.split_pauses) {
      std::vector<SourceUtterance> split;
      for (const SourceUtterance& u : pool.utterances) {
        for (SourceUtterance& piece : split_at_pauses(u, config.min_pause)) {
          split.push_back(std::move(piece));
        }
      }
      pool.utterances = std::move(split);
    }
  }
  return pools;
}

std::filesystem::path shard_path(const std::filesystem::path& out_dir, int worker) {
  char name[32];
  std::snprintf(name, sizeof(name), "manifest_w%04d.jsonl", worker);
  return out_dir / "shards" / name;
}

void append_file(const std::filesystem::path& src, std::ofstream& dst) {
  std::ifstream in(src, std::ios::binary);
  if (!in) throw IoError("cannot read back '" + src.string() + "' during merge");
  dst << in.rdbuf();
}

}  // namespace

DatasetGenerator::DatasetGenerator(const SimulationConfig& config)
    : config_(config),
      pools_(load_pools((config_.validate(), config_))),
      store_(pools_, config_.sample_rate) {
  if (config_.acoustic.noise) {
    noise_ = NoisePool(config_.acoustic.noise_manifest, config_.sample_rate);
  }
}

DatasetSummary DatasetGenerator::run(int num_workers, const std::filesystem::path& output_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  if (num_workers < 1) throw ValidationError("num_workers must be at least 1");
  const int total = config_.num_conversations;
  const int workers = std::max(1, std::min(num_workers, total));

  std::filesystem::create_directories(output_dir / "audio");
  std::filesystem::create_directories(output_dir / "rttm");
  std::filesystem::create_directories(output_dir / "shards");

  struct Failure {
    int index;
    std::string message;
  };
  std::mutex failures_mutex;
  std::vector<Failure> failures;
  std::atomic<bool> abort{false};

  auto record_failure = [&](int index, const std::string& message) {
    std::lock_guard<std::mutex> lock(failures_mutex);
    failures.push_back(Failure{index, message});
    abort.store(true, std::memory_order_relaxed);
  };

  auto run_worker = [&](int w) {
    const std::filesystem::path shard = shard_path(output_dir, w);
    std::ofstream manifest(shard, std::ios::binary);
    if (!manifest) {
      record_failure(w, "cannot open shard '" + shard.string() + "'");
      return;
    }
    for (int i = w; i < total; i += workers) {
      if (abort.load(std::memory_order_relaxed)) return;
      try {
        const std::uint64_t cseed = conversation_seed(config_.seed, static_cast<std::uint64_t>(i));
        Rng conv_rng(cseed);
        const int num_speakers = sample_num_speakers(config_.num_speakers_distribution, conv_rng);

        char idbuf[64];
        std::snprintf(idbuf, sizeof(idbuf), "%s_%06d", config_.session_prefix.c_str(), i);
        const std::string session_id(idbuf);

        Rng plan_rng(derive_stream_seed(cseed, 1));
        const ConversationPlan plan = build_plan(
            session_id, cseed, config_.turntaking, pools_, num_speakers, config_.target_duration,
            {config_.acoustic.gain_db.lo, config_.acoustic.gain_db.hi}, plan_rng);

        Rng render_rng(derive_stream_seed(cseed, 2));
        RenderResult rendered = render(plan, config_.acoustic, store_, noise_, render_rng);

        const std::string wav_rel = "audio/" + session_id + ".wav";
        write_wav(output_dir / wav_rel, rendered.samples, rendered.sample_rate, WavEncoding::pcm16);
        rendered.manifest.audio_path = wav_rel;
        write_rttm_file(rendered.manifest, output_dir / "rttm" / (session_id + ".rttm"));
        manifest << session_to_json_line(rendered.manifest) << '\n';
        if (!manifest) throw IoError("write failed: " + shard.string());
      } catch (const std::exception& e) {
        record_failure(i, e.what());
        return;
      }
    }
    manifest.flush();
    if (!manifest) record_failure(w, "flush failed: " + shard.string());
  };

  if (total > 0) {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (int w = 0; w < workers; ++w) threads.emplace_back(run_worker, w);
    for (std::thread& t : threads) t.join();
  }

  if (!failures.empty()) {
    const auto worst = std::min_element(failures.begin(), failures.end(),
                                        [](const Failure& a, const Failure& b) { return a.index < b.index; });
    throw Error("conversation " + std::to_string(worst->index) + " failed: " + worst->message +
                " (partial shards left in " + (output_dir / "shards").string() + ")");
  }

  // Merge in conversation order. Worker w wrote indices w, w+W, ... in
  // ascending order, so conversation k is the next unread line of shard k%W.
  DatasetSummary summary;
  {
    std::vector<std::ifstream> shards;
    for (int w = 0; w < workers && total > 0; ++w) {
      shards.emplace_back(shard_path(output_dir, w), std::ios::binary);
      if (!shards.back()) throw IoError("missing shard for worker " + std::to_string(w));
    }
    std::ofstream sessions(output_dir / "sessions.jsonl", std::ios::binary);
    std::ofstream rttm(output_dir / "all.rttm", std::ios::binary);
    if (!sessions || !rttm) throw IoError("cannot open merged outputs in '" + output_dir.string() + "'");
    std::string line;
    for (int k = 0; k < total; ++k) {
      std::ifstream& shard = shards[static_cast<std::size_t>(k % workers)];
      if (!std::getline(shard, line)) {
        throw Error("shard " + std::to_string(k % workers) + " ended before conversation " + std::to_string(k));
      }
      sessions << line << '\n';
      const SessionManifest m = session_from_json_line(line);
      summary.total_audio_hours += m.duration / 3600.0;
      summary.num_supervisions += static_cast<long long>(m.supervisions.size());
      append_file(output_dir / "rttm" / (m.session_id + ".rttm"), rttm);
    }
    for (std::size_t w = 0; w < shards.size(); ++w) {
      if (std::getline(shards[w], line)) {
        throw Error("shard " + std::to_string(w) + " has more conversations than expected");
      }
    }
    sessions.flush();
    rttm.flush();
    if (!sessions || !rttm) throw IoError("merged write failed in '" + output_dir.string() + "'");
  }
  std::filesystem::remove_all(output_dir / "shards");

  summary.num_sessions = total;
  summary.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

DatasetSummary generate_dataset(const SimulationConfig& config) {
  DatasetGenerator generator(config);
  return generator.run();
}

std::vector<BenchmarkRow> run_benchmark(DatasetGenerator& generator,
                                        std::span<const int> worker_counts,
                                        int repetitions,
                                        const std::filesystem::path& scratch_dir) {
  if (worker_counts.empty()) throw ValidationError("worker_counts must not be empty");
  if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
  std::vector<BenchmarkRow> rows;
  for (int w : worker_counts) {
    std::vector<double> walls;
    double hours = 0.0;
    for (int rep = 0; rep < repetitions; ++rep) {
      const std::filesystem::path dir =
          scratch_dir / ("w" + std::to_string(w) + "_r" + std::to_string(rep));
      const DatasetSummary s = generator.run(w, dir);
      walls.push_back(s.wall_seconds);
      hours = s.total_audio_hours;
      std::filesystem::remove_all(dir);
    }
    std::sort(walls.begin(), walls.end());
    const std::size_t n = walls.size();
    const double median = (n % 2 == 1) ? walls[n / 2] : 0.5 * (walls[n / 2 - 1] + walls[n / 2]);
    rows.push_back(BenchmarkRow{w, median, median > 0.0 ? hours / (median / 60.0) : 0.0});
  }
  return rows;
}

void write_benchmark_csv(std::span<const BenchmarkRow> rows, std::ostream& out) {
  out << "workers,wall_s,hours_per_min\n";
  for (const BenchmarkRow& r : rows) {
    char line[96];
    std::snprintf(line, sizeof(line), "%d,%.3f,%.3f", r.workers, r.wall_s, r.hours_per_min);
    out << line << '\n';
  }
}

int physical_core_count() {
  std::ifstream in("/proc/cpuinfo");
  std::set<std::pair<std::string, std::string>> cores;
  std::string line;
  std::string physical_id;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key = line.substr(0, colon);
    key.erase(key.find_last_not_of(" \t") + 1);
    const std::string value = line.substr(colon + 1);
    if (key == "physical id") {
      physical_id = value;
    } else if (key == "core id") {
      cores.emplace(physical_id, value);
    }
  }
  if (!cores.empty()) return static_cast<int>(cores.size());
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace convsim
