#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "convsim/acoustics.hpp"
#include "convsim/corpus_io.hpp"
#include "convsim/planner.hpp"
#include "convsim/rng.hpp"

namespace convsim {

// Preloads every referenced seed segment at the configured rate, so lookups
// are read-only and safe from concurrent workers.
class SourceAudioStore {
 public:
  SourceAudioStore(const std::vector<SpeakerPool>& pools, int sample_rate);

  const std::vector<double>& samples_for(const std::string& source_id) const;
  int sample_rate() const { return sample_rate_; }

 private:
  std::map<std::string, std::vector<double>> by_id_;
  int sample_rate_ = 0;
};

// All noise recordings listed in a noise manifest, fully decoded.
class NoisePool {
 public:
  NoisePool() = default;
  NoisePool(const std::filesystem::path& manifest, int sample_rate);

  bool empty() const { return files_.empty(); }
  std::size_t size() const { return files_.size(); }
  const std::filesystem::path& path_at(std::size_t i) const { return files_[i].path; }
  const std::vector<double>& samples_at(std::size_t i) const { return files_[i].samples; }
  double duration_at(std::size_t i) const;

 private:
  struct Entry {
    std::filesystem::path path;
    std::vector<double> samples;
  };
  std::vector<Entry> files_;
  int sample_rate_ = 0;
};

struct RenderResult {
  std::vector<double> samples;
  int sample_rate = 0;
  SessionManifest manifest;  // audio_path left empty for the caller to fill
  double peak_scale = 1.0;
};

// Mixes a plan into a waveform: per-placement gain, optional per-speaker RIR,
// 64-bit accumulation at round(onset*fs), optional looped noise at the
// sampled session SNR, then a global rescale if the peak exceeds 0.99.
// Supervisions keep the plan's dry onsets/durations; reverb tails only extend
// the audio. Rng draw order is fixed (docs/determinism.md): session
// acoustics, then noise file choice, then noise rotation.
RenderResult render(const ConversationPlan& plan,
                    const AcousticConfig& acoustic,
                    const SourceAudioStore& sources,
                    const NoisePool& noise,
                    Rng& rng);

}  // namespace convsim
