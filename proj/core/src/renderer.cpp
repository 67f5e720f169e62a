#include "convsim/renderer.hpp"

#include <algorithm>
#include <cmath>

#include "convsim/error.hpp"
#include "convsim/wav.hpp"

namespace convsim {

SourceAudioStore::SourceAudioStore(const std::vector<SpeakerPool>& pools, int sample_rate)
    : sample_rate_(sample_rate) {
  for (const SpeakerPool& pool : pools) {
    for (const SourceUtterance& u : pool.utterances) {
      if (by_id_.count(u.id) != 0) {
        throw ValidationError("duplicate source utterance id '" + u.id + "'");
      }
      try {
        by_id_.emplace(u.id, read_wav_segment(u.audio.path, u.audio.offset, u.audio.duration, sample_rate));
      } catch (const Error& e) {
        throw IoError("source '" + u.id + "': " + e.what());
      }
    }
  }
}

const std::vector<double>& SourceAudioStore::samples_for(const std::string& source_id) const {
  auto it = by_id_.find(source_id);
  if (it == by_id_.end()) throw ValidationError("unknown source utterance id '" + source_id + "'");
  return it->second;
}

NoisePool::NoisePool(const std::filesystem::path& manifest, int sample_rate) : sample_rate_(sample_rate) {
  for (const std::filesystem::path& p : load_noise_manifest(manifest)) {
    WavData wav = read_wav(p);
    if (wav.sample_rate != sample_rate) {
      throw ValidationError("noise '" + p.string() + "' is " + std::to_string(wav.sample_rate) +
                            " Hz, expected " + std::to_string(sample_rate));
    }
    files_.push_back(Entry{p, std::move(wav.samples)});
  }
  if (files_.empty()) throw ValidationError("noise manifest '" + manifest.string() + "' lists no files");
}

double NoisePool::duration_at(std::size_t i) const {
  return static_cast<double>(files_[i].samples.size()) / sample_rate_;
}

RenderResult render(const ConversationPlan& plan,
                    const AcousticConfig& acoustic,
                    const SourceAudioStore& sources,
                    const NoisePool& noise,
                    Rng& rng) {
  if (plan.placements.empty()) throw ValidationError("plan '" + plan.session_id + "' has no placements");
  const int fs = sources.sample_rate();

  const SessionAcoustics session = sample_session_acoustics(acoustic, plan.num_speakers, rng);

  // Speaker -> source position index, by first appearance in the plan.
  std::map<std::string, std::size_t> speaker_slot;
  std::map<std::string, ImpulseResponse> rirs;
  if (session.reverb) {
    for (const PlacedUtterance& p : plan.placements) {
      auto [it, fresh] = speaker_slot.emplace(p.speaker_id, speaker_slot.size());
      if (!fresh) continue;
      if (it->second >= session.sources.size()) {
        throw ValidationError("plan '" + plan.session_id + "' uses more speakers than planned");
      }
      rirs.emplace(p.speaker_id, image_method_rir(session.room, session.sources[it->second], session.mic, fs));
    }
  }

  double frontier = 0.0;
  for (const PlacedUtterance& p : plan.placements) frontier = std::max(frontier, p.onset + p.duration);
  std::size_t total = static_cast<std::size_t>(std::ceil(frontier * fs));

  struct Contribution {
    std::size_t start;
    std::vector<double> samples;
  };
  std::vector<Contribution> contributions;
  contributions.reserve(plan.placements.size());
  for (const PlacedUtterance& p : plan.placements) {
    std::vector<double> wet = apply_gain(sources.samples_for(p.source_id), p.gain_db);
    if (session.reverb) wet = convolve(wet, rirs.at(p.speaker_id), fs);
    const std::size_t start = static_cast<std::size_t>(std::llround(p.onset * fs));
    total = std::max(total, start + wet.size());
    contributions.push_back(Contribution{start, std::move(wet)});
  }

  std::vector<double> mix(total, 0.0);
  for (const Contribution& c : contributions) {
    for (std::size_t k = 0; k < c.samples.size(); ++k) mix[c.start + k] += c.samples[k];
  }

  if (session.noise) {
    const std::size_t pick = rng.next_index(noise.size());
    NoiseEvent ev;
    ev.noise_ref = AudioRef{noise.path_at(pick), 0.0, noise.duration_at(pick)};
    ev.snr_db = session.snr_db;
    ev.onset = 0.0;
    ev.loop = true;
    const std::vector<double>& picked = noise.samples_at(pick);
    mix = mix_noise(mix, fs, std::span<const NoiseEvent>(&ev, 1),
                    [&picked](const AudioRef&) { return picked; }, rng);
  }

  RenderResult result;
  result.peak_scale = 1.0;
  double peak = 0.0;
  for (double v : mix) peak = std::max(peak, std::abs(v));
  if (peak > 0.99) {
    result.peak_scale = 0.99 / peak;
    for (double& v : mix) v *= result.peak_scale;
  }

  result.samples = std::move(mix);
  result.sample_rate = fs;
  result.manifest = plan_to_manifest(plan, fs);
  result.manifest.duration = static_cast<double>(result.samples.size()) / fs;
  return result;
}

}  // namespace convsim
