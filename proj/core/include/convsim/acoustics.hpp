#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "convsim/corpus_io.hpp"
#include "convsim/rng.hpp"

namespace convsim {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double sample(Rng& rng) const { return rng.uniform(lo, hi); }
  void validate(const std::string& what) const;
};

struct RoomSpec {
  std::array<double, 3> dimensions{};  // meters
  double absorption = 0.5;             // in (0,1)
  int max_order = 6;
  double speed_of_sound = 343.0;
};

struct ImpulseResponse {
  int sample_rate = 0;
  std::vector<double> taps;
};

struct NoiseEvent {
  AudioRef noise_ref;
  double snr_db = 0.0;  // relative to speech power over the active span
  double onset = 0.0;   // seconds into the session
  bool loop = false;
};

// Acoustic block of the simulation config. Reverb and noise switch on
// independently; ranges are sampled once per session.
struct AcousticConfig {
  bool reverb = false;
  bool noise = false;
  Range room_x{3.0, 8.0};
  Range room_y{3.0, 8.0};
  Range room_z{2.2, 3.5};
  Range absorption{0.2, 0.8};
  int max_order = 6;
  Range snr_db{5.0, 20.0};
  Range gain_db{0.0, 0.0};
  std::filesystem::path noise_manifest;

  void validate() const;
};

// Positions honor a 0.5 m wall margin and a 0.3 m source-mic minimum.
inline constexpr double kWallMargin = 0.5;
inline constexpr double kMinSourceMicDistance = 0.3;

struct SessionAcoustics {
  bool reverb = false;
  bool noise = false;
  RoomSpec room;
  std::array<double, 3> mic{};
  std::vector<std::array<double, 3>> sources;  // one per speaker
  double snr_db = 0.0;
};

// Draws per-session room geometry, positions and SNR from the config ranges.
// Draw order (documented in docs/determinism.md): room dims, absorption,
// mic, then one position per speaker, then SNR; blocks are skipped entirely
// when the corresponding switch is off.
SessionAcoustics sample_session_acoustics(const AcousticConfig& config, int num_speakers, Rng& rng);

// Shoebox image-source model: every image of order <= max_order contributes
// a tap at round(distance/c*fs) with amplitude (1-absorption)^order/(4*pi*d).
ImpulseResponse image_method_rir(const RoomSpec& room,
                                 const std::array<double, 3>& source,
                                 const std::array<double, 3>& mic,
                                 int sample_rate);

// Full linear convolution, length = len(signal) + len(taps) - 1. Direct form
// for kernels up to 128 taps, FFT above; the two agree within 1e-6.
std::vector<double> convolve(std::span<const double> signal, const ImpulseResponse& rir, int signal_rate);

using NoiseLoader = std::function<std::vector<double>(const AudioRef&)>;

// Adds each noise event at its onset, scaled so that over the noise's active
// span 10*log10(P_speech/P_noise) equals snr_db. Looped events tile the
// noise from a random rotation to the end of the session. The output has the
// same length as speech; speech itself is not modified.
std::vector<double> mix_noise(std::span<const double> speech,
                              int sample_rate,
                              std::span<const NoiseEvent> events,
                              const NoiseLoader& loader,
                              Rng& rng);

// Multiplies every sample by 10^(gain_db/20).
std::vector<double> apply_gain(std::span<const double> signal, double gain_db);

}  // namespace convsim
