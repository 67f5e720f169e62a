#include "convsim/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "convsim/dsp.hpp"
#include "convsim/error.hpp"

namespace convsim {
namespace {

double distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void check_inside(const RoomSpec& room, const std::array<double, 3>& p, const char* what) {
  for (int a = 0; a < 3; ++a) {
    if (!(p[a] > 0.0) || !(p[a] < room.dimensions[a])) {
      throw ValidationError(std::string(what) + " lies outside the room");
    }
  }
}

// Image coordinate along one axis: reflections place the source at
// m*L + s for even m and m*L + (L - s) for odd m; |m| counts the bounces.
double image_coord(int m, double length, double source) {
  const double base = static_cast<double>(m) * length;
  return (m % 2 == 0) ? base + source : base + length - source;
}

}  // namespace

void Range::validate(const std::string& what) const {
  if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
    throw ValidationError(what + ": invalid range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
}

void AcousticConfig::validate() const {
  if (reverb) {
    room_x.validate("room_x");
    room_y.validate("room_y");
    room_z.validate("room_z");
    for (const Range& r : {room_x, room_y, room_z}) {
      if (r.lo <= 2.0 * kWallMargin) {
        throw ValidationError("room dimensions must exceed " + std::to_string(2.0 * kWallMargin) +
                              " m to leave space inside the wall margin");
      }
    }
    absorption.validate("absorption");
    if (absorption.lo <= 0.0 || absorption.hi >= 1.0) {
      throw ValidationError("absorption range must lie strictly inside (0, 1)");
    }
    if (max_order < 0) throw ValidationError("max_order must be non-negative");
  }
  if (noise) {
    snr_db.validate("snr_db");
    if (noise_manifest.empty()) throw ValidationError("noise is enabled but no noise_manifest is set");
  }
  gain_db.validate("gain_db");
}

SessionAcoustics sample_session_acoustics(const AcousticConfig& config, int num_speakers, Rng& rng) {
  SessionAcoustics out;
  out.reverb = config.reverb;
  out.noise = config.noise;
  if (config.reverb) {
    out.room.dimensions = {config.room_x.sample(rng), config.room_y.sample(rng), config.room_z.sample(rng)};
    out.room.absorption = config.absorption.sample(rng);
    out.room.max_order = config.max_order;
    auto place = [&] {
      std::array<double, 3> p;
      for (int a = 0; a < 3; ++a) {
        p[a] = rng.uniform(kWallMargin, out.room.dimensions[a] - kWallMargin);
      }
      return p;
    };
    out.mic = place();
    for (int s = 0; s < num_speakers; ++s) {
      std::array<double, 3> p{};
      bool ok = false;
      for (int attempt = 0; attempt < 10000; ++attempt) {
        p = place();
        if (distance(p, out.mic) >= kMinSourceMicDistance) {
          ok = true;
          break;
        }
      }
      if (!ok) throw ValidationError("could not place a source away from the microphone; room too small");
      out.sources.push_back(p);
    }
  }
  if (config.noise) out.snr_db = config.snr_db.sample(rng);
  return out;
}

ImpulseResponse image_method_rir(const RoomSpec& room,
                                 const std::array<double, 3>& source,
                                 const std::array<double, 3>& mic,
                                 int sample_rate) {
  for (int a = 0; a < 3; ++a) {
    if (!(room.dimensions[a] > 0.0)) throw ValidationError("room dimensions must be positive");
  }
  if (!(room.absorption > 0.0) || !(room.absorption < 1.0)) {
    throw ValidationError("absorption must lie strictly inside (0, 1)");
  }
  if (room.max_order < 0) throw ValidationError("max_order must be non-negative");
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  check_inside(room, source, "source");
  check_inside(room, mic, "microphone");
  if (distance(source, mic) < 1e-6) throw ValidationError("source and microphone coincide");

  struct Tap {
    long long delay;
    double amplitude;
  };
  std::vector<Tap> raw;
  const int n = room.max_order;
  for (int mx = -n; mx <= n; ++mx) {
    const int rest_x = n - std::abs(mx);
    for (int my = -rest_x; my <= rest_x; ++my) {
      const int rest_y = rest_x - std::abs(my);
      for (int mz = -rest_y; mz <= rest_y; ++mz) {
        const std::array<double, 3> img{image_coord(mx, room.dimensions[0], source[0]),
                                        image_coord(my, room.dimensions[1], source[1]),
                                        image_coord(mz, room.dimensions[2], source[2])};
        const double d = distance(img, mic);
        const int order = std::abs(mx) + std::abs(my) + std::abs(mz);
        const double amp = std::pow(1.0 - room.absorption, order) / (4.0 * std::numbers::pi * d);
        const long long delay = std::llround(d / room.speed_of_sound * sample_rate);
        raw.push_back(Tap{delay, amp});
      }
    }
  }
  long long max_delay = 0;
  for (const Tap& t : raw) max_delay = std::max(max_delay, t.delay);
  ImpulseResponse rir;
  rir.sample_rate = sample_rate;
  rir.taps.assign(static_cast<std::size_t>(max_delay) + 1, 0.0);
  for (const Tap& t : raw) rir.taps[static_cast<std::size_t>(t.delay)] += t.amplitude;
  return rir;
}

std::vector<double> convolve(std::span<const double> signal, const ImpulseResponse& rir, int signal_rate) {
  if (signal_rate != rir.sample_rate) {
    throw ValidationError("sample rate mismatch: signal " + std::to_string(signal_rate) + " Hz vs impulse response " +
                          std::to_string(rir.sample_rate) + " Hz");
  }
  if (rir.taps.empty()) throw ValidationError("impulse response has no taps");
  if (signal.empty()) return {};
  if (rir.taps.size() <= 128) return convolve_direct(signal, rir.taps);
  return convolve_fft(signal, rir.taps);
}

std::vector<double> mix_noise(std::span<const double> speech,
                              int sample_rate,
                              std::span<const NoiseEvent> events,
                              const NoiseLoader& loader,
                              Rng& rng) {
  if (sample_rate <= 0) throw ValidationError("sample rate must be positive");
  std::vector<double> out(speech.begin(), speech.end());
  const std::size_t n = out.size();
  for (const NoiseEvent& ev : events) {
    if (!std::isfinite(ev.snr_db)) throw ValidationError("snr_db must be finite");
    const std::vector<double> noise = loader(ev.noise_ref);
    if (noise.empty()) throw ValidationError("noise '" + ev.noise_ref.path.string() + "' is empty");
    const long long onset_idx = std::llround(ev.onset * sample_rate);
    if (onset_idx < 0) throw ValidationError("noise onset is negative");
    const std::size_t begin = static_cast<std::size_t>(onset_idx);
    if (begin >= n) throw ValidationError("noise '" + ev.noise_ref.path.string() + "' starts past the session end");
    const std::size_t span = ev.loop ? n - begin : std::min(noise.size(), n - begin);

    // The scaled tile is computed against speech power over the same span.
    const std::size_t rotation = ev.loop ? rng.next_index(noise.size()) : 0;
    double p_speech = 0.0;
    double p_noise = 0.0;
    for (std::size_t k = 0; k < span; ++k) {
      const double s = speech[begin + k];
      const double v = noise[(rotation + k) % noise.size()];
      p_speech += s * s;
      p_noise += v * v;
    }
    p_speech /= static_cast<double>(span);
    p_noise /= static_cast<double>(span);
    if (p_speech <= 0.0) throw ValidationError("speech power is zero over the noise span");
    if (p_noise <= 0.0) throw ValidationError("noise '" + ev.noise_ref.path.string() + "' has zero power over its span");

    const double scale = std::sqrt(p_speech * std::pow(10.0, -ev.snr_db / 10.0) / p_noise);
    for (std::size_t k = 0; k < span; ++k) {
      out[begin + k] += scale * noise[(rotation + k) % noise.size()];
    }
  }
  return out;
}

std::vector<double> apply_gain(std::span<const double> signal, double gain_db) {
  if (!std::isfinite(gain_db)) throw ValidationError("gain_db must be finite");
  const double factor = std::pow(10.0, gain_db / 20.0);
  std::vector<double> out(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) out[i] = signal[i] * factor;
  return out;
}

}  // namespace convsim
