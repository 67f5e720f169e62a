#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace convsim {

enum class WavEncoding { pcm16, float32 };

struct WavData {
  std::vector<double> samples;  // one channel, nominal range [-1, 1]
  int sample_rate = 0;
  int num_channels = 0;  // channel count of the source file
};

// Reads one channel of a RIFF/WAVE file. Supported encodings: 16-bit PCM and
// 32-bit IEEE float; anything else raises ParseError. PCM samples map to
// [-1, 1] with the asymmetric scale (negative / 32768, positive / 32767) so
// that read -> write -> read is bit-exact for every 16-bit code.
WavData read_wav(const std::filesystem::path& path, int channel = 0);

// Reads `duration` seconds starting at `offset` seconds without loading the
// whole file. The file's sample rate must equal `expected_rate` when
// expected_rate > 0. Short files raise ValidationError.
std::vector<double> read_wav_segment(const std::filesystem::path& path,
                                     double offset, double duration,
                                     int expected_rate, int channel = 0);

// Returns (sample_rate, num_frames) from the header alone.
std::pair<int, std::int64_t> probe_wav(const std::filesystem::path& path);

// Writes a mono WAV file. Samples are clamped to [-1, 1]; non-finite samples
// raise ValidationError.
void write_wav(const std::filesystem::path& path, std::span<const double> samples,
               int sample_rate, WavEncoding encoding = WavEncoding::pcm16);

}  // namespace convsim
