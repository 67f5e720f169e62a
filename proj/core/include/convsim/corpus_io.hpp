#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace convsim {

struct AudioRef {
  std::filesystem::path path;
  double offset = 0.0;    // seconds into the file
  double duration = 0.0;  // seconds

  bool operator==(const AudioRef&) const = default;
};

struct Word {
  std::string token;
  double start = 0.0;  // seconds relative to utterance start
  double end = 0.0;

  bool operator==(const Word&) const = default;
};

struct SourceUtterance {
  std::string id;
  std::string speaker_id;
  AudioRef audio;
  int sample_rate = 0;
  std::vector<Word> words;  // empty means no alignment available
  std::string text;         // empty means no transcript

  // Throws ValidationError naming the utterance id on any violated invariant:
  // positive duration, non-negative offset, words sorted and non-overlapping
  // within the utterance span (1 ms slack at the edges).
  void validate() const;

  bool operator==(const SourceUtterance&) const = default;
};

struct SpeakerPool {
  std::string speaker_id;
  std::vector<SourceUtterance> utterances;
};

struct Supervision {
  std::string speaker_id;
  double onset = 0.0;
  double duration = 0.0;
  std::string source_utterance_id;
  std::string transition;  // "TH", "TS", "IR" or "BC"
  std::string text;

  bool operator==(const Supervision&) const = default;
};

struct SessionManifest {
  std::string session_id;
  std::string audio_path;
  double duration = 0.0;
  int sample_rate = 0;
  std::vector<Supervision> supervisions;

  // Checks supervision spans against the session duration (1 ms slack) and
  // rejects same-speaker overlap.
  void validate() const;

  bool operator==(const SessionManifest&) const = default;
};

// JSON-lines utterance manifest. Utterances are grouped by speaker in first
// appearance order; pool-internal order follows the file. Every record is
// validated. Parse failures carry the 1-based line number.
std::vector<SpeakerPool> load_utterance_manifest(const std::filesystem::path& path);
void write_utterance_manifest(const std::filesystem::path& path, const std::vector<SpeakerPool>& pools);

// JSON-lines session manifest (one session per line).
std::vector<SessionManifest> load_session_manifest(const std::filesystem::path& path);
void write_session_manifest(const std::filesystem::path& path, const std::vector<SessionManifest>& sessions);
std::string session_to_json_line(const SessionManifest& session);
SessionManifest session_from_json_line(const std::string& line);

// Splits an aligned utterance at every inter-word silence of at least
// min_pause seconds. Cut point is the gap midpoint; padding kept around the
// voiced span of each piece is capped at min_pause/2 per side. Utterances
// without alignments pass through unchanged.
std::vector<SourceUtterance> split_at_pauses(const SourceUtterance& utt, double min_pause);

// Noise manifest: plain text, one wav path per line, '#' comments allowed.
// Relative paths resolve against the manifest's directory.
std::vector<std::filesystem::path> load_noise_manifest(const std::filesystem::path& path);

// Diarization ground truth, one line per supervision:
//   SPEAKER <session_id> 1 <onset> <duration> <NA> <NA> <speaker_id> <NA> <NA>
// with onset/duration at exactly 3 decimals, sorted by onset then speaker.
void write_rttm(const SessionManifest& manifest, std::ostream& out);
void write_rttm_file(const SessionManifest& manifest, const std::filesystem::path& path);

// Reads RTTM back into manifests grouped by session id (first-appearance
// order). RTTM carries only spans, so source ids and texts are empty, every
// transition is the placeholder "TH", and duration is the last span end.
std::vector<SessionManifest> load_rttm(const std::filesystem::path& path);

}  // namespace convsim
