#include "convsim/config.hpp"

#include "convsim/error.hpp"
#include "convsim/keyvalue.hpp"

namespace convsim {
namespace {

Range range_from(KeyValueConfig& cfg, const std::string& key, Range fallback) {
  if (!cfg.has(key)) return fallback;
  auto v = cfg.get_double_array(key);
  if (v.size() != 2) throw ParseError("key '" + key + "' must be a [low, high] pair");
  return Range{v[0], v[1]};
}

}  // namespace

void SimulationConfig::validate() const {
  if (num_conversations < 0) throw ValidationError("num_conversations must be non-negative");
  if (!(target_duration > 0.0)) throw ValidationError("target_duration must be positive");
  if (num_workers < 1) throw ValidationError("num_workers must be at least 1");
  if (sample_rate <= 0) throw ValidationError("sample_rate must be positive");
  if (!(min_pause > 0.0)) throw ValidationError("min_pause must be positive");
  if (source_manifest.empty()) throw ValidationError("source_manifest is required");
  if (output_dir.empty()) throw ValidationError("output_dir is required");
  if (session_prefix.empty() || session_prefix.find('/') != std::string::npos) {
    throw ValidationError("session_prefix must be a non-empty name without '/'");
  }
  if (num_speakers_distribution.empty()) throw ValidationError("num_speakers must list at least one count");
  for (const auto& [count, weight] : num_speakers_distribution) {
    if (count < 1) throw ValidationError("speaker counts must be at least 1");
    if (!(weight > 0.0)) throw ValidationError("speaker count weights must be positive");
  }
  turntaking.validate();
  acoustic.validate();
}

SimulationConfig load_simulation_config(const std::filesystem::path& path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  KeyValueConfig cfg = KeyValueConfig::parse_file(path);
  for (const auto& [key, value] : overrides) cfg.set(key, value);

  SimulationConfig c;
  c.seed = cfg.get_uint64("seed", 0);
  c.num_conversations = static_cast<int>(cfg.get_int("num_conversations"));
  c.target_duration = cfg.get_double("target_duration");
  c.num_workers = static_cast<int>(cfg.get_int("num_workers", 1));
  c.sample_rate = static_cast<int>(cfg.get_int("sample_rate", 16000));
  c.split_pauses = cfg.get_bool("split_at_pauses", true);
  c.min_pause = cfg.get_double("min_pause", 0.3);
  c.session_prefix = cfg.get_string("session_prefix", "sess");
  c.source_manifest = cfg.get_path("source_manifest");
  c.output_dir = cfg.get_path("output_dir");

  auto counts = cfg.get_double_array("num_speakers");
  std::vector<double> weights(counts.size(), 1.0);
  if (cfg.has("num_speakers_weights")) {
    weights = cfg.get_double_array("num_speakers_weights");
    if (weights.size() != counts.size()) {
      throw ParseError(path.string() + ": num_speakers_weights must match num_speakers in length");
    }
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const int n = static_cast<int>(counts[i]);
    if (static_cast<double>(n) != counts[i]) {
      throw ParseError(path.string() + ": num_speakers entries must be integers");
    }
    c.num_speakers_distribution.emplace_back(n, weights[i]);
  }

  const bool has_file = cfg.has("turntaking_params");
  const bool has_inline = cfg.has("turntaking.p");
  if (has_file && has_inline) {
    throw ParseError(path.string() + ": set either turntaking_params or inline turntaking.* keys, not both");
  }
  if (has_file) {
    c.turntaking = load_params_file(cfg.get_path("turntaking_params"));
  } else if (has_inline) {
    c.turntaking = params_from_keyvalue(cfg, "turntaking.", path.string());
  } else {
    throw ParseError(path.string() + ": no turn-taking parameters (turntaking_params or turntaking.*)");
  }

  c.acoustic.reverb = cfg.get_bool("acoustic.reverb", false);
  c.acoustic.noise = cfg.get_bool("acoustic.noise", false);
  c.acoustic.room_x = range_from(cfg, "acoustic.room_x", c.acoustic.room_x);
  c.acoustic.room_y = range_from(cfg, "acoustic.room_y", c.acoustic.room_y);
  c.acoustic.room_z = range_from(cfg, "acoustic.room_z", c.acoustic.room_z);
  c.acoustic.absorption = range_from(cfg, "acoustic.absorption", c.acoustic.absorption);
  c.acoustic.max_order = static_cast<int>(cfg.get_int("acoustic.max_order", 6));
  c.acoustic.snr_db = range_from(cfg, "acoustic.snr_db", c.acoustic.snr_db);
  c.acoustic.gain_db = range_from(cfg, "acoustic.gain_db", c.acoustic.gain_db);
  if (cfg.has("acoustic.noise_manifest")) {
    c.acoustic.noise_manifest = cfg.get_path("acoustic.noise_manifest");
  }

  cfg.reject_unused();
  c.validate();
  return c;
}

int sample_num_speakers(const std::vector<std::pair<int, double>>& distribution, Rng& rng) {
  if (distribution.empty()) throw ValidationError("empty speaker-count distribution");
  double total = 0.0;
  for (const auto& [count, weight] : distribution) total += weight;
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (const auto& [count, weight] : distribution) {
    cum += weight;
    if (u < cum) return count;
  }
  return distribution.back().first;
}

}  // namespace convsim
