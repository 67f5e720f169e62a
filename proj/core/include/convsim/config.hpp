#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "convsim/acoustics.hpp"
#include "convsim/rng.hpp"
#include "convsim/turntaking.hpp"

namespace convsim {

// Parsed simulation config (key = value file; see docs/file_formats.md).
// Relative paths are resolved against the config file's directory.
struct SimulationConfig {
  std::uint64_t seed = 0;
  int num_conversations = 0;
  double target_duration = 0.0;
  std::vector<std::pair<int, double>> num_speakers_distribution;  // (count, weight)
  TurnTakingParams turntaking;
  AcousticConfig acoustic;
  std::filesystem::path source_manifest;
  std::filesystem::path output_dir;
  int num_workers = 1;
  int sample_rate = 16000;
  bool split_pauses = true;
  double min_pause = 0.3;
  std::string session_prefix = "sess";

  void validate() const;
};

// Loads and validates a config file. `overrides` are applied before reading
// (CLI --set key=value); unknown keys anywhere are an error. Turn-taking
// parameters come from either `turntaking_params = <file>` or inline
// `turntaking.*` keys, never both.
SimulationConfig load_simulation_config(const std::filesystem::path& path,
                                        const std::vector<std::pair<std::string, std::string>>& overrides = {});

// Weighted draw from the (count, weight) distribution; one uniform variate.
int sample_num_speakers(const std::vector<std::pair<int, double>>& distribution, Rng& rng);

}  // namespace convsim
