// convsim: generate long-form multi-talker conversations with exact
// annotations. Subcommands: fit, simulate, stats, bench, rir.
//
// Exit codes: 0 success, 1 runtime failure after generation starts,
// 2 usage/config/input errors.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "convsim/acoustics.hpp"
#include "convsim/config.hpp"
#include "convsim/corpus_io.hpp"
#include "convsim/error.hpp"
#include "convsim/pipeline.hpp"
#include "convsim/stats.hpp"
#include "convsim/turntaking.hpp"
#include "convsim/wav.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::vector<std::vector<convsim::TransitionEvent>> classify_sessions(
    const std::vector<convsim::SessionManifest>& sessions, double bc_max_duration) {
  std::vector<std::vector<convsim::TransitionEvent>> sequences;
  for (const convsim::SessionManifest& m : sessions) {
    std::vector<convsim::TimelineEntry> timeline;
    timeline.reserve(m.supervisions.size());
    for (const convsim::Supervision& s : m.supervisions) {
      timeline.push_back(convsim::TimelineEntry{s.speaker_id, s.onset, s.onset + s.duration});
    }
    sequences.push_back(convsim::classify_transitions(timeline, bc_max_duration));
  }
  return sequences;
}

int cmd_fit(const std::string& annotations, const std::string& format, const std::string& out_path,
            double bc_max_duration, const std::string& mode_name) {
  try {
    const convsim::TurnTakingMode mode =
        mode_name == "markov" ? convsim::TurnTakingMode::Markov : convsim::TurnTakingMode::Categorical;
    std::vector<convsim::SessionManifest> sessions;
    if (format == "rttm") {
      sessions = convsim::load_rttm(annotations);
    } else {
      sessions = convsim::load_session_manifest(annotations);
    }
    if (sessions.empty()) throw convsim::ValidationError("'" + annotations + "' holds no sessions");

    const auto sequences = classify_sessions(sessions, bc_max_duration);
    convsim::TurnTakingParams params = convsim::fit_params(sequences, mode);
    params.bc_max_duration = bc_max_duration;
    convsim::save_params_file(out_path, params);

    std::array<long long, convsim::kNumTransitionTypes> hist{};
    long long total = 0;
    for (const auto& seq : sequences) {
      for (const convsim::TransitionEvent& ev : seq) {
        ++hist[static_cast<std::size_t>(ev.type)];
        ++total;
      }
    }
    std::printf("fitted %s model from %zu sessions (%lld transitions)\n",
                mode == convsim::TurnTakingMode::Markov ? "markov" : "categorical", sessions.size(), total);
    for (convsim::TransitionType t : convsim::kAllTransitionTypes) {
      std::printf("  %s %lld", std::string(convsim::to_string(t)).c_str(),
                  hist[static_cast<std::size_t>(t)]);
    }
    std::printf("\n  p = [%.4f, %.4f, %.4f, %.4f]\n", params.prior[0], params.prior[1], params.prior[2],
                params.prior[3]);
    std::printf("  beta_th = %.4f  beta_ts = %.4f  beta_ir = %.4f\n", params.beta_th, params.beta_ts,
                params.beta_ir);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fit: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_simulate(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
                 std::optional<double> boost_factor) {
  std::optional<convsim::DatasetGenerator> generator;
  try {
    convsim::SimulationConfig config = convsim::load_simulation_config(config_path, overrides);
    if (boost_factor) config.turntaking = convsim::boost_overlap(config.turntaking, *boost_factor);
    generator.emplace(config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "simulate: %s\n", e.what());
    return kExitUsage;
  }
  try {
    const convsim::DatasetSummary s = generator->run();
    std::printf("generated %d sessions, %lld supervisions, %.3f h audio in %.2f s\n", s.num_sessions,
                s.num_supervisions, s.total_audio_hours, s.wall_seconds);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "simulate: %s\n", e.what());
    return kExitRuntime;
  }
}

int cmd_stats(const std::string& manifest_path, double bc_max_duration, bool as_json) {
  try {
    const std::vector<convsim::SessionManifest> sessions = convsim::load_session_manifest(manifest_path);
    if (sessions.empty()) throw convsim::ValidationError("'" + manifest_path + "' holds no sessions");
    const convsim::StatsReport report = convsim::compute_stats(sessions, bc_max_duration);
    if (as_json) {
      std::cout << convsim::stats_report_to_json(report) << "\n";
    } else {
      convsim::print_stats_table(report, std::cout);
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "stats: %s\n", e.what());
    return kExitUsage;
  }
}

int cmd_bench(const std::string& config_path, const std::vector<std::pair<std::string, std::string>>& overrides,
              const std::vector<int>& workers, int repetitions, const std::string& csv_path) {
  std::optional<convsim::DatasetGenerator> generator;
  std::filesystem::path scratch;
  try {
    const convsim::SimulationConfig config = convsim::load_simulation_config(config_path, overrides);
    scratch = config.output_dir / "bench";
    generator.emplace(config);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return kExitUsage;
  }
  try {
    const std::vector<convsim::BenchmarkRow> rows =
        convsim::run_benchmark(*generator, workers, repetitions, scratch);
    if (csv_path.empty()) {
      convsim::write_benchmark_csv(rows, std::cout);
    } else {
      std::ofstream out(csv_path);
      if (!out) throw convsim::IoError("cannot open '" + csv_path + "'");
      convsim::write_benchmark_csv(rows, out);
      std::printf("wrote %s\n", csv_path.c_str());
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bench: %s\n", e.what());
    return kExitRuntime;
  }
}

int cmd_rir(const std::vector<double>& room, const std::vector<double>& src, const std::vector<double>& mic,
            double absorption, int max_order, int rate, const std::string& out_path) {
  try {
    convsim::RoomSpec spec;
    spec.dimensions = {room[0], room[1], room[2]};
    spec.absorption = absorption;
    spec.max_order = max_order;
    const convsim::ImpulseResponse rir = convsim::image_method_rir(
        spec, {src[0], src[1], src[2]}, {mic[0], mic[1], mic[2]}, rate);
    convsim::write_wav(out_path, rir.taps, rate, convsim::WavEncoding::float32);
    std::printf("wrote %s (%zu taps)\n", out_path.c_str(), rir.taps.size());
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rir: %s\n", e.what());
    return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conversation simulator: turn-taking mixtures with exact annotations"};
  app.require_subcommand(1);

  // fit
  std::string fit_input, fit_format = "rttm", fit_out = "fitted.params", fit_mode = "categorical";
  double fit_bc_max = 1.0;
  CLI::App* fit = app.add_subcommand("fit", "fit turn-taking parameters from annotations");
  fit->add_option("annotations", fit_input, "rttm or session-manifest file")->required();
  fit->add_option("--format", fit_format, "annotation format")->check(CLI::IsMember({"rttm", "session-manifest"}));
  fit->add_option("--out", fit_out, "output params file");
  fit->add_option("--mode", fit_mode, "model mode")->check(CLI::IsMember({"categorical", "markov"}));
  fit->add_option("--bc-max-duration", fit_bc_max, "backchannel duration threshold, seconds");

  // simulate
  std::string sim_config;
  std::optional<double> sim_boost;
  std::optional<int> sim_workers, sim_num;
  std::optional<std::uint64_t> sim_seed;
  std::vector<std::string> sim_sets;
  CLI::App* simulate = app.add_subcommand("simulate", "generate a dataset from a config file");
  simulate->add_option("config", sim_config, "simulation config file")->required();
  simulate->add_option("--workers", sim_workers, "override num_workers");
  simulate->add_option("--seed", sim_seed, "override seed");
  simulate->add_option("--num-conversations", sim_num, "override num_conversations");
  simulate->add_option("--boost-overlap", sim_boost, "multiply IR/BC probabilities and renormalize");
  simulate->add_option("--set", sim_sets, "override any config key (key=value)");

  // stats
  std::string stats_input;
  double stats_bc_max = 1.0;
  bool stats_json = false;
  CLI::App* stats = app.add_subcommand("stats", "report statistics of a session manifest");
  stats->add_option("manifest", stats_input, "session manifest (jsonl)")->required();
  stats->add_option("--bc-max-duration", stats_bc_max, "backchannel duration threshold, seconds");
  stats->add_flag("--json", stats_json, "machine-readable output");

  // bench
  std::string bench_config, bench_csv;
  std::vector<int> bench_workers{1};
  int bench_reps = 1;
  std::vector<std::string> bench_sets;
  CLI::App* bench = app.add_subcommand("bench", "measure generation throughput per worker count");
  bench->add_option("config", bench_config, "simulation config file")->required();
  bench->add_option("--workers", bench_workers, "worker counts to measure")->delimiter(',');
  bench->add_option("--reps", bench_reps, "repetitions per count (median wall time)");
  bench->add_option("--csv", bench_csv, "write CSV here instead of stdout");
  bench->add_option("--set", bench_sets, "override any config key (key=value)");

  // rir
  std::vector<double> rir_room, rir_src, rir_mic;
  double rir_absorption = 0.5;
  int rir_order = 6, rir_rate = 16000;
  std::string rir_out = "rir.wav";
  CLI::App* rir = app.add_subcommand("rir", "compute a shoebox impulse response");
  rir->add_option("--room", rir_room, "room dimensions, meters")->delimiter(',')->expected(3)->required();
  rir->add_option("--src", rir_src, "source position, meters")->delimiter(',')->expected(3)->required();
  rir->add_option("--mic", rir_mic, "microphone position, meters")->delimiter(',')->expected(3)->required();
  rir->add_option("--absorption", rir_absorption, "wall absorption in (0,1)");
  rir->add_option("--max-order", rir_order, "maximum reflection order");
  rir->add_option("--rate", rir_rate, "sample rate, Hz");
  rir->add_option("--out", rir_out, "output wav (float32)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  auto parse_sets = [](const std::vector<std::string>& sets) {
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const std::string& kv : sets) {
      const std::size_t eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw convsim::ParseError("--set expects key=value, got '" + kv + "'");
      }
      overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return overrides;
  };

  if (*fit) return cmd_fit(fit_input, fit_format, fit_out, fit_bc_max, fit_mode);
  if (*simulate) {
    std::vector<std::pair<std::string, std::string>> overrides;
    try {
      overrides = parse_sets(sim_sets);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "simulate: %s\n", e.what());
      return kExitUsage;
    }
    if (sim_workers) overrides.emplace_back("num_workers", std::to_string(*sim_workers));
    if (sim_seed) overrides.emplace_back("seed", std::to_string(*sim_seed));
    if (sim_num) overrides.emplace_back("num_conversations", std::to_string(*sim_num));
    return cmd_simulate(sim_config, overrides, sim_boost);
  }
  if (*stats) return cmd_stats(stats_input, stats_bc_max, stats_json);
  if (*bench) {
    std::vector<std::pair<std::string, std::string>> overrides;
    try {
      overrides = parse_sets(bench_sets);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "bench: %s\n", e.what());
      return kExitUsage;
    }
    return cmd_bench(bench_config, overrides, bench_workers, bench_reps, bench_csv);
  }
  if (*rir) return cmd_rir(rir_room, rir_src, rir_mic, rir_absorption, rir_order, rir_rate, rir_out);
  return kExitUsage;
}
