#include <doctest.h>

#include <filesystem>
#include <set>
#include <string>

#include "convsim/config.hpp"
#include "convsim/error.hpp"
#include "convsim/rng.hpp"
#include "convsim/turntaking.hpp"
#include "testutil.hpp"

using namespace convsim;
using testutil::TempDir;

namespace {

// Minimal complete config body; callers append or override via --set pairs.
std::string base_config() {
  return
      "seed = 7\n"
      "num_conversations = 3\n"
      "target_duration = 20.0\n"
      "num_speakers = [2]\n"
      "source_manifest = corpus/utterances.jsonl\n"
      "output_dir = out\n"
      "turntaking.p = [0.15, 0.21, 0.44, 0.20]\n"
      "turntaking.beta_th = 2.0\n"
      "turntaking.beta_ts = 2.0\n"
      "turntaking.beta_ir = 2.0\n";
}

}  // namespace

TEST_CASE("a complete config parses with defaults filled in") {
  TempDir tmp("cfg");
  const auto path = testutil::write_text(tmp / "sim.cfg", base_config());
  const SimulationConfig cfg = load_simulation_config(path);

  CHECK(cfg.seed == 7);
  CHECK(cfg.num_conversations == 3);
  CHECK(cfg.target_duration == 20.0);
  REQUIRE(cfg.num_speakers_distribution.size() == 1);
  CHECK(cfg.num_speakers_distribution[0].first == 2);
  CHECK(cfg.num_speakers_distribution[0].second == 1.0);
  CHECK(cfg.source_manifest == tmp.path() / "corpus/utterances.jsonl");
  CHECK(cfg.output_dir == tmp.path() / "out");
  CHECK(cfg.num_workers == 1);
  CHECK(cfg.sample_rate == 16000);
  CHECK(cfg.split_pauses == true);
  CHECK(cfg.min_pause == 0.3);
  CHECK(cfg.session_prefix == "sess");
  CHECK(cfg.turntaking.prior[2] == 0.44);
  CHECK(cfg.turntaking.bc_max_duration == 1.0);
  CHECK(!cfg.acoustic.reverb);
  CHECK(!cfg.acoustic.noise);
}

TEST_CASE("optional keys and acoustic ranges are honored") {
  TempDir tmp("cfg");
  const auto noise = testutil::build_noise(tmp.path());
  const auto path = testutil::write_text(
      tmp / "sim.cfg",
      base_config() +
          "num_workers = 4\n"
          "sample_rate = 8000\n"
          "split_at_pauses = false\n"
          "min_pause = 0.5\n"
          "session_prefix = meeting\n"
          "turntaking.bc_max_duration = 0.8\n"
          "acoustic.reverb = true\n"
          "acoustic.room_x = [4.0, 6.0]\n"
          "acoustic.room_y = [3.0, 5.0]\n"
          "acoustic.room_z = [2.4, 3.0]\n"
          "acoustic.absorption = [0.3, 0.7]\n"
          "acoustic.max_order = 4\n"
          "acoustic.noise = true\n"
          "acoustic.noise_manifest = noise/noise.txt\n"
          "acoustic.snr_db = [5.0, 15.0]\n"
          "acoustic.gain_db = [-2.0, 2.0]\n");
  const SimulationConfig cfg = load_simulation_config(path);
  CHECK(cfg.num_workers == 4);
  CHECK(cfg.sample_rate == 8000);
  CHECK(cfg.split_pauses == false);
  CHECK(cfg.min_pause == 0.5);
  CHECK(cfg.session_prefix == "meeting");
  CHECK(cfg.turntaking.bc_max_duration == 0.8);
  CHECK(cfg.acoustic.reverb);
  CHECK(cfg.acoustic.room_x.lo == 4.0);
  CHECK(cfg.acoustic.room_x.hi == 6.0);
  CHECK(cfg.acoustic.absorption.hi == 0.7);
  CHECK(cfg.acoustic.max_order == 4);
  CHECK(cfg.acoustic.noise);
  CHECK(cfg.acoustic.noise_manifest == noise);
  CHECK(cfg.acoustic.snr_db.lo == 5.0);
  CHECK(cfg.acoustic.gain_db.hi == 2.0);
}

TEST_CASE("speaker counts can carry weights") {
  TempDir tmp("cfg");
  const auto path = testutil::write_text(
      tmp / "sim.cfg", base_config() + "num_speakers_weights = [0.7, 0.3]\n");
  // base has one count; weights must match its length
  CHECK_THROWS_AS(load_simulation_config(path), ParseError);

  const auto good = testutil::write_text(
      tmp / "sim2.cfg",
      "seed = 7\nnum_conversations = 3\ntarget_duration = 20.0\n"
      "num_speakers = [2, 4]\nnum_speakers_weights = [0.7, 0.3]\n"
      "source_manifest = corpus/utterances.jsonl\noutput_dir = out\n"
      "turntaking.p = [0.15, 0.21, 0.44, 0.20]\n"
      "turntaking.beta_th = 2.0\nturntaking.beta_ts = 2.0\nturntaking.beta_ir = 2.0\n");
  const SimulationConfig cfg = load_simulation_config(good);
  REQUIRE(cfg.num_speakers_distribution.size() == 2);
  CHECK(cfg.num_speakers_distribution[0] == std::pair<int, double>{2, 0.7});
  CHECK(cfg.num_speakers_distribution[1] == std::pair<int, double>{4, 0.3});
}

TEST_CASE("turn-taking comes from a file or inline keys but not both") {
  TempDir tmp("cfg");
  save_params_file(tmp / "model.params", testutil::make_params({0.25, 0.25, 0.25, 0.25}));

  SUBCASE("external params file") {
    const auto path = testutil::write_text(
        tmp / "sim.cfg",
        "seed = 1\nnum_conversations = 1\ntarget_duration = 10\nnum_speakers = [2]\n"
        "source_manifest = u.jsonl\noutput_dir = out\n"
        "turntaking_params = model.params\n");
    const SimulationConfig cfg = load_simulation_config(path);
    CHECK(cfg.turntaking.prior[0] == 0.25);
  }
  SUBCASE("both sources is an error") {
    const auto path = testutil::write_text(
        tmp / "sim.cfg", base_config() + "turntaking_params = model.params\n");
    CHECK_THROWS_AS(load_simulation_config(path), ParseError);
  }
  SUBCASE("neither source is an error") {
    const auto path = testutil::write_text(
        tmp / "sim.cfg",
        "seed = 1\nnum_conversations = 1\ntarget_duration = 10\nnum_speakers = [2]\n"
        "source_manifest = u.jsonl\noutput_dir = out\n");
    CHECK_THROWS_AS(load_simulation_config(path), ParseError);
  }
}

TEST_CASE("overrides substitute values before validation") {
  TempDir tmp("cfg");
  const auto path = testutil::write_text(tmp / "sim.cfg", base_config());
  const SimulationConfig cfg = load_simulation_config(
      path, {{"num_conversations", "10"}, {"num_workers", "2"}, {"seed", "99"}});
  CHECK(cfg.num_conversations == 10);
  CHECK(cfg.num_workers == 2);
  CHECK(cfg.seed == 99);
}

TEST_CASE("config validation failures") {
  TempDir tmp("cfg");
  auto load_with = [&](const std::string& extra, const std::string& strip = "") {
    std::string body = base_config();
    if (!strip.empty()) {
      const auto pos = body.find(strip);
      REQUIRE(pos != std::string::npos);
      body.erase(pos, body.find('\n', pos) - pos + 1);
    }
    static int n = 0;
    const auto p = testutil::write_text(tmp / ("c" + std::to_string(n++) + ".cfg"), body + extra);
    return load_simulation_config(p);
  };

  CHECK_THROWS_AS(load_with("", "num_conversations"), ParseError);
  CHECK_THROWS_AS(load_with("", "target_duration"), ParseError);
  CHECK_THROWS_AS(load_with("", "source_manifest"), ParseError);
  CHECK_THROWS_AS(load_with("", "output_dir"), ParseError);
  CHECK_THROWS_AS(load_with("mystery_key = 1\n"), ParseError);
  CHECK_THROWS_AS(load_with("", "num_speakers ="), Error);

  SUBCASE("fractional speaker count") {
    const auto p = testutil::write_text(
        tmp / "frac.cfg",
        "seed = 1\nnum_conversations = 1\ntarget_duration = 10\nnum_speakers = [2.5]\n"
        "source_manifest = u.jsonl\noutput_dir = out\n"
        "turntaking.p = [1, 0, 0, 0]\n"
        "turntaking.beta_th = 1\nturntaking.beta_ts = 1\nturntaking.beta_ir = 1\n");
    CHECK_THROWS_AS(load_simulation_config(p), ParseError);
  }
  SUBCASE("negative conversation count via override") {
    const auto p = testutil::write_text(tmp / "neg.cfg", base_config());
    CHECK_THROWS_AS(load_simulation_config(p, {{"num_conversations", "-1"}}), ValidationError);
  }
}

TEST_CASE("validate rejects out-of-range fields") {
  TempDir tmp("cfg");
  const auto path = testutil::write_text(tmp / "sim.cfg", base_config());
  SimulationConfig cfg = load_simulation_config(path);

  SUBCASE("negative conversations") {
    cfg.num_conversations = -1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("zero target duration") {
    cfg.target_duration = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("empty speaker distribution") {
    cfg.num_speakers_distribution.clear();
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("speaker count below one") {
    cfg.num_speakers_distribution = {{0, 1.0}};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("non-positive weight sum") {
    cfg.num_speakers_distribution = {{2, 0.0}};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("bad sample rate") {
    cfg.sample_rate = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("bad worker count") {
    cfg.num_workers = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
  SUBCASE("bad min_pause with splitting enabled") {
    cfg.split_pauses = true;
    cfg.min_pause = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
  }
}

TEST_CASE("speaker count sampling follows the weights") {
  SUBCASE("single entry is constant") {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) CHECK(sample_num_speakers({{3, 1.0}}, rng) == 3);
  }
  SUBCASE("zero-weight entries never fire") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      CHECK(sample_num_speakers({{2, 0.0}, {5, 1.0}}, rng) == 5);
    }
  }
  SUBCASE("all entries with positive weight appear") {
    Rng rng(3);
    std::set<int> seen;
    for (int i = 0; i < 500; ++i) seen.insert(sample_num_speakers({{2, 0.5}, {3, 0.3}, {4, 0.2}}, rng));
    CHECK(seen == std::set<int>{2, 3, 4});
  }
  SUBCASE("frequencies track the weights") {
    Rng rng(4);
    int low = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
      if (sample_num_speakers({{2, 0.7}, {4, 0.3}}, rng) == 2) ++low;
    }
    CHECK(std::abs(static_cast<double>(low) / n - 0.7) < 0.02);
  }
}

TEST_CASE("shipped recipes load, validate, and stay consistent") {
  const std::filesystem::path dir = CONVSIM_RECIPES_DIR;
  for (const char* name : {"flat.params", "nsf1.params", "callhome.params", "callhome_ov.params"}) {
    const TurnTakingParams p = load_params_file(dir / name);
    CHECK(p.mode == TurnTakingMode::Categorical);
    CHECK(p.beta_th == 2.0);
    CHECK(p.beta_ts == 2.5);
    CHECK(p.beta_ir == 3.0);
    CHECK(p.bc_max_duration == 1.0);
  }

  // the _ov variant is callhome with overlapped types doubled and renormalized
  const TurnTakingParams base = load_params_file(dir / "callhome.params");
  const TurnTakingParams ov = load_params_file(dir / "callhome_ov.params");
  const TurnTakingParams boosted = boost_overlap(base, 2.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(ov.prior[i] == doctest::Approx(boosted.prior[i]).epsilon(1e-15));
  }

  // the example config parses end to end and points at a shipped recipe
  const SimulationConfig cfg = load_simulation_config(dir / "example.cfg");
  CHECK(cfg.num_conversations == 100);
  CHECK(cfg.num_speakers_distribution.size() == 3);
  CHECK(cfg.turntaking.prior[2] == 0.44);
}
