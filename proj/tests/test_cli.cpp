#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include "convsim/config.hpp"
#include "convsim/corpus_io.hpp"
#include "convsim/turntaking.hpp"
#include "convsim/wav.hpp"
#include "testutil.hpp"

using namespace convsim;
using testutil::TempDir;
using testutil::run_cli;

namespace fs = std::filesystem;

namespace {

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Config + synthetic corpus for the simulate/bench/stats commands.
fs::path write_sim_config(const TempDir& tmp, const std::string& extra = "") {
  testutil::build_corpus(tmp / "corpus", 2, 6);
  return testutil::write_text(tmp / "sim.cfg",
                              "seed = 7\n"
                              "num_conversations = 3\n"
                              "target_duration = 12.0\n"
                              "num_speakers = [2]\n"
                              "source_manifest = corpus/utterances.jsonl\n"
                              "output_dir = out\n"
                              "turntaking.p = [0.4, 0.3, 0.2, 0.1]\n"
                              "turntaking.beta_th = 2.0\n"
                              "turntaking.beta_ts = 2.0\n"
                              "turntaking.beta_ir = 2.0\n" +
                                  extra);
}

}  // namespace

TEST_CASE("cli usage errors exit with 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("frobnicate").exit_code == 2);
  CHECK(run_cli("simulate").exit_code == 2);           // missing config argument
  CHECK(run_cli("rir --room 6,4,3").exit_code == 2);   // missing src/mic
  const auto help = run_cli("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.output.find("simulate") != std::string::npos);
  CHECK(help.output.find("fit") != std::string::npos);
}

TEST_CASE("rir subcommand writes the analytic direct path") {
  TempDir tmp("cli");
  const fs::path out = tmp / "rir.wav";
  const auto res = run_cli("rir --room 6,4,3 --src 1,1,1 --mic 4.43,1,1 --max-order 0 --rate 16000 --out " +
                           q(out));
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("161 taps") != std::string::npos);
  const WavData wav = read_wav(out);
  CHECK(wav.sample_rate == 16000);
  REQUIRE(wav.samples.size() == 161);
  // distance 3.43 m -> tap 160, amplitude 1/(4*pi*3.43); float32 storage
  CHECK(wav.samples[160] == doctest::Approx(0.023200429022142175).epsilon(1e-6));
  for (std::size_t i = 0; i < 160; ++i) CHECK(wav.samples[i] == 0.0);

  CHECK(run_cli("rir --room 6,4,3 --src 9,1,1 --mic 4.43,1,1 --out " + q(tmp / "bad.wav")).exit_code == 2);
}

TEST_CASE("simulate generates a dataset and honors overrides") {
  TempDir tmp("cli");
  const fs::path cfg = write_sim_config(tmp);
  const auto res = run_cli("simulate " + q(cfg) + " --workers 2 --num-conversations 2");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("generated 2 sessions") != std::string::npos);
  CHECK(fs::exists(tmp / "out" / "sessions.jsonl"));
  CHECK(load_session_manifest(tmp / "out" / "sessions.jsonl").size() == 2);

  SUBCASE("stats reads the result back") {
    const auto table = run_cli("stats " + q(tmp / "out" / "sessions.jsonl"));
    CHECK(table.exit_code == 0);
    CHECK(table.output.find("overlap ratio") != std::string::npos);
    const auto json = run_cli("stats --json " + q(tmp / "out" / "sessions.jsonl"));
    CHECK(json.exit_code == 0);
    CHECK(json.output.find("\"num_sessions\": 2") != std::string::npos);
  }
}

TEST_CASE("simulate rejects bad invocations and configs") {
  TempDir tmp("cli");
  CHECK(run_cli("simulate " + q(tmp / "missing.cfg")).exit_code == 2);
  const fs::path broken = testutil::write_text(tmp / "broken.cfg", "seed = 1\n");
  CHECK(run_cli("simulate " + q(broken)).exit_code == 2);
  const fs::path cfg = write_sim_config(tmp);
  CHECK(run_cli("simulate " + q(cfg) + " --set not_a_pair").exit_code == 2);
}

TEST_CASE("simulate exits 1 when generation fails mid-run") {
  TempDir tmp("cli");
  fs::create_directories(tmp / "noise");
  write_wav(tmp / "noise" / "silence.wav", std::vector<double>(16000, 0.0), 16000);
  testutil::write_text(tmp / "noise" / "noise.txt", "silence.wav\n");
  const fs::path cfg = write_sim_config(tmp,
                                        "acoustic.noise = true\n"
                                        "acoustic.noise_manifest = noise/noise.txt\n");
  const auto res = run_cli("simulate " + q(cfg));
  CHECK(res.exit_code == 1);
  CHECK(res.output.find("conversation 0 failed") != std::string::npos);
}

TEST_CASE("fit recovers parameters from a hand-written rttm") {
  TempDir tmp("cli");
  // one TH (gap 0.5), one TS (gap 0.3), one IR (overlap 0.5 of 2.0), one BC
  const fs::path rttm = testutil::write_text(
      tmp / "ref.rttm",
      "SPEAKER conv1 1 0.000 2.000 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER conv1 1 2.500 2.000 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER conv1 1 4.800 2.000 <NA> <NA> B <NA> <NA>\n"
      "SPEAKER conv1 1 6.300 2.000 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER conv1 1 7.000 0.600 <NA> <NA> B <NA> <NA>\n");
  const fs::path out = tmp / "fitted.params";
  const auto res = run_cli("fit " + q(rttm) + " --out " + q(out));
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("fitted categorical model from 1 sessions (4 transitions)") !=
        std::string::npos);

  const TurnTakingParams params = load_params_file(out);
  CHECK(params.mode == TurnTakingMode::Categorical);
  for (double p : params.prior) CHECK(p == 0.25);
  CHECK(params.beta_th == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(params.beta_ts == doctest::Approx(1.0 / 0.3).epsilon(1e-9));
  CHECK(params.beta_ir == doctest::Approx(3.593511972576482).epsilon(1e-6));
  CHECK(params.bc_max_duration == 1.0);

  SUBCASE("session-manifest format fits the same numbers") {
    const fs::path manifest = tmp / "sessions.jsonl";
    write_session_manifest(manifest, load_rttm(rttm));
    const fs::path mout = tmp / "fitted2.params";
    const auto res2 =
        run_cli("fit --format session-manifest " + q(manifest) + " --out " + q(mout));
    CHECK(res2.exit_code == 0);
    const TurnTakingParams p2 = load_params_file(mout);
    CHECK(p2.beta_th == params.beta_th);
    CHECK(p2.beta_ir == params.beta_ir);
    CHECK(p2.prior == params.prior);
  }
  SUBCASE("markov mode writes a transition matrix") {
    const fs::path mout = tmp / "markov.params";
    CHECK(run_cli("fit --mode markov " + q(rttm) + " --out " + q(mout)).exit_code == 0);
    const TurnTakingParams m = load_params_file(mout);
    CHECK(m.mode == TurnTakingMode::Markov);
    CHECK(m.matrix[0][1] == 1.0);  // the one observed TH was followed by a TS
  }
  SUBCASE("empty annotations are a usage error") {
    const fs::path empty = testutil::write_text(tmp / "empty.rttm", "");
    CHECK(run_cli("fit " + q(empty)).exit_code == 2);
  }
}

TEST_CASE("bench emits the csv") {
  TempDir tmp("cli");
  const fs::path cfg = write_sim_config(tmp);
  const fs::path csv = tmp / "bench.csv";
  const auto res = run_cli("bench " + q(cfg) + " --workers 1,2 --set num_conversations=2 --csv " + q(csv));
  CHECK(res.exit_code == 0);
  const std::string body = testutil::read_text(csv);
  CHECK(body.rfind("workers,wall_s,hours_per_min\n", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 3);

  const auto to_stdout = run_cli("bench " + q(cfg) + " --set num_conversations=1 --set output_dir=out2");
  CHECK(to_stdout.exit_code == 0);
  CHECK(to_stdout.output.find("workers,wall_s,hours_per_min") != std::string::npos);
}
