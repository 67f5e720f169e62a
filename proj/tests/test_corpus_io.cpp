#include <doctest.h>

#include <fstream>
#include <sstream>
#include <vector>

#include "convsim/corpus_io.hpp"
#include "convsim/error.hpp"
#include "testutil.hpp"

using namespace convsim;
using testutil::TempDir;

namespace {

SourceUtterance make_utt(const std::string& id, const std::string& speaker, double dur) {
  SourceUtterance u;
  u.id = id;
  u.speaker_id = speaker;
  u.audio = AudioRef{"/data/" + id + ".wav", 0.0, dur};
  u.sample_rate = 16000;
  return u;
}

}  // namespace

TEST_CASE("utterance validation enforces span invariants") {
  SourceUtterance u = make_utt("u1", "a", 2.0);
  CHECK_NOTHROW(u.validate());

  SUBCASE("non-positive duration") {
    u.audio.duration = 0.0;
    CHECK_THROWS_WITH_AS(u.validate(), doctest::Contains("u1"), ValidationError);
  }
  SUBCASE("negative offset") {
    u.audio.offset = -0.5;
    CHECK_THROWS_AS(u.validate(), ValidationError);
  }
  SUBCASE("word end before start") {
    u.words = {{"hi", 0.5, 0.4}};
    CHECK_THROWS_AS(u.validate(), ValidationError);
  }
  SUBCASE("overlapping words") {
    u.words = {{"a", 0.0, 0.6}, {"b", 0.5, 1.0}};
    CHECK_THROWS_AS(u.validate(), ValidationError);
  }
  SUBCASE("word outside the utterance span") {
    u.words = {{"a", 0.0, 2.5}};
    CHECK_THROWS_AS(u.validate(), ValidationError);
  }
  SUBCASE("1 ms slack at the edges is tolerated") {
    u.words = {{"a", -0.0005, 0.5}, {"b", 0.6, 2.0005}};
    CHECK_NOTHROW(u.validate());
  }
  SUBCASE("empty id") {
    u.id = "";
    CHECK_THROWS_AS(u.validate(), ValidationError);
  }
}

TEST_CASE("utterance manifest round trips and groups by speaker") {
  TempDir tmp("corpus");
  std::vector<SpeakerPool> pools(2);
  pools[0].speaker_id = "alice";
  pools[0].utterances = {make_utt("a1", "alice", 1.5), make_utt("a2", "alice", 0.7)};
  pools[1].speaker_id = "bob";
  pools[1].utterances = {make_utt("b1", "bob", 2.0)};
  pools[0].utterances[0].words = {{"hey", 0.1, 0.5}, {"there", 0.6, 1.4}};
  pools[0].utterances[0].text = "hey there";

  const auto path = tmp / "utts.jsonl";
  write_utterance_manifest(path, pools);
  const auto back = load_utterance_manifest(path);

  REQUIRE(back.size() == 2);
  CHECK(back[0].speaker_id == "alice");
  CHECK(back[1].speaker_id == "bob");
  REQUIRE(back[0].utterances.size() == 2);
  CHECK(back[0].utterances[0] == pools[0].utterances[0]);
  CHECK(back[0].utterances[1] == pools[0].utterances[1]);
  CHECK(back[1].utterances[0] == pools[1].utterances[0]);

  // writing the loaded pools again reproduces the file byte for byte
  const auto copy = tmp / "utts_copy.jsonl";
  write_utterance_manifest(copy, back);
  CHECK(testutil::read_text(copy) == testutil::read_text(path));
}

TEST_CASE("interleaved speakers group in first-appearance order") {
  TempDir tmp("corpus");
  const auto path = tmp / "mixed.jsonl";
  std::ofstream out(path);
  out << R"({"id":"x1","speaker":"x","audio":{"path":"/p1.wav","offset":0.0,"duration":1.0},"sample_rate":16000})" << "\n";
  out << R"({"id":"y1","speaker":"y","audio":{"path":"/p2.wav","offset":0.0,"duration":1.0},"sample_rate":16000})" << "\n";
  out << R"({"id":"x2","speaker":"x","audio":{"path":"/p3.wav","offset":0.0,"duration":1.0},"sample_rate":16000})" << "\n";
  out.close();
  const auto pools = load_utterance_manifest(path);
  REQUIRE(pools.size() == 2);
  CHECK(pools[0].speaker_id == "x");
  REQUIRE(pools[0].utterances.size() == 2);
  CHECK(pools[0].utterances[1].id == "x2");
  CHECK(pools[1].speaker_id == "y");
}

TEST_CASE("manifest parse errors carry the line number") {
  TempDir tmp("corpus");
  const auto path = tmp / "bad.jsonl";
  testutil::write_text(
      path,
      R"({"id":"u1","speaker":"a","audio":{"path":"/p.wav","offset":0.0,"duration":1.0},"sample_rate":16000})"
      "\nnot json\n");
  CHECK_THROWS_WITH_AS(load_utterance_manifest(path), doctest::Contains(":2"), ParseError);

  const auto missing_field = tmp / "missing.jsonl";
  testutil::write_text(missing_field, R"({"id":"u1","speaker":"a"})" "\n");
  CHECK_THROWS_AS(load_utterance_manifest(missing_field), ParseError);

  CHECK_THROWS_AS(load_utterance_manifest(tmp / "nope.jsonl"), IoError);
}

TEST_CASE("invalid utterances fail loading as validation errors") {
  TempDir tmp("corpus");
  const auto path = tmp / "invalid.jsonl";
  testutil::write_text(
      path,
      R"({"id":"u1","speaker":"a","audio":{"path":"/p.wav","offset":0.0,"duration":-1.0},"sample_rate":16000})"
      "\n");
  CHECK_THROWS_AS(load_utterance_manifest(path), ValidationError);
}

TEST_CASE("session manifest validation") {
  SessionManifest m;
  m.session_id = "s1";
  m.audio_path = "audio/s1.wav";
  m.duration = 10.0;
  m.sample_rate = 16000;
  m.supervisions = {{"a", 0.0, 4.0, "u1", "TH", ""}, {"b", 3.0, 3.0, "u2", "IR", ""}};
  CHECK_NOTHROW(m.validate());

  SUBCASE("supervision past the session end") {
    m.supervisions.push_back({"a", 9.5, 1.0, "u3", "TS", ""});
    CHECK_THROWS_AS(m.validate(), ValidationError);
  }
  SUBCASE("unknown transition code") {
    m.supervisions[0].transition = "XX";
    CHECK_THROWS_AS(m.validate(), ValidationError);
  }
  SUBCASE("same-speaker overlap is rejected") {
    m.supervisions.push_back({"a", 2.0, 1.0, "u3", "TH", ""});
    CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("themselves"), ValidationError);
  }
  SUBCASE("negative onset") {
    m.supervisions[0].onset = -0.1;
    CHECK_THROWS_AS(m.validate(), ValidationError);
  }
}

TEST_CASE("session manifest json line round trip is byte stable") {
  SessionManifest m;
  m.session_id = "sess_000001";
  m.audio_path = "audio/sess_000001.wav";
  m.duration = 12.5;
  m.sample_rate = 16000;
  m.supervisions = {{"spk0", 0.0, 2.5, "spk0_u3", "TH", "hello world"},
                    {"spk1", 2.75, 1.25, "spk1_u1", "TS", ""}};
  const std::string line = session_to_json_line(m);
  const SessionManifest back = session_from_json_line(line);
  CHECK(back == m);
  CHECK(session_to_json_line(back) == line);
}

TEST_CASE("session manifest file round trip") {
  TempDir tmp("sess");
  std::vector<SessionManifest> sessions(2);
  sessions[0].session_id = "s0";
  sessions[0].audio_path = "audio/s0.wav";
  sessions[0].duration = 5.0;
  sessions[0].sample_rate = 16000;
  sessions[0].supervisions = {{"a", 0.0, 2.0, "u1", "TH", ""}};
  sessions[1].session_id = "s1";
  sessions[1].audio_path = "audio/s1.wav";
  sessions[1].duration = 3.0;
  sessions[1].sample_rate = 16000;
  sessions[1].supervisions = {{"b", 0.0, 3.0, "u2", "TH", ""}};

  const auto path = tmp / "sessions.jsonl";
  write_session_manifest(path, sessions);
  const auto back = load_session_manifest(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == sessions[0]);
  CHECK(back[1] == sessions[1]);

  const auto copy = tmp / "copy.jsonl";
  write_session_manifest(copy, back);
  CHECK(testutil::read_text(copy) == testutil::read_text(path));
}

TEST_CASE("pause splitting cuts at gap midpoints with capped padding") {
  SourceUtterance u = make_utt("utt", "a", 1.4);
  u.words = {{"one", 0.0, 0.5}, {"two", 0.9, 1.4}};
  u.text = "one two";

  const auto pieces = split_at_pauses(u, 0.3);
  REQUIRE(pieces.size() == 2);

  CHECK(pieces[0].id == "utt#0");
  CHECK(pieces[0].audio.offset == 0.0);
  CHECK(pieces[0].audio.duration == doctest::Approx(0.65).epsilon(1e-12));
  REQUIRE(pieces[0].words.size() == 1);
  CHECK(pieces[0].words[0].token == "one");
  CHECK(pieces[0].words[0].start == 0.0);
  CHECK(pieces[0].words[0].end == 0.5);
  CHECK(pieces[0].text == "one");

  CHECK(pieces[1].id == "utt#1");
  CHECK(pieces[1].audio.offset == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(pieces[1].audio.duration == doctest::Approx(0.65).epsilon(1e-12));
  REQUIRE(pieces[1].words.size() == 1);
  CHECK(pieces[1].words[0].start == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(pieces[1].words[0].end == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(pieces[1].text == "two");

  for (const auto& p : pieces) CHECK_NOTHROW(p.validate());
}

TEST_CASE("pause splitting leaves gapless or unaligned utterances alone") {
  SourceUtterance u = make_utt("utt", "a", 1.0);
  SUBCASE("no alignment") {
    const auto pieces = split_at_pauses(u, 0.3);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0] == u);
  }
  SUBCASE("gaps below the threshold") {
    u.words = {{"a", 0.0, 0.4}, {"b", 0.5, 1.0}};
    const auto pieces = split_at_pauses(u, 0.3);
    REQUIRE(pieces.size() == 1);
    CHECK(pieces[0] == u);
  }
  SUBCASE("non-positive min_pause is rejected") {
    CHECK_THROWS_AS(split_at_pauses(u, 0.0), ValidationError);
  }
}

TEST_CASE("pause splitting is idempotent") {
  SourceUtterance u = make_utt("utt", "a", 3.0);
  u.words = {{"a", 0.0, 0.5}, {"b", 1.0, 1.5}, {"c", 2.4, 3.0}};
  const auto pieces = split_at_pauses(u, 0.4);
  REQUIRE(pieces.size() == 3);
  for (const auto& p : pieces) {
    const auto again = split_at_pauses(p, 0.4);
    REQUIRE(again.size() == 1);
    CHECK(again[0].audio.offset == p.audio.offset);
    CHECK(again[0].audio.duration == p.audio.duration);
  }
}

TEST_CASE("rttm output is sorted, fixed precision and parseable") {
  SessionManifest m;
  m.session_id = "sess_000001";
  m.duration = 20.0;
  m.sample_rate = 16000;
  m.supervisions = {{"spk3", 12.34, 2.5, "u1", "TS", ""},
                    {"spk1", 0.0, 4.0, "u2", "TH", ""},
                    {"spk0", 12.34, 1.0, "u3", "IR", ""}};
  std::ostringstream out;
  write_rttm(m, out);
  CHECK(out.str() ==
        "SPEAKER sess_000001 1 0.000 4.000 <NA> <NA> spk1 <NA> <NA>\n"
        "SPEAKER sess_000001 1 12.340 1.000 <NA> <NA> spk0 <NA> <NA>\n"
        "SPEAKER sess_000001 1 12.340 2.500 <NA> <NA> spk3 <NA> <NA>\n");
}

TEST_CASE("rttm reload recovers spans grouped by session") {
  TempDir tmp("rttm");
  SessionManifest a;
  a.session_id = "s_a";
  a.duration = 8.0;
  a.sample_rate = 16000;
  a.supervisions = {{"x", 0.0, 3.0, "u1", "TH", ""}, {"y", 3.5, 4.5, "u2", "TS", ""}};
  SessionManifest b;
  b.session_id = "s_b";
  b.duration = 2.0;
  b.sample_rate = 16000;
  b.supervisions = {{"z", 0.0, 2.0, "u3", "TH", ""}};

  const auto path = tmp / "all.rttm";
  {
    std::ofstream out(path);
    write_rttm(a, out);
    write_rttm(b, out);
  }
  const auto sessions = load_rttm(path);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].session_id == "s_a");
  REQUIRE(sessions[0].supervisions.size() == 2);
  CHECK(sessions[0].supervisions[0].speaker_id == "x");
  CHECK(sessions[0].supervisions[1].onset == 3.5);
  CHECK(sessions[0].duration == 8.0);
  CHECK(sessions[1].session_id == "s_b");
  // rttm carries no source ids or rates; placeholders are documented
  CHECK(sessions[0].supervisions[0].transition == "TH");
  CHECK(sessions[0].sample_rate == 1);
}

TEST_CASE("malformed rttm lines name the line") {
  TempDir tmp("rttm");
  const auto path = tmp / "bad.rttm";
  testutil::write_text(path,
                       "SPEAKER s 1 0.000 1.000 <NA> <NA> x <NA> <NA>\n"
                       "SPKR s 1 0.000 1.000 <NA> <NA> x <NA> <NA>\n");
  CHECK_THROWS_WITH_AS(load_rttm(path), doctest::Contains(":2"), ParseError);
}

TEST_CASE("noise manifest resolves relative paths and skips comments") {
  TempDir tmp("noise");
  std::filesystem::create_directories(tmp / "n");
  const auto path = testutil::write_text(tmp / "n/noise.txt",
                                         "# header\n"
                                         "a.wav\n"
                                         "  b.wav  # inline\n"
                                         "\n"
                                         "/abs/c.wav\n");
  const auto files = load_noise_manifest(path);
  REQUIRE(files.size() == 3);
  CHECK(files[0] == tmp.path() / "n" / "a.wav");
  CHECK(files[1] == tmp.path() / "n" / "b.wav");
  CHECK(files[2] == std::filesystem::path("/abs/c.wav"));
  CHECK_THROWS_AS(load_noise_manifest(tmp / "missing.txt"), IoError);
}
