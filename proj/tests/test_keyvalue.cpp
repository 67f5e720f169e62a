#include <doctest.h>

#include <string>
#include <vector>

#include "convsim/error.hpp"
#include "convsim/keyvalue.hpp"
#include "testutil.hpp"

using namespace convsim;
using testutil::TempDir;

TEST_CASE("parses scalars, arrays and comments") {
  auto cfg = KeyValueConfig::parse_string(
      "# full line comment\n"
      "name = callhome  # trailing comment\n"
      "count = 42\n"
      "rate = 0.25\n"
      "flag = true\n"
      "weights = [0.15, 0.21, 0.44, 0.20]\n"
      "\n"
      "token = a#b\n");
  CHECK(cfg.get_string("name") == "callhome");
  CHECK(cfg.get_int("count") == 42);
  CHECK(cfg.get_double("rate") == 0.25);
  CHECK(cfg.get_bool("flag", false) == true);
  const std::vector<double> w = cfg.get_double_array("weights");
  REQUIRE(w.size() == 4);
  CHECK(w[0] == 0.15);
  CHECK(w[3] == 0.20);
  // '#' without preceding whitespace is part of the value
  CHECK(cfg.get_string("token") == "a#b");
  cfg.reject_unused();
}

TEST_CASE("missing key uses the fallback, present key wins") {
  auto cfg = KeyValueConfig::parse_string("a = 1\n");
  CHECK(cfg.get_int("a", 5) == 1);
  CHECK(cfg.get_int("b", 5) == 5);
  CHECK(cfg.get_double("c", 0.5) == 0.5);
  CHECK(cfg.get_string("d", "x") == "x");
  CHECK(cfg.get_bool("e", true) == true);
  CHECK(cfg.get_uint64("f", 7) == 7);
  cfg.reject_unused();
}

TEST_CASE("duplicate keys are rejected with the line number") {
  CHECK_THROWS_WITH_AS(KeyValueConfig::parse_string("a = 1\na = 2\n", "cfg"),
                       doctest::Contains("cfg:2"), ParseError);
}

TEST_CASE("malformed lines are rejected") {
  CHECK_THROWS_AS(KeyValueConfig::parse_string("just words\n"), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("= 1\n"), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("a =\n"), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("bad key = 1\n"), ParseError);
  CHECK_THROWS_AS(KeyValueConfig::parse_string("k$y = 1\n"), ParseError);
}

TEST_CASE("type errors name the key") {
  auto cfg = KeyValueConfig::parse_string(
      "d = abc\ni = 1.5\nu = -3\nb = maybe\narr = 1, 2\nempty_arr = []\n");
  CHECK_THROWS_WITH_AS(cfg.get_double("d"), doctest::Contains("'d'"), ParseError);
  CHECK_THROWS_AS(cfg.get_int("i"), ParseError);
  CHECK_THROWS_AS(cfg.get_uint64("u", 0), ParseError);
  CHECK_THROWS_AS(cfg.get_bool("b", false), ParseError);
  CHECK_THROWS_AS(cfg.get_double_array("arr"), ParseError);
  CHECK_THROWS_AS(cfg.get_double_array("empty_arr"), ParseError);
}

TEST_CASE("unused keys are reported after reading") {
  auto cfg = KeyValueConfig::parse_string("a = 1\ntypo_key = 2\n");
  CHECK(cfg.get_int("a") == 1);
  CHECK_THROWS_WITH_AS(cfg.reject_unused(), doctest::Contains("typo_key"), ParseError);
}

TEST_CASE("set overrides and inserts, and unread overrides still count as unused") {
  auto cfg = KeyValueConfig::parse_string("a = 1\n");
  cfg.set("a", "9");
  cfg.set("b", "3");
  CHECK(cfg.get_int("a") == 9);
  // 'b' was injected but never read back; a typo in an override must fail
  CHECK_THROWS_WITH_AS(cfg.reject_unused(), doctest::Contains("b"), ParseError);
}

TEST_CASE("relative paths resolve against the config directory") {
  TempDir tmp("kv");
  std::filesystem::create_directories(tmp / "sub");
  const auto file = testutil::write_text(tmp / "sub/c.cfg", "p = data/x.wav\nq = /abs/y.wav\n");
  auto cfg = KeyValueConfig::parse_file(file);
  CHECK(cfg.get_path("p") == tmp.path() / "sub" / "data/x.wav");
  CHECK(cfg.get_path("q") == std::filesystem::path("/abs/y.wav"));
  CHECK(cfg.get_path("r", "/fallback.wav") == std::filesystem::path("/fallback.wav"));
  cfg.reject_unused();
}

TEST_CASE("missing file raises IoError, missing required key raises ParseError") {
  CHECK_THROWS_AS(KeyValueConfig::parse_file("/nonexistent/f.cfg"), IoError);
  auto cfg = KeyValueConfig::parse_string("a = 1\n");
  CHECK_THROWS_WITH_AS(cfg.get_string("nope"), doctest::Contains("nope"), ParseError);
}

TEST_CASE("uint64 accepts the full unsigned range") {
  auto cfg = KeyValueConfig::parse_string("s = 18446744073709551615\n");
  CHECK(cfg.get_uint64("s", 0) == 18446744073709551615ULL);
}
