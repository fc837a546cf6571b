#include "doctest.h"

#include "camctx/benchmark.hpp"
#include "camctx/config.hpp"
#include "camctx/error.hpp"

using namespace camctx;

TEST_SUITE("config") {

TEST_CASE("key/value parsing with sections, comments and quotes") {
  const auto c = KeyValueConfig::parse(
      "# top\n"
      "a = 1\n"
      "[trace]\n"
      "seed = 42   # trailing\n"
      "name = \"x # y\"\n"
      "\n"
      "[train]\n"
      "learning_rate = 0.5\n");
  CHECK(c.get_int("a", 0) == 1);
  CHECK(c.get_u64("trace.seed", 0) == 42);
  CHECK(c.get_string("trace.name", "") == "x # y");
  CHECK(c.get_real("train.learning_rate", 0.0) == 0.5);
  CHECK(c.get_real("train.missing", 2.5) == 2.5);
  CHECK_FALSE(c.contains("seed"));
  CHECK_THROWS_AS(c.get_int("trace.name", 0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("[open\n"), ConfigError);
  CHECK_THROWS_AS(c.require_known({"a", "trace.seed"}), ConfigError);
  CHECK_NOTHROW(c.require_known({"a", "trace.seed", "trace.name", "train.learning_rate"}));
}

TEST_CASE("durations") {
  CHECK(parse_duration("90s") == 90);
  CHECK(parse_duration("1m") == 60);
  CHECK(parse_duration("1h") == 3600);
  CHECK(parse_duration("1d") == 86400);
  CHECK(parse_duration("1w") == 604800);
  CHECK(parse_duration("1month") == 2592000);
  CHECK(parse_duration("45") == 45);
  CHECK(parse_duration("all") > parse_duration("100month"));
  for (const char* bad : {"", "m", "-1d", "1y", "1 d"}) CHECK_THROWS_AS(parse_duration(bad), ConfigError);
  for (const char* s : {"1m", "1h", "1d", "1w", "1month", "90s", "all"}) CHECK(format_duration(parse_duration(s)) == s);
}

TEST_CASE("train config defaults and rejection of unknown keys") {
  const auto t = TrainConfig::from_config(KeyValueConfig::parse("[train]\nsteps = 7\nhorizon = 1w\n"));
  CHECK(t.steps == 7);
  CHECK(t.horizon == 604800);
  CHECK(t.momentum == 0.9);
  CHECK(t.weight_decay == 0.0004);
  CHECK(t.temperature == 0.01);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("[train]\nstepz = 7\n")), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("[train]\nclip_length = 9\n")), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_config(KeyValueConfig::parse("[train]\ntemperature = 0\n")), ConfigError);
}

TEST_CASE("benchmark config sections") {
  const auto b = BenchmarkConfig::from_config(KeyValueConfig::parse(
      "[trace]\nn_cameras = 3\ntest_cameras = 1\n[bank]\nstrategy = stride:2\n[eval]\nhorizons = 1m, 1d\n"));
  CHECK(b.trace.n_cameras == 3);
  CHECK(b.strategy == CurationStrategy::strided(2));
  CHECK(b.horizons == std::vector<std::int64_t>{60, 86400});
  CHECK_THROWS_AS(BenchmarkConfig::from_config(KeyValueConfig::parse("[other]\nx = 1\n")), ConfigError);
  CHECK_THROWS_AS(BenchmarkConfig::from_config(KeyValueConfig::parse("[bank]\nstrategy = nope\n")), ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"benchmark.toml", "distractor_heavy.toml", "periodic.toml"}) {
    const auto path = std::filesystem::path(CAMCTX_CONFIG_DIR) / name;
    CHECK_NOTHROW(BenchmarkConfig::load(path));
  }
}

}  // TEST_SUITE
