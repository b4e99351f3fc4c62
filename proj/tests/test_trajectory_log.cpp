#include <doctest.h>

#include <sstream>

#include "pitchlab/io/trajectory_log.hpp"

using namespace pitchlab;

namespace {

TrajectoryLog random_episode(uint64_t seed, int steps, const RunConfig& cfg) {
  Rng rng(seed);
  GameState s = reset(TaskId::football, rng, cfg);
  TrajectoryLog log;
  log.header = make_log_header(s, seed, config_hash(cfg));
  Rng act_rng(seed ^ 0xabcdef);
  for (int t = 0; t < steps && !s.terminal; ++t) {
    std::vector<ActionCommand> actions(s.players.size());
    for (auto& a : actions) {
      a.forward = act_rng.uniform(-1, 1);
      a.turn = act_rng.uniform(-1, 1);
      a.kick = act_rng.uniform(0, 1);
    }
    StepResult r = step(s, actions, cfg);
    log.append(s, actions, r);
  }
  return log;
}

}  // namespace

TEST_CASE("header-only log round-trips") {
  TrajectoryLog log;
  log.header.task = "football";
  log.header.seed = 5;
  log.header.config_hash = 17;
  log.header.teams = {{0, 1}, {2, 3}};
  TrajectoryLog back = parse_log(serialize_log(log));
  CHECK(back == log);
}

TEST_CASE("full episode round-trips exactly") {
  RunConfig cfg;
  TrajectoryLog log = random_episode(99, 200, cfg);
  CHECK(log.steps.size() == 200);
  TrajectoryLog back = parse_log(serialize_log(log));
  CHECK(back == log);
  CHECK(log_hash(back) == log_hash(log));
}

TEST_CASE("corrupted line is reported with its line number") {
  RunConfig cfg;
  TrajectoryLog log = random_episode(7, 10, cfg);
  std::string text = serialize_log(log);
  // clobber line 7
  size_t pos = 0;
  for (int i = 0; i < 6; ++i) pos = text.find('\n', pos) + 1;
  text[pos + 3] = '\x01';
  CHECK_THROWS_WITH_AS(parse_log(text), doctest::Contains("line 7"), LogError);
}

TEST_CASE("version mismatch is rejected") {
  TrajectoryLog log;
  log.header.format_version = 2;
  CHECK_THROWS_WITH_AS(parse_log(serialize_log(log)), doctest::Contains("format_version"),
                       LogError);
}

TEST_CASE("empty input is rejected") {
  CHECK_THROWS_AS(parse_log(""), LogError);
}

TEST_CASE("replay reproduces the log hash-exactly") {
  RunConfig cfg;
  for (uint64_t seed : {3ULL, 1234ULL}) {
    TrajectoryLog log = random_episode(seed, 300, cfg);
    TrajectoryLog replayed = replay_log(log, cfg);
    CHECK(serialize_log(replayed) == serialize_log(log));
    CHECK(log_hash(replayed) == log_hash(log));
  }
}

TEST_CASE("quantize9 is idempotent") {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, static_cast<double>(rng.uniform_int(8)) - 4.0);
    const double q = quantize9(v);
    CHECK(quantize9(q) == q);
  }
}
