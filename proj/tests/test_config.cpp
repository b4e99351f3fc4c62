#include <doctest.h>

#include "pitchlab/config.hpp"
#include "pitchlab/rng.hpp"

using namespace pitchlab;

TEST_CASE("empty file yields defaults") {
  RunConfig cfg = parse_config_text("");
  RunConfig def;
  CHECK(serialize_config(cfg) == serialize_config(def));
  CHECK(cfg.sim.dt == doctest::Approx(0.03));
  CHECK(cfg.eval.matches == 64);
  CHECK(cfg.analytics.episode_steps == 3000);
}

TEST_CASE("unknown key is rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config_text("sim.gravity = 9.8\n"),
                       doctest::Contains("sim.gravity"), ConfigError);
}

TEST_CASE("constraint violations name the key") {
  CHECK_THROWS_WITH_AS(parse_config_text("[sim]\nrestitution = 1.5\n"),
                       doctest::Contains("sim.restitution"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("sim.dt = 0\n"), doctest::Contains("sim.dt"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("npmp.rho = 1.0\n"), doctest::Contains("npmp.rho"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("sim.area_per_player_min = 300\n"
                                         "sim.area_per_player_max = 200\n"),
                       doctest::Contains("area_per_player_min"), ConfigError);
}

TEST_CASE("type errors name the key") {
  CHECK_THROWS_WITH_AS(parse_config_text("sim.dt = fast\n"), doctest::Contains("sim.dt"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("pbt.population = 3.5\n"),
                       doctest::Contains("pbt.population"), ConfigError);
}

TEST_CASE("sections and comments parse") {
  RunConfig cfg = parse_config_text(
      "seed = 42\n"
      "# comment\n"
      "[sim]\n"
      "dt = 0.02   # trailing comment\n"
      "v_max = 6\n"
      "[mpo]\n"
      "epsilon = 0.2\n");
  CHECK(cfg.seed == 42);
  CHECK(cfg.sim.dt == doctest::Approx(0.02));
  CHECK(cfg.sim.v_max == doctest::Approx(6.0));
  CHECK(cfg.mpo.epsilon == doctest::Approx(0.2));
}

TEST_CASE("serialize/parse round-trip over randomized configs") {
  Rng rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    RunConfig cfg;
    cfg.seed = rng.next_u64();
    cfg.sim.dt = rng.uniform(0.005, 0.1);
    cfg.sim.v_max = rng.uniform(2.0, 20.0);
    cfg.sim.restitution = rng.uniform(0.0, 1.0);
    cfg.mpo.epsilon = rng.uniform(0.01, 1.0);
    cfg.mpo.n_action_samples = 2 + static_cast<int>(rng.uniform_int(30));
    cfg.pbt.decay = rng.uniform(0.5, 1.0);
    cfg.npmp.rho = rng.uniform(0.1, 0.99);
    const std::string text = serialize_config(cfg);
    RunConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));
  }
}

TEST_CASE("every key carries a provenance flag and doc") {
  auto keys = describe_config();
  CHECK(keys.size() > 60);
  int paper = 0;
  for (const auto& k : keys) {
    CHECK((k.provenance == "paper" || k.provenance == "free"));
    CHECK(!k.doc.empty());
    if (k.provenance == "paper") ++paper;
  }
  CHECK(paper >= 10);
}
