#include <doctest.h>

#include <cmath>

#include "pitchlab/sim/drills.hpp"

using namespace pitchlab;

namespace {

TrajectoryLog log_with_rewards(TaskId kind, const std::vector<std::vector<double>>& per_step) {
  TrajectoryLog log;
  log.header.task = task_name(kind);
  for (size_t t = 0; t < per_step.size(); ++t) {
    LogStep s;
    s.t = static_cast<int>(t);
    s.players.resize(1);
    s.actions.push_back({0, 0, 0});
    s.rewards.push_back(per_step[t]);
    log.steps.push_back(std::move(s));
  }
  return log;
}

}  // namespace

TEST_CASE("spawn_drill: window, budget, determinism") {
  RunConfig cfg;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    auto [spec, state] = spawn_drill(TaskId::kick_to_target, rng, cfg);
    REQUIRE(spec.window_s.has_value());
    CHECK(*spec.window_s >= 2.0);
    CHECK(*spec.window_s <= 6.0);
    CHECK(state.horizon ==
          static_cast<int>(std::llround((*spec.window_s + 2.0) / cfg.sim.dt)));
  }
  {
    Rng rng(3);
    auto [spec, state] = spawn_drill(TaskId::shoot, rng, cfg);
    REQUIRE(spec.contact_budget.has_value());
    CHECK(*spec.contact_budget == 3);
  }
  {
    Rng a(9), b(9);
    auto [spec1, s1] = spawn_drill(TaskId::follow, a, cfg);
    auto [spec2, s2] = spawn_drill(TaskId::follow, b, cfg);
    REQUIRE(spec1.target_track.has_value());
    REQUIRE(spec2.target_track.has_value());
    REQUIRE(spec1.target_track->positions.size() == spec2.target_track->positions.size());
    for (size_t i = 0; i < spec1.target_track->positions.size(); ++i)
      CHECK((spec1.target_track->positions[i] - spec2.target_track->positions[i]).norm() == 0.0);
  }
  Rng rng(4);
  CHECK_THROWS_AS(spawn_drill(TaskId::football, rng, cfg), SimError);
}

TEST_CASE("drill reward formulas") {
  RunConfig cfg;
  // dribble at distance 0 -> exactly 1
  {
    Rng rng(21);
    auto [spec, s] = spawn_drill(TaskId::dribble, rng, cfg);
    s.ball.position = s.context.track.at(s.step);
    RewardVector r = drill_rewards(s, s, spec, cfg);
    CHECK(r[0] == doctest::Approx(1.0));
  }
  // kick_to_target at distance 5 -> e^-1
  {
    Rng rng(22);
    auto [spec, s] = spawn_drill(TaskId::kick_to_target, rng, cfg);
    s.ball.position = s.context.static_target + Vec2{5.0, 0.0};
    s.ball.velocity = {0.0, 0.0};
    RewardVector r = drill_rewards(s, s, spec, cfg);
    CHECK(r[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
  // follow at distance 2 -> e^-1
  {
    Rng rng(23);
    auto [spec, s] = spawn_drill(TaskId::follow, rng, cfg);
    s.players[0].position = s.context.track.at(s.step) + Vec2{0.0, 2.0};
    RewardVector r = drill_rewards(s, s, spec, cfg);
    CHECK(r[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  }
}

TEST_CASE("exponential channels lie in (0,1] and decrease with distance") {
  RunConfig cfg;
  Rng rng(31);
  auto [spec, s] = spawn_drill(TaskId::dribble, rng, cfg);
  double prev = 2.0;
  for (double d : {0.0, 0.5, 1.0, 3.0, 10.0, 30.0}) {
    s.ball.position = s.context.track.at(s.step) + Vec2{d, 0.0};
    RewardVector r = drill_rewards(s, s, spec, cfg);
    CHECK(r[0] > 0.0);
    CHECK(r[0] <= 1.0);
    CHECK(r[0] < prev);
    prev = r[0];
  }
}

TEST_CASE("drill_fitness sums only the environment channels") {
  // follow glued to the target for T steps: fitness = T * 1.0
  {
    std::vector<std::vector<double>> rw(25, {1.0});
    auto log = log_with_rewards(TaskId::follow, rw);
    DrillSpec spec;
    spec.kind = TaskId::follow;
    CHECK(drill_fitness(log, spec) == doctest::Approx(25.0));
  }
  // dribble distances (0, 2, 0): 1 + e^-1 + 1; shaping channels ignored
  {
    const double e1 = std::exp(-1.0);
    std::vector<std::vector<double>> rw = {{1.0, 9.0, 9.0}, {e1, 9.0, 9.0}, {1.0, 9.0, 9.0}};
    auto log = log_with_rewards(TaskId::dribble, rw);
    DrillSpec spec;
    spec.kind = TaskId::dribble;
    CHECK(drill_fitness(log, spec) == doctest::Approx(2.0 + e1));
  }
  // shoot with one goal: the scoring channel contributes exactly 1
  {
    std::vector<std::vector<double>> rw = {{0.0, 0.0, 0.5}, {0.0, 1.0, 0.5}};
    auto log = log_with_rewards(TaskId::shoot, rw);
    DrillSpec spec;
    spec.kind = TaskId::shoot;
    CHECK(drill_fitness(log, spec) == doctest::Approx(1.0));
  }
  // task mismatch is an error
  {
    auto log = log_with_rewards(TaskId::follow, {{1.0}});
    DrillSpec spec;
    spec.kind = TaskId::dribble;
    CHECK_THROWS_AS(drill_fitness(log, spec), SimError);
  }
}

TEST_CASE("shoot terminates within the contact budget") {
  RunConfig cfg;
  Rng rng(55);
  auto [spec, s] = spawn_drill(TaskId::shoot, rng, cfg);
  s.players[0].position = {0.0, 0.0};
  s.players[0].heading = 0.0;

  int contact_runs = 0;
  auto touch_ball_once = [&]() {
    // park the ball in kick range, kick it away, then let it separate
    s.players[0].position = {0.0, 0.0};
    s.players[0].heading = 0.0;
    s.players[0].speed = 0.0;
    s.players[0].velocity = {0.0, 0.0};
    s.ball.position = {0.3, 0.0};
    s.ball.velocity = {0.0, 0.0};
    std::vector<ActionCommand> kick(1);
    kick[0].kick = 0.5;
    StepResult r = step(s, kick, cfg);
    for (const auto& e : r.events)
      if (e.kind == EventKind::kick) ++contact_runs;
    // drift a few steps so the contact run ends
    std::vector<ActionCommand> idle(1);
    for (int t = 0; t < 5 && !s.terminal; ++t) step(s, idle, cfg);
  };

  for (int i = 0; i < 6 && !s.terminal; ++i) touch_ball_once();
  CHECK(s.context.contacts_used <= 3);
  CHECK(contact_runs <= 3);
  CHECK(s.terminal);
}
