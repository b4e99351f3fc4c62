#include <doctest.h>

#include <cmath>

#include "pitchlab/io/trajectory_log.hpp"
#include "pitchlab/sim/engine.hpp"

using namespace pitchlab;

namespace {

RunConfig base_cfg() { return RunConfig{}; }

std::vector<ActionCommand> zeros(size_t n) { return std::vector<ActionCommand>(n); }

bool states_equal(const GameState& a, const GameState& b) {
  if (a.players.size() != b.players.size()) return false;
  for (size_t i = 0; i < a.players.size(); ++i) {
    const auto &p = a.players[i], &q = b.players[i];
    if (p.position != q.position || p.velocity != q.velocity || p.heading != q.heading ||
        p.team != q.team)
      return false;
  }
  return a.ball.position == b.ball.position && a.ball.velocity == b.ball.velocity &&
         a.pitch.length == b.pitch.length && a.pitch.width == b.pitch.width &&
         a.score_home == b.score_home && a.score_away == b.score_away && a.step == b.step;
}

}  // namespace

TEST_CASE("football reset: pitch area, central spawn, zero velocities") {
  RunConfig cfg = base_cfg();
  for (uint64_t seed : {1ULL, 2ULL, 99ULL, 12345ULL}) {
    Rng rng(seed);
    GameState s = reset(TaskId::football, rng, cfg);
    CHECK(s.players.size() == 4);
    const double area_per_player = s.pitch.length * s.pitch.width / 4.0;
    CHECK(area_per_player >= 100.0);
    CHECK(area_per_player <= 350.0);
    CHECK(s.pitch.length / s.pitch.width == doctest::Approx(1.5).epsilon(1e-9));
    CHECK(s.score_home == 0);
    CHECK(s.score_away == 0);
    for (const auto& p : s.players) {
      CHECK(std::abs(p.position.x()) <= 0.35 * s.pitch.length + 2.0 * s.pitch.player_radius);
      CHECK(std::abs(p.position.y()) <= 0.35 * s.pitch.width + 2.0 * s.pitch.player_radius);
      CHECK(p.velocity.norm() == 0.0);
    }
    CHECK(std::abs(s.ball.position.x()) <= 0.35 * s.pitch.length);
    CHECK(std::abs(s.ball.position.y()) <= 0.35 * s.pitch.width);
    CHECK(s.ball.velocity.norm() == 0.0);
  }
}

TEST_CASE("follow reset: one player, moving target, no ball") {
  RunConfig cfg = base_cfg();
  Rng rng(5);
  GameState s = reset(TaskId::follow, rng, cfg);
  CHECK(s.players.size() == 1);
  CHECK(!s.has_ball);
  CHECK(!s.context.track.empty());
  const double area = s.pitch.length * s.pitch.width;
  CHECK(area >= 100.0);
  CHECK(area <= 350.0);
  // track defined for horizon + lookahead
  CHECK(static_cast<int>(s.context.track.positions.size()) >=
        s.horizon + s.context.track.lookahead_steps);
}

TEST_CASE("same seed gives bit-identical reset") {
  RunConfig cfg = base_cfg();
  for (TaskId task : {TaskId::football, TaskId::follow, TaskId::shoot}) {
    Rng a(77), b(77);
    GameState s1 = reset(task, a, cfg);
    GameState s2 = reset(task, b, cfg);
    CHECK(states_equal(s1, s2));
  }
}

TEST_CASE("zero actions and zero velocities leave positions unchanged") {
  RunConfig cfg = base_cfg();
  Rng rng(3);
  GameState s = reset(TaskId::football, rng, cfg);
  const GameState before = s;
  step(s, zeros(4), cfg);
  for (size_t i = 0; i < s.players.size(); ++i)
    CHECK((s.players[i].position - before.players[i].position).norm() == 0.0);
  CHECK((s.ball.position - before.ball.position).norm() == 0.0);
}

TEST_CASE("ball reflects off the touchline with restitution") {
  RunConfig cfg = base_cfg();
  cfg.sim.ball_drag = 0.0;  // isolate the reflection law
  Rng rng(11);
  GameState s = reset(TaskId::football, rng, cfg);
  // park players far from the ball path
  for (auto& p : s.players) p.position = {-s.pitch.half_length() * 0.9, 0.0};
  s.ball.position = {0.0, s.pitch.half_width() - s.pitch.ball_radius - 0.01};
  s.ball.velocity = {0.0, 2.0};
  step(s, zeros(4), cfg);
  CHECK(s.ball.velocity.x() == doctest::Approx(0.0));
  CHECK(s.ball.velocity.y() == doctest::Approx(-1.6).epsilon(1e-12));
  CHECK(std::abs(s.ball.position.y()) <= s.pitch.half_width());
}

TEST_CASE("goal through the away goal mouth scores for home and resets") {
  RunConfig cfg = base_cfg();
  Rng rng(13);
  GameState s = reset(TaskId::football, rng, cfg);
  for (auto& p : s.players) p.position = {-s.pitch.half_length() * 0.8, 3.0};
  s.ball.position = {s.pitch.half_length() - 0.05, 0.0};
  s.ball.velocity = {14.0, 0.0};
  StepResult r = step(s, zeros(4), cfg);
  CHECK(s.score_home == 1);
  CHECK(s.score_away == 0);
  bool saw_goal = false, saw_reset = false;
  for (const auto& e : r.events) {
    if (e.kind == EventKind::goal_home) saw_goal = true;
    if (e.kind == EventKind::reset) {
      CHECK(saw_goal);  // reset follows the goal
      saw_reset = true;
    }
  }
  CHECK(saw_goal);
  CHECK(saw_reset);
  for (size_t i = 0; i < s.players.size(); ++i) {
    CHECK(r.rewards[i][0] == (s.players[i].team == Team::home ? 1.0 : 0.0));
    CHECK(r.rewards[i][1] == (s.players[i].team == Team::home ? 0.0 : -1.0));
  }
  // scene respawned centrally with zero velocities
  CHECK(s.ball.velocity.norm() == 0.0);
}

TEST_CASE("non-finite actions are rejected") {
  RunConfig cfg = base_cfg();
  Rng rng(17);
  GameState s = reset(TaskId::football, rng, cfg);
  auto actions = zeros(4);
  actions[2].turn = std::nan("");
  CHECK_THROWS_AS(step(s, actions, cfg), SimError);
}

TEST_CASE("observe: egocentric frames") {
  RunConfig cfg = base_cfg();
  Rng rng(19);
  GameState s = reset(TaskId::football, rng, cfg);
  auto& p = s.players[0];
  p.position = {0.0, 0.0};
  p.velocity = {0.0, 0.0};
  p.speed = 0.0;
  s.ball.position = {3.0, 0.0};
  s.ball.velocity = {0.0, 0.0};

  p.heading = 0.0;  // facing +x
  ObservationVector obs = observe(s, 0, cfg);
  const ObsBlock* ball = obs.layout->find("ball");
  REQUIRE(ball != nullptr);
  CHECK(obs.values[ball->offset + 0] == doctest::Approx(3.0));
  CHECK(obs.values[ball->offset + 1] == doctest::Approx(0.0));

  p.heading = M_PI / 2.0;  // facing +y
  s.ball.position = {0.0, 3.0};
  obs = observe(s, 0, cfg);
  CHECK(obs.values[ball->offset + 0] == doctest::Approx(3.0));
  CHECK(obs.values[ball->offset + 1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("observation invariant under global rotation and translation") {
  RunConfig cfg = base_cfg();
  Rng rng(23);
  GameState s = reset(TaskId::football, rng, cfg);
  // give the scene motion
  for (auto& p : s.players) {
    p.speed = rng.uniform(0.0, 5.0);
    p.heading = rng.uniform(-M_PI, M_PI);
    p.velocity = p.speed * p.heading_dir();
  }
  s.ball.velocity = {rng.uniform(-3, 3), rng.uniform(-3, 3)};

  for (int trial = 0; trial < 10; ++trial) {
    const double phi = rng.uniform(-M_PI, M_PI);
    const Vec2 shift{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const double c = std::cos(phi), sn = std::sin(phi);
    auto rot = [&](const Vec2& v) { return Vec2{c * v.x() - sn * v.y(), sn * v.x() + c * v.y()}; };

    GameState t = s;
    for (auto& p : t.players) {
      p.position = rot(p.position) + shift;
      p.heading = wrap_angle(p.heading + phi);
      p.velocity = rot(p.velocity);
    }
    t.ball.position = rot(t.ball.position) + shift;
    t.ball.velocity = rot(t.ball.velocity);
    // note: the pitch does not rotate, so only rotation-invariant blocks
    // (proprio, ball relative to self, other players) can be compared.
    ObservationVector a = observe(s, 1, cfg);
    ObservationVector b = observe(t, 1, cfg);
    for (const char* block : {"proprio", "ball", "teammates", "opponents"}) {
      const ObsBlock* blk = a.layout->find(block);
      REQUIRE(blk != nullptr);
      for (int k = 0; k < blk->size; ++k)
        CHECK(a.values[blk->offset + k] ==
              doctest::Approx(b.values[blk->offset + k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("closest-velocity-to-ball pays only the team-closest player") {
  RunConfig cfg = base_cfg();
  Rng rng(29);
  GameState s = reset(TaskId::football, rng, cfg);
  // home players 0,1; away 2,3
  s.players[0].position = {0.0, 0.0};
  s.players[0].speed = 1.0;
  s.players[0].heading = 0.0;
  s.players[0].velocity = {1.0, 0.0};
  s.players[1].position = {-10.0, 5.0};
  s.players[1].velocity = {0.0, 0.0};
  s.players[2].position = {-10.0, -5.0};
  s.players[3].position = {-12.0, -5.0};
  s.ball.position = {2.0, 0.0};
  s.ball.velocity = {0.0, 0.0};

  auto r = compute_rewards(s, s, TaskId::football, cfg);
  CHECK(r[0][2] == doctest::Approx(1.0));
  CHECK(r[1][2] == 0.0);
  // ball stationary: vel_ball_to_goal is 0 for everyone
  for (int i = 0; i < 4; ++i) CHECK(r[i][3] == 0.0);

  // now the teammate is closer: player 0 gets nothing
  s.players[1].position = {1.0, 0.0};
  r = compute_rewards(s, s, TaskId::football, cfg);
  CHECK(r[0][2] == 0.0);
}

TEST_CASE("determinism: same seed and actions give identical trajectories") {
  RunConfig cfg = base_cfg();
  auto run = [&](uint64_t seed) {
    Rng rng(seed);
    GameState s = reset(TaskId::football, rng, cfg);
    TrajectoryLog log;
    log.header = make_log_header(s, seed, config_hash(cfg));
    Rng act_rng(seed + 1);
    for (int t = 0; t < 120 && !s.terminal; ++t) {
      std::vector<ActionCommand> actions(4);
      for (auto& a : actions) {
        a.forward = act_rng.uniform(-1, 1);
        a.turn = act_rng.uniform(-1, 1);
        a.kick = act_rng.uniform(0, 1);
      }
      StepResult r = step(s, actions, cfg);
      log.append(s, actions, r);
    }
    return log_hash(log);
  };
  CHECK(run(404) == run(404));
  CHECK(run(404) != run(405));
}

TEST_CASE("ball stays inside the pitch unless a goal fired") {
  RunConfig cfg = base_cfg();
  Rng rng(31);
  GameState s = reset(TaskId::football, rng, cfg);
  Rng act_rng(32);
  for (int t = 0; t < 600 && !s.terminal; ++t) {
    std::vector<ActionCommand> actions(4);
    for (auto& a : actions) {
      a.forward = act_rng.uniform(-1, 1);
      a.turn = act_rng.uniform(-1, 1);
      a.kick = act_rng.uniform(0, 1);
    }
    StepResult r = step(s, actions, cfg);
    bool goal = false;
    for (const auto& e : r.events)
      if (e.kind == EventKind::goal_home || e.kind == EventKind::goal_away) goal = true;
    if (!goal) {
      CHECK(std::abs(s.ball.position.x()) <= s.pitch.half_length() + 1e-9);
      CHECK(std::abs(s.ball.position.y()) <= s.pitch.half_width() + 1e-9);
    }
    for (const auto& p : s.players) CHECK(std::abs(p.speed) <= cfg.sim.v_max + 1e-9);
  }
}

TEST_CASE("reward bookkeeping: scoring sums equal goals") {
  RunConfig cfg = base_cfg();
  Rng rng(37);
  GameState s = reset(TaskId::football, rng, cfg);
  Rng act_rng(38);
  double scoring_sum_home = 0.0, conceding_sum_away = 0.0;
  int home_goals = 0, away_goals = 0;
  for (int t = 0; t < 1500 && !s.terminal; ++t) {
    std::vector<ActionCommand> actions(4);
    for (auto& a : actions) {
      a.forward = act_rng.uniform(-1, 1);
      a.turn = act_rng.uniform(-1, 1);
      a.kick = act_rng.uniform(0, 1);
    }
    // occasionally shove the ball toward a goal to force scoring
    if (t % 200 == 100) {
      s.ball.position = {s.pitch.half_length() - 0.2, 0.0};
      s.ball.velocity = {12.0, 0.0};
    }
    StepResult r = step(s, actions, cfg);
    scoring_sum_home += r.rewards[0][0];
    conceding_sum_away += r.rewards[2][1];
    for (const auto& e : r.events) {
      if (e.kind == EventKind::goal_home) ++home_goals;
      if (e.kind == EventKind::goal_away) ++away_goals;
    }
  }
  CHECK(home_goals > 0);
  CHECK(scoring_sum_home == doctest::Approx(home_goals));
  CHECK(conceding_sum_away == doctest::Approx(-home_goals));
  CHECK(s.score_home == home_goals);
  CHECK(s.score_away == away_goals);
}

TEST_CASE("energy sanity: coasting ball slows down between wall contacts") {
  RunConfig cfg = base_cfg();
  Rng rng(41);
  GameState s = reset(TaskId::football, rng, cfg);
  for (auto& p : s.players) p.position = {-s.pitch.half_length() * 0.9, -s.pitch.half_width() * 0.9};
  s.ball.position = {0.0, 0.0};
  s.ball.velocity = {3.0, 1.0};
  double prev_speed = s.ball.velocity.norm();
  for (int t = 0; t < 200; ++t) {
    const Vec2 before_v = s.ball.velocity;
    step(s, zeros(4), cfg);
    const bool bounced = (before_v.x() > 0) != (s.ball.velocity.x() > 0) ||
                         (before_v.y() > 0) != (s.ball.velocity.y() > 0);
    if (!bounced) CHECK(s.ball.velocity.norm() <= prev_speed + 1e-12);
    prev_speed = s.ball.velocity.norm();
  }
}

TEST_CASE("kick sends the ball along the heading") {
  RunConfig cfg = base_cfg();
  Rng rng(43);
  GameState s = reset(TaskId::football, rng, cfg);
  for (size_t i = 1; i < s.players.size(); ++i) s.players[i].position = {-15.0, -5.0};
  s.players[0].position = {0.0, 0.0};
  s.players[0].heading = 0.0;
  s.ball.position = {0.3, 0.0};
  s.ball.velocity = {0.0, 0.0};
  auto actions = zeros(4);
  actions[0].kick = 1.0;
  StepResult r = step(s, actions, cfg);
  bool saw_kick = false;
  for (const auto& e : r.events)
    if (e.kind == EventKind::kick && e.actor == 0) saw_kick = true;
  CHECK(saw_kick);
  CHECK(s.ball.velocity.x() > 10.0);
  CHECK(s.ball.velocity.y() == doctest::Approx(0.0));
  CHECK(s.ball.last_toucher == 0);
}
