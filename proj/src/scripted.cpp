#include "pitchlab/sim/scripted.hpp"

#include <cmath>

namespace pitchlab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

ActionCommand steer_towards(const PlayerState& p, const Vec2& target, double speed_scale) {
  const Vec2 d = target - p.position;
  ActionCommand a;
  if (d.norm() < 1e-9) return a;
  const double bearing = std::atan2(d.y(), d.x());
  const double err = wrap_angle(bearing - p.heading);
  a.turn = std::clamp(2.0 * err, -1.0, 1.0);
  // push forward when roughly aligned, brake when the target is behind
  a.forward = std::clamp(speed_scale * std::cos(err), -1.0, 1.0);
  return a;
}

namespace {

class Waypoint final : public ScriptedController {
 public:
  void reset(const GameState& s, Rng& rng) override { pick(s, rng); }
  ActionCommand act(const GameState& s, int player, Rng& rng) override {
    const auto& p = s.players[player];
    if ((p.position - goal_).norm() < 1.0) pick(s, rng);
    return steer_towards(p, goal_);
  }
  const char* name() const override { return "waypoint"; }

 private:
  void pick(const GameState& s, Rng& rng) {
    goal_ = {rng.uniform(-0.4, 0.4) * s.pitch.length, rng.uniform(-0.4, 0.4) * s.pitch.width};
  }
  Vec2 goal_{0, 0};
};

class DashTurn final : public ScriptedController {
 public:
  void reset(const GameState&, Rng& rng) override { resample(rng); }
  ActionCommand act(const GameState&, int, Rng& rng) override {
    if (steps_left_-- <= 0) resample(rng);
    ActionCommand a;
    if (dashing_) {
      a.forward = forward_;
    } else {
      a.turn = turn_;
      a.forward = -0.2;  // bleed speed while turning
    }
    return a;
  }
  const char* name() const override { return "dash_turn"; }

 private:
  void resample(Rng& rng) {
    dashing_ = !dashing_;
    steps_left_ = 10 + static_cast<int>(rng.uniform_int(40));
    forward_ = rng.uniform(0.3, 1.0);
    turn_ = rng.uniform(-1.0, 1.0);
  }
  bool dashing_ = false;
  int steps_left_ = 0;
  double forward_ = 0.5, turn_ = 0.0;
};

class BallApproach final : public ScriptedController {
 public:
  ActionCommand act(const GameState& s, int player, Rng& rng) override {
    const auto& p = s.players[player];
    if (!s.has_ball) return steer_towards(p, Vec2{0, 0});
    const double d = (s.ball.position - p.position).norm();
    ActionCommand a = steer_towards(p, s.ball.position, d > 3.0 ? 1.0 : 0.4);
    if (d < 0.45) a.kick = rng.uniform(0.05, 0.3);  // nudge, do not blast
    return a;
  }
  const char* name() const override { return "ball_approach"; }
};

class RandomWalk final : public ScriptedController {
 public:
  ActionCommand act(const GameState&, int, Rng& rng) override {
    ActionCommand a;
    a.forward = rng.uniform(-1, 1);
    a.turn = rng.uniform(-1, 1);
    a.kick = rng.uniform(0, 1);
    return a;
  }
  const char* name() const override { return "random"; }
};

class Chaser final : public ScriptedController {
 public:
  ActionCommand act(const GameState& s, int player, Rng& rng) override {
    const auto& p = s.players[player];
    ActionCommand a = steer_towards(p, s.ball.position);
    if ((s.ball.position - p.position).norm() < 0.45) a.kick = rng.uniform(0.6, 1.0);
    return a;
  }
  const char* name() const override { return "chaser"; }
};

// Runs behind the ball so a kick is roughly goal-aligned, then kicks hard.
class Striker final : public ScriptedController {
 public:
  ActionCommand act(const GameState& s, int player, Rng&) override {
    const auto& p = s.players[player];
    const Team opponent = p.team == Team::home ? Team::away : Team::home;
    const Vec2 goal = goal_center(s.pitch, opponent);
    const Vec2 ball_to_goal = (goal - s.ball.position).normalized();
    const Vec2 stance = s.ball.position - 0.35 * ball_to_goal;
    const double d = (s.ball.position - p.position).norm();
    ActionCommand a;
    if (d > 0.8) {
      a = steer_towards(p, stance);
    } else {
      // close: face the goal through the ball and strike
      a = steer_towards(p, s.ball.position, 0.5);
      const double align = std::cos(wrap_angle(std::atan2(ball_to_goal.y(), ball_to_goal.x()) -
                                               p.heading));
      if (d < 0.45 && align > 0.6) a.kick = 1.0;
    }
    return a;
  }
  const char* name() const override { return "striker"; }
};

class Statue final : public ScriptedController {
 public:
  ActionCommand act(const GameState&, int, Rng&) override { return {}; }
  const char* name() const override { return "statue"; }
};

// Probe-task oracles. The teammate closest to the ball creeps into the kick
// zone with a speed servo (never brushing the ball), turns toward the wing
// (correct/wrong relative to the receiver, or a random direction), and
// kicks at full strength only when aligned. The other clone stands still.
class ProbePasser final : public ScriptedController {
 public:
  enum class Aim { correct, wrong, random };
  explicit ProbePasser(Aim aim) : aim_(aim) {}

  void reset(const GameState&, Rng& rng) override {
    random_wing_ = rng.uniform() < 0.5 ? 1.0 : -1.0;
  }

  ActionCommand act(const GameState& s, int player, Rng&) override {
    const auto& p = s.players[player];
    const PlayerState* mate = nullptr;
    for (const auto& other : s.players)
      if (other.index != player && other.team == p.team) mate = &other;
    // only the closer clone plays passer; the other keeps out of the play
    if (mate && (mate->position - s.ball.position).norm() <
                    (p.position - s.ball.position).norm())
      return {};

    const double d = (s.ball.position - p.position).norm();
    ActionCommand a;
    if (d > 0.47) {
      // creep toward the ball, speed-servoed to stop inside the kick zone
      a = steer_towards(p, s.ball.position);
      const double v_des = std::min(1.5, 2.0 * (d - 0.45));
      a.forward = std::clamp((v_des - p.speed) / (12.0 * 0.03), -1.0, 1.0);
      return a;
    }
    // in the zone: face the aim point and strike
    const double wing = mate ? (mate->position.y() >= 0 ? 1.0 : -1.0) : 1.0;
    double aim_y = 0.0;
    switch (aim_) {
      case Aim::correct: aim_y = wing * 0.4 * s.pitch.width; break;
      case Aim::wrong: aim_y = -wing * 0.4 * s.pitch.width; break;
      case Aim::random: aim_y = random_wing_ * 0.4 * s.pitch.width; break;
    }
    const double attack_sign = p.team == Team::home ? 1.0 : -1.0;
    const Vec2 aim{p.position.x() + attack_sign * 0.3 * s.pitch.length, aim_y};
    const Vec2 to_aim = aim - p.position;
    const double err = wrap_angle(std::atan2(to_aim.y(), to_aim.x()) - p.heading);
    a.turn = std::clamp(2.0 * err, -1.0, 1.0);
    a.forward = std::clamp(-p.speed / (12.0 * 0.03), -1.0, 1.0);  // hold position
    if (std::abs(err) < 0.05) a.kick = 1.0;
    return a;
  }
  const char* name() const override {
    switch (aim_) {
      case Aim::correct: return "passer_correct";
      case Aim::wrong: return "passer_wrong";
      case Aim::random: return "passer_random";
    }
    return "?";
  }

 private:
  Aim aim_;
  double random_wing_ = 1.0;
};

}  // namespace

std::unique_ptr<ScriptedController> make_scripted(const std::string& kind, uint64_t seed) {
  (void)seed;
  if (kind == "waypoint") return std::make_unique<Waypoint>();
  if (kind == "dash_turn") return std::make_unique<DashTurn>();
  if (kind == "ball_approach") return std::make_unique<BallApproach>();
  if (kind == "random") return std::make_unique<RandomWalk>();
  if (kind == "chaser") return std::make_unique<Chaser>();
  if (kind == "striker") return std::make_unique<Striker>();
  if (kind == "statue") return std::make_unique<Statue>();
  if (kind == "passer_correct") return std::make_unique<ProbePasser>(ProbePasser::Aim::correct);
  if (kind == "passer_wrong") return std::make_unique<ProbePasser>(ProbePasser::Aim::wrong);
  if (kind == "passer_random") return std::make_unique<ProbePasser>(ProbePasser::Aim::random);
  throw SimError("unknown scripted controller '" + kind + "'");
}

}  // namespace pitchlab
