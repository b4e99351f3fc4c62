#include "pitchlab/sim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>

namespace pitchlab {

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec2 rotate_into(double heading, const Vec2& v) {
  const double c = std::cos(heading), s = std::sin(heading);
  return {c * v.x() + s * v.y(), -s * v.x() + c * v.y()};
}

Vec2 unit_towards(const Vec2& from, const Vec2& to) {
  const Vec2 d = to - from;
  const double n = d.norm();
  if (n < 1e-9) return {0.0, 0.0};
  return d / n;
}

int closest_in_team(const GameState& s, Team team) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& p : s.players) {
    if (p.team != team) continue;
    const double d = (p.position - s.ball.position).norm();
    if (d < best_d) {
      best_d = d;
      best = p.index;
    }
  }
  return best;
}

}  // namespace

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

const char* task_name(TaskId task) {
  switch (task) {
    case TaskId::football: return "football";
    case TaskId::follow: return "follow";
    case TaskId::dribble: return "dribble";
    case TaskId::shoot: return "shoot";
    case TaskId::kick_to_target: return "kick_to_target";
  }
  return "?";
}

TaskId task_from_name(const std::string& name) {
  for (TaskId t : {TaskId::football, TaskId::follow, TaskId::dribble, TaskId::shoot,
                   TaskId::kick_to_target})
    if (name == task_name(t)) return t;
  throw SimError("unknown task '" + name + "'");
}

const char* event_kind_name(EventKind kind) {
  switch (kind) {
    case EventKind::goal_home: return "goal_home";
    case EventKind::goal_away: return "goal_away";
    case EventKind::touch: return "touch";
    case EventKind::kick: return "kick";
    case EventKind::reset: return "reset";
  }
  return "?";
}

EventKind event_kind_from_name(const std::string& name) {
  for (EventKind k : {EventKind::goal_home, EventKind::goal_away, EventKind::touch,
                      EventKind::kick, EventKind::reset})
    if (name == event_kind_name(k)) return k;
  throw SimError("unknown event kind '" + name + "'");
}

double quantize9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

ActionCommand ActionCommand::clamped() const {
  ActionCommand a;
  a.forward = std::clamp(forward, -1.0, 1.0);
  a.turn = std::clamp(turn, -1.0, 1.0);
  a.kick = std::clamp(kick, 0.0, 1.0);
  return a;
}

ActionCommand ActionCommand::quantized() const {
  ActionCommand a = clamped();
  a.forward = quantize9(a.forward);
  a.turn = quantize9(a.turn);
  a.kick = quantize9(a.kick);
  return a;
}

bool ActionCommand::finite() const {
  return std::isfinite(forward) && std::isfinite(turn) && std::isfinite(kick);
}

const std::vector<std::string>& reward_channel_names(TaskId task) {
  static const std::vector<std::string> football = {"scoring", "conceding", "closest_vel_to_ball",
                                                    "vel_ball_to_goal"};
  static const std::vector<std::string> follow = {"close_to_target"};
  static const std::vector<std::string> dribble = {"ball_close_to_target", "vel_player_to_ball",
                                                   "vel_ball_to_target"};
  static const std::vector<std::string> shoot = {"vel_ball_to_goal", "scoring",
                                                 "vel_player_to_ball"};
  static const std::vector<std::string> ktt = {"ball_close_to_target", "vel_player_to_ball",
                                               "vel_ball_to_target"};
  switch (task) {
    case TaskId::football: return football;
    case TaskId::follow: return follow;
    case TaskId::dribble: return dribble;
    case TaskId::shoot: return shoot;
    case TaskId::kick_to_target: return ktt;
  }
  return football;
}

int reward_channel_count(TaskId task) {
  return static_cast<int>(reward_channel_names(task).size());
}

const std::vector<int>& fitness_channels(TaskId task) {
  static const std::vector<int> follow = {0};
  static const std::vector<int> dribble = {0};
  static const std::vector<int> shoot = {0, 1};  // vel_ball_to_goal and scoring
  static const std::vector<int> ktt = {0};
  static const std::vector<int> football = {};  // terminal win/loss, not channel sums
  switch (task) {
    case TaskId::football: return football;
    case TaskId::follow: return follow;
    case TaskId::dribble: return dribble;
    case TaskId::shoot: return shoot;
    case TaskId::kick_to_target: return ktt;
  }
  return football;
}

const ObsBlock* ObsLayout::find(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return &b;
  return nullptr;
}

int task_horizon(TaskId task, const RunConfig& cfg) {
  double seconds = 0.0;
  switch (task) {
    case TaskId::football: seconds = cfg.sim.match_seconds; break;
    case TaskId::follow: seconds = cfg.drill.follow_horizon_s; break;
    case TaskId::dribble: seconds = cfg.drill.dribble_horizon_s; break;
    case TaskId::shoot: seconds = cfg.drill.shoot_horizon_s; break;
    case TaskId::kick_to_target:
      // resolved per-episode: window + extra; this is the max
      seconds = cfg.drill.window_max_s + cfg.drill.ktt_extra_s;
      break;
  }
  return static_cast<int>(std::llround(seconds / cfg.sim.dt));
}

PitchSpec sample_pitch(const RunConfig& cfg, int n_players, Rng& rng) {
  const double area =
      n_players * rng.uniform(cfg.sim.area_per_player_min, cfg.sim.area_per_player_max);
  PitchSpec p;
  p.width = std::sqrt(area / cfg.sim.aspect_ratio);
  p.length = cfg.sim.aspect_ratio * p.width;
  p.goal_width = cfg.sim.goal_width;
  p.hoarding_margin = cfg.sim.hoarding_margin;
  p.ball_radius = cfg.sim.ball_radius;
  p.player_radius = cfg.sim.player_radius;
  return p;
}

Vec2 goal_center(const PitchSpec& pitch, Team defending_team) {
  // home defends the -x goal and attacks +x
  return {defending_team == Team::home ? -pitch.half_length() : pitch.half_length(), 0.0};
}

namespace {

Vec2 sample_central(const PitchSpec& pitch, double fraction, Rng& rng) {
  const double hx = 0.5 * fraction * pitch.length;
  const double hy = 0.5 * fraction * pitch.width;
  return {rng.uniform(-hx, hx), rng.uniform(-hy, hy)};
}

TargetTrack make_target_track(Rng& rng, const PitchSpec& pitch, const RunConfig& cfg,
                              int total_steps, int lookahead_steps) {
  TargetTrack track;
  track.speed = rng.uniform(cfg.drill.target_speed_min, cfg.drill.target_speed_max);
  track.lookahead_steps = lookahead_steps;
  track.positions.reserve(total_steps + lookahead_steps + 1);

  Vec2 pos = sample_central(pitch, cfg.sim.spawn_fraction, rng);
  double heading = rng.uniform(-kPi, kPi);
  int remaining = 0;
  const double margin = 1.0;
  const double hx = pitch.half_length() - margin;
  const double hy = pitch.half_width() - margin;

  track.positions.push_back(pos);
  for (int t = 0; t < total_steps + lookahead_steps; ++t) {
    if (remaining <= 0) {
      heading = rng.uniform(-kPi, kPi);
      remaining = static_cast<int>(
          std::llround(rng.uniform(cfg.drill.segment_min_s, cfg.drill.segment_max_s) / cfg.sim.dt));
      remaining = std::max(remaining, 1);
    }
    Vec2 dir{std::cos(heading), std::sin(heading)};
    Vec2 next = pos + track.speed * cfg.sim.dt * dir;
    if (std::abs(next.x()) > hx) {
      heading = wrap_angle(kPi - heading);
      dir = Vec2{std::cos(heading), std::sin(heading)};
      next = pos + track.speed * cfg.sim.dt * dir;
    }
    if (std::abs(next.y()) > hy) {
      heading = wrap_angle(-heading);
      dir = Vec2{std::cos(heading), std::sin(heading)};
      next = pos + track.speed * cfg.sim.dt * dir;
    }
    pos = next;
    track.positions.push_back(pos);
    --remaining;
  }
  return track;
}

void separate_players(GameState& state) {
  const double min_dist = 2.0 * state.pitch.player_radius;
  const int n = static_cast<int>(state.players.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Vec2 d = state.players[j].position - state.players[i].position;
      double dist = d.norm();
      if (dist >= min_dist) continue;
      Vec2 dir = dist < 1e-9 ? Vec2{1.0, 0.0} : Vec2(d / dist);
      const double push = 0.5 * (min_dist - dist);
      state.players[i].position -= push * dir;
      state.players[j].position += push * dir;
    }
  }
}

void clamp_to_hoardings(PlayerState& p, const PitchSpec& pitch) {
  const double hx = pitch.half_length() + pitch.hoarding_margin - pitch.player_radius;
  const double hy = pitch.half_width() + pitch.hoarding_margin - pitch.player_radius;
  p.position.x() = std::clamp(p.position.x(), -hx, hx);
  p.position.y() = std::clamp(p.position.y(), -hy, hy);
}

}  // namespace

void spawn_scene(GameState& state, Rng& rng, const RunConfig& cfg) {
  for (auto& p : state.players) {
    p.position = sample_central(state.pitch, cfg.sim.spawn_fraction, rng);
    p.heading = rng.uniform(-kPi, kPi);
    p.speed = 0.0;
    p.velocity = {0.0, 0.0};
    p.prev_action = ActionCommand{};
  }
  separate_players(state);
  if (state.has_ball) {
    state.ball.position = sample_central(state.pitch, cfg.sim.spawn_fraction, rng);
    state.ball.velocity = {0.0, 0.0};
    state.ball.last_toucher = -1;
  } else {
    state.ball = BallState{};
  }
}

GameState reset(TaskId task, Rng& rng, const RunConfig& cfg) {
  GameState state;
  state.task = task;

  const int n_players = task == TaskId::football ? 2 * cfg.sim.players_per_team : 1;
  state.pitch = sample_pitch(cfg, n_players, rng);
  state.players.resize(n_players);
  for (int i = 0; i < n_players; ++i) {
    state.players[i].index = i;
    state.players[i].team =
        (task == TaskId::football && i >= cfg.sim.players_per_team) ? Team::away : Team::home;
  }
  state.has_ball = task != TaskId::follow;
  state.horizon = task_horizon(task, cfg);

  spawn_scene(state, rng, cfg);

  const int lookahead_steps =
      static_cast<int>(std::llround(cfg.drill.lookahead_s / cfg.sim.dt));
  switch (task) {
    case TaskId::football:
      break;
    case TaskId::follow:
    case TaskId::dribble:
      state.context.track =
          make_target_track(rng, state.pitch, cfg, state.horizon, lookahead_steps);
      break;
    case TaskId::shoot:
      state.context.contact_budget = cfg.drill.shoot_contact_budget;
      break;
    case TaskId::kick_to_target: {
      state.context.window_s = rng.uniform(cfg.drill.window_min_s, cfg.drill.window_max_s);
      state.horizon = static_cast<int>(
          std::llround((state.context.window_s + cfg.drill.ktt_extra_s) / cfg.sim.dt));
      Vec2 target = sample_central(state.pitch, cfg.sim.spawn_fraction, rng);
      for (int tries = 0; tries < 100 && (target - state.ball.position).norm() < 8.0; ++tries)
        target = sample_central(state.pitch, cfg.sim.spawn_fraction, rng);
      state.context.static_target = target;
      break;
    }
  }

  state.rng = Rng(rng.next_u64());
  return state;
}

namespace {

// Dense shaping channels are pure functions of the successor snapshot.
std::vector<RewardVector> dense_rewards(const GameState& next, TaskId task) {
  const int n = static_cast<int>(next.players.size());
  std::vector<RewardVector> out(n, RewardVector(reward_channel_count(task), 0.0));

  auto vel_towards = [](const Vec2& vel, const Vec2& from, const Vec2& to) {
    return vel.dot(unit_towards(from, to));
  };

  switch (task) {
    case TaskId::football: {
      const int closest_home = closest_in_team(next, Team::home);
      const int closest_away = closest_in_team(next, Team::away);
      for (int i = 0; i < n; ++i) {
        const auto& p = next.players[i];
        if (i == closest_home || i == closest_away) {
          out[i][2] = vel_towards(p.velocity, p.position, next.ball.position);
        }
        const Team opponent = p.team == Team::home ? Team::away : Team::home;
        const Vec2 attack_goal = goal_center(next.pitch, opponent);
        out[i][3] = vel_towards(next.ball.velocity, next.ball.position, attack_goal);
      }
      break;
    }
    case TaskId::follow: {
      const Vec2 target = next.context.track.at(next.step);
      out[0][0] = std::exp(-0.5 * (next.players[0].position - target).norm());
      break;
    }
    case TaskId::dribble: {
      const Vec2 target = next.context.track.at(next.step);
      const auto& p = next.players[0];
      out[0][0] = std::exp(-0.5 * (next.ball.position - target).norm());
      out[0][1] = vel_towards(p.velocity, p.position, next.ball.position);
      out[0][2] = vel_towards(next.ball.velocity, next.ball.position, target);
      break;
    }
    case TaskId::shoot: {
      const auto& p = next.players[0];
      const Vec2 attack_goal = goal_center(next.pitch, Team::away);
      out[0][0] = vel_towards(next.ball.velocity, next.ball.position, attack_goal);
      out[0][2] = vel_towards(p.velocity, p.position, next.ball.position);
      break;
    }
    case TaskId::kick_to_target: {
      const auto& p = next.players[0];
      const Vec2 target = next.context.static_target;
      out[0][0] = std::exp(-(next.ball.position - target).norm() / 5.0);
      out[0][1] = vel_towards(p.velocity, p.position, next.ball.position);
      out[0][2] = vel_towards(next.ball.velocity, next.ball.position, target);
      break;
    }
  }
  return out;
}

}  // namespace

std::vector<RewardVector> compute_rewards(const GameState& prev, const GameState& next, TaskId task,
                                          const RunConfig& cfg) {
  (void)prev;  // channels are snapshot-based; prev anchors the step pairing
  (void)cfg;
  return dense_rewards(next, task);
}

StepResult step(GameState& state, std::span<const ActionCommand> actions, const RunConfig& cfg) {
  if (state.terminal) throw SimError("step() on a terminal state");
  if (actions.size() != state.players.size())
    throw SimError("action count does not match player count");
  for (const auto& a : actions)
    if (!a.finite()) throw SimError("non-finite action component");

  StepResult result;
  const double dt = cfg.sim.dt;

  // players: unicycle update
  for (size_t i = 0; i < state.players.size(); ++i) {
    auto& p = state.players[i];
    const ActionCommand a = actions[i].quantized();
    p.heading = wrap_angle(p.heading + a.turn * cfg.sim.turn_max * dt);
    p.speed = std::clamp(p.speed + a.forward * cfg.sim.a_max * dt, -cfg.sim.v_max, cfg.sim.v_max);
    const Vec2 dir = p.heading_dir();
    p.position += p.speed * dt * dir;
    p.velocity = p.speed * dir;
    clamp_to_hoardings(p, state.pitch);
    p.prev_action = a;
  }
  separate_players(state);

  // ball contacts and kicks
  bool goal_scored = false;
  Team scoring_team = Team::home;
  if (state.has_ball) {
    const bool ktt_window_open =
        state.task != TaskId::kick_to_target || state.step * dt <= state.context.window_s;

    int kicker = -1;
    double kicker_dist = std::numeric_limits<double>::infinity();
    std::vector<int> contacts;
    const double contact_dist = state.pitch.player_radius + state.pitch.ball_radius;
    for (const auto& p : state.players) {
      const double d = (p.position - state.ball.position).norm();
      if (ktt_window_open && p.prev_action.kick > 1e-6 && d <= cfg.sim.kick_radius && d < kicker_dist) {
        kicker = p.index;
        kicker_dist = d;
      }
      if (d < contact_dist) contacts.push_back(p.index);
    }
    const bool touching_now = kicker >= 0 || !contacts.empty();

    bool allow_contact = true;
    if (state.task == TaskId::shoot && touching_now && !state.context.in_contact_run &&
        state.context.contacts_used >= state.context.contact_budget) {
      // contact budget spent: the episode ends instead of a fourth touch
      state.terminal = true;
      allow_contact = false;
    }

    if (allow_contact && touching_now) {
      if (state.task == TaskId::shoot && !state.context.in_contact_run)
        ++state.context.contacts_used;

      if (kicker >= 0) {
        const auto& p = state.players[kicker];
        state.ball.velocity = p.prev_action.kick * cfg.sim.v_kick_max * p.heading_dir();
        state.ball.last_toucher = kicker;
        state.players[kicker].last_touch_step = state.step;
        result.events.push_back({state.step, EventKind::kick, kicker});
        result.events.push_back({state.step, EventKind::touch, kicker});
      } else {
        for (int id : contacts) {
          auto& p = state.players[id];
          Vec2 n = state.ball.position - p.position;
          const double dist = n.norm();
          n = dist < 1e-9 ? Vec2(p.heading_dir()) : Vec2(n / dist);
          const Vec2 rel = state.ball.velocity - p.velocity;
          const double approach = rel.dot(n);
          if (approach < 0.0)
            state.ball.velocity = p.velocity + rel - 2.0 * approach * n;
          state.ball.position = p.position + contact_dist * n;
          state.ball.last_toucher = id;
          p.last_touch_step = state.step;
          result.events.push_back({state.step, EventKind::touch, id});
        }
      }
    }
    if (state.task == TaskId::shoot)
      state.context.in_contact_run = touching_now && allow_contact;

    // ball flight with drag, then boundary handling
    state.ball.velocity *= std::exp(-cfg.sim.ball_drag * dt);
    state.ball.position += state.ball.velocity * dt;

    const double rx = state.pitch.half_length() - state.pitch.ball_radius;
    const double ry = state.pitch.half_width() - state.pitch.ball_radius;
    const double mouth = 0.5 * state.pitch.goal_width;
    const double e = cfg.sim.restitution;
    auto& ball = state.ball;

    if (std::abs(ball.position.y()) > ry) {
      const double s = ball.position.y() > 0 ? 1.0 : -1.0;
      ball.position.y() = s * ry - e * (ball.position.y() - s * ry);
      ball.velocity.y() = -e * ball.velocity.y();
    }
    if (std::abs(ball.position.x()) > rx) {
      const double s = ball.position.x() > 0 ? 1.0 : -1.0;
      const bool in_mouth = std::abs(ball.position.y()) <= mouth;
      // drills only attack the +x goal; every other line is a wall
      const bool goal_line_active =
          state.task == TaskId::football || (state.task == TaskId::shoot && s > 0);
      if (in_mouth && goal_line_active) {
        if (std::abs(ball.position.x()) >= state.pitch.half_length()) {
          goal_scored = true;
          scoring_team = s > 0 ? Team::home : Team::away;
        }
      } else {
        ball.position.x() = s * rx - e * (ball.position.x() - s * rx);
        ball.velocity.x() = -e * ball.velocity.x();
      }
    }
  }

  ++state.step;

  // rewards
  const int n = static_cast<int>(state.players.size());
  result.rewards.assign(n, RewardVector(reward_channel_count(state.task), 0.0));
  if (goal_scored) {
    if (state.task == TaskId::football) {
      for (int i = 0; i < n; ++i) {
        const bool scored = state.players[i].team == scoring_team;
        result.rewards[i][0] = scored ? 1.0 : 0.0;
        result.rewards[i][1] = scored ? 0.0 : -1.0;
      }
      if (scoring_team == Team::home) {
        ++state.score_home;
        result.events.push_back({state.step - 1, EventKind::goal_home, state.ball.last_toucher});
      } else {
        ++state.score_away;
        result.events.push_back({state.step - 1, EventKind::goal_away, state.ball.last_toucher});
      }
      result.events.push_back({state.step - 1, EventKind::reset, -1});
      spawn_scene(state, state.rng, cfg);
    } else {
      // shoot: scoring channel, then the drill is over
      ++state.score_home;
      result.rewards[0][1] = 1.0;
      result.events.push_back({state.step - 1, EventKind::goal_home, state.ball.last_toucher});
      state.terminal = true;
    }
  } else {
    result.rewards = dense_rewards(state, state.task);
  }

  if (state.step >= state.horizon) state.terminal = true;
  if (state.task == TaskId::shoot && !state.terminal &&
      state.context.contacts_used >= state.context.contact_budget &&
      !state.context.in_contact_run && state.ball.velocity.norm() < cfg.drill.dead_ball_speed) {
    state.terminal = true;  // budget spent and the ball has died
  }
  return result;
}

namespace {

ObsLayout build_layout(TaskId task, int players_per_team) {
  ObsLayout layout;
  layout.task = task;
  auto add = [&](const std::string& name, int size) {
    layout.blocks.push_back({name, layout.dim, size});
    layout.dim += size;
  };
  add("proprio", 6);
  switch (task) {
    case TaskId::football:
      add("ball", 4);
      add("goals", 4);
      add("pitch", 3);
      add("teammates", 4 * (players_per_team - 1));
      add("opponents", 4 * players_per_team);
      break;
    case TaskId::follow:
      add("target", 4);
      break;
    case TaskId::dribble:
      add("ball", 4);
      add("target", 4);
      break;
    case TaskId::shoot:
      add("ball", 4);
      add("goals", 4);
      add("pitch", 3);
      add("budget", 1);
      break;
    case TaskId::kick_to_target:
      add("ball", 4);
      add("target", 2);
      add("window", 1);
      break;
  }
  return layout;
}

}  // namespace

const ObsLayout& obs_layout(TaskId task, const RunConfig& cfg) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, ObsLayout> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_pair(static_cast<int>(task), cfg.sim.players_per_team);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, build_layout(task, cfg.sim.players_per_team)).first;
  return it->second;
}

ObservationVector observe(const GameState& state, int player, const RunConfig& cfg) {
  if (player < 0 || player >= static_cast<int>(state.players.size()))
    throw SimError("observe(): no such player");
  const auto& layout = obs_layout(state.task, cfg);
  const auto& self = state.players[player];

  ObservationVector obs;
  obs.layout = &layout;
  obs.values.resize(layout.dim);
  int k = 0;
  auto put = [&](double v) { obs.values[k++] = v; };
  auto put_vec = [&](const Vec2& v) {
    obs.values[k++] = v.x();
    obs.values[k++] = v.y();
  };
  auto ego_point = [&](const Vec2& world) {
    return rotate_into(self.heading, world - self.position);
  };
  auto ego_dir = [&](const Vec2& world) { return rotate_into(self.heading, world); };

  // proprio
  put_vec(ego_dir(self.velocity));
  put(self.speed);
  put(self.prev_action.forward);
  put(self.prev_action.turn);
  put(self.prev_action.kick);

  auto put_ball = [&] {
    put_vec(ego_point(state.ball.position));
    put_vec(ego_dir(state.ball.velocity));
  };
  auto put_goals = [&] {
    const Team opponent = self.team == Team::home ? Team::away : Team::home;
    put_vec(ego_point(goal_center(state.pitch, opponent)));   // goal we attack
    put_vec(ego_point(goal_center(state.pitch, self.team)));  // goal we defend
  };
  auto put_pitch = [&] {
    put(state.pitch.half_length());
    put(state.pitch.half_width());
    put(0.5 * state.pitch.goal_width);
  };

  switch (state.task) {
    case TaskId::football: {
      put_ball();
      put_goals();
      put_pitch();
      for (const auto& other : state.players) {
        if (other.index == player || other.team != self.team) continue;
        put_vec(ego_point(other.position));
        put_vec(ego_dir(other.velocity));
      }
      for (const auto& other : state.players) {
        if (other.team == self.team) continue;
        put_vec(ego_point(other.position));
        put_vec(ego_dir(other.velocity));
      }
      break;
    }
    case TaskId::follow: {
      put_vec(ego_point(state.context.track.at(state.step)));
      put_vec(ego_point(state.context.track.at(state.step + state.context.track.lookahead_steps)));
      break;
    }
    case TaskId::dribble: {
      put_ball();
      put_vec(ego_point(state.context.track.at(state.step)));
      put_vec(ego_point(state.context.track.at(state.step + state.context.track.lookahead_steps)));
      break;
    }
    case TaskId::shoot: {
      put_ball();
      put_goals();
      put_pitch();
      put(static_cast<double>(state.context.contact_budget - state.context.contacts_used) /
          std::max(1, state.context.contact_budget));
      break;
    }
    case TaskId::kick_to_target: {
      put_ball();
      put_vec(ego_point(state.context.static_target));
      put(std::max(0.0, state.context.window_s - state.step * cfg.sim.dt));
      break;
    }
  }
  return obs;
}

}  // namespace pitchlab
