#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pitchlab/rng.hpp"

namespace pitchlab {

using Vec2 = Eigen::Vector2d;

enum class TaskId { football, follow, dribble, shoot, kick_to_target };

const char* task_name(TaskId task);
TaskId task_from_name(const std::string& name);

// Round to 9 significant digits, the precision every serialized float
// carries. The engine applies it to incoming actions so that a logged
// episode replays bit-exactly.
double quantize9(double v);

enum class Team { home, away };

struct ActionCommand {
  double forward = 0.0;  // [-1, 1] acceleration along heading
  double turn = 0.0;     // [-1, 1] turn rate
  double kick = 0.0;     // [0, 1] kick strength

  ActionCommand clamped() const;
  ActionCommand quantized() const;  // clamped, then rounded to 9 digits
  bool finite() const;
};

struct PitchSpec {
  double length = 0.0;
  double width = 0.0;
  double goal_width = 0.0;
  double hoarding_margin = 0.0;
  double ball_radius = 0.0;
  double player_radius = 0.0;

  double half_length() const { return 0.5 * length; }
  double half_width() const { return 0.5 * width; }
};

struct PlayerState {
  Vec2 position{0.0, 0.0};
  Vec2 velocity{0.0, 0.0};  // always speed * heading direction
  double speed = 0.0;
  double heading = 0.0;  // [-pi, pi), 0 = +x
  Team team = Team::home;
  int index = 0;
  int last_touch_step = -1;
  ActionCommand prev_action;

  Vec2 heading_dir() const { return {std::cos(heading), std::sin(heading)}; }
};

struct BallState {
  Vec2 position{0.0, 0.0};
  Vec2 velocity{0.0, 0.0};
  int last_toucher = -1;
};

// Piecewise-constant-velocity 2D path, positions precomputed for
// horizon + lookahead steps. Segment boundaries resample the direction;
// the speed is fixed for the whole track.
struct TargetTrack {
  std::vector<Vec2> positions;
  double speed = 0.0;
  int lookahead_steps = 0;

  bool empty() const { return positions.empty(); }
  Vec2 at(int step) const {
    if (positions.empty()) return {0.0, 0.0};
    const int i = std::min<int>(std::max(step, 0), static_cast<int>(positions.size()) - 1);
    return positions[i];
  }
};

struct TaskContext {
  TargetTrack track;              // follow, dribble
  Vec2 static_target{0.0, 0.0};   // kick_to_target
  double window_s = 0.0;          // kick_to_target
  int contact_budget = 0;         // shoot
  int contacts_used = 0;
  bool in_contact_run = false;
};

enum class EventKind { goal_home, goal_away, touch, kick, reset };

const char* event_kind_name(EventKind kind);
EventKind event_kind_from_name(const std::string& name);

struct EventRecord {
  int step = 0;
  EventKind kind = EventKind::touch;
  int actor = -1;  // player id or -1

  bool operator==(const EventRecord&) const = default;
};

struct GameState {
  PitchSpec pitch;
  BallState ball;
  bool has_ball = true;
  std::vector<PlayerState> players;
  int step = 0;
  int horizon = 0;
  TaskId task = TaskId::football;
  TaskContext context;
  int score_home = 0;
  int score_away = 0;
  bool terminal = false;
  uint64_t spawn_seed = 0;
  Rng rng;  // owns all in-episode randomness (goal resets)
};

// One scalar per reward channel; channel order fixed per task.
using RewardVector = std::vector<double>;

const std::vector<std::string>& reward_channel_names(TaskId task);
int reward_channel_count(TaskId task);
// Channels that define drill fitness (environment reward), by index.
const std::vector<int>& fitness_channels(TaskId task);

struct ObsBlock {
  std::string name;
  int offset = 0;
  int size = 0;
};

struct ObsLayout {
  TaskId task = TaskId::football;
  int dim = 0;
  std::vector<ObsBlock> blocks;

  const ObsBlock* find(const std::string& name) const;
  bool has(const std::string& name) const { return find(name) != nullptr; }
};

struct ObservationVector {
  Eigen::VectorXd values;
  const ObsLayout* layout = nullptr;
};

}  // namespace pitchlab
