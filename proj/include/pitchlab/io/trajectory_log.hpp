#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pitchlab/sim/engine.hpp"

namespace pitchlab {

struct LogError : std::runtime_error {
  explicit LogError(const std::string& what) : std::runtime_error(what) {}
};

// One step record: post-step snapshot, the actions that produced it, the
// step's reward channels and events. All floats are quantized to 9
// significant digits at append time so that parse(serialize(log)) == log.
struct LogPlayer {
  std::array<double, 2> position{};
  std::array<double, 2> velocity{};
  double heading = 0.0;
  int team = 0;
  bool touch = false;

  bool operator==(const LogPlayer&) const = default;
};

struct LogStep {
  int t = 0;
  std::array<double, 2> ball_position{};
  std::array<double, 2> ball_velocity{};
  std::vector<LogPlayer> players;
  std::vector<std::array<double, 3>> actions;
  std::vector<std::vector<double>> rewards;
  std::vector<EventRecord> events;
  std::optional<std::array<double, 2>> target;  // drill target, when present

  bool operator==(const LogStep&) const = default;
};

struct LogHeader {
  int format_version = 1;
  std::string task = "football";
  uint64_t seed = 0;
  uint64_t config_hash = 0;
  double pitch_length = 0.0;
  double pitch_width = 0.0;
  double goal_width = 0.0;
  std::vector<std::vector<int>> teams;

  bool operator==(const LogHeader&) const = default;
};

struct TrajectoryLog {
  LogHeader header;
  std::vector<LogStep> steps;

  bool operator==(const TrajectoryLog&) const = default;

  // Appends the post-step snapshot; values are quantized here.
  void append(const GameState& state, std::span<const ActionCommand> actions,
              const StepResult& result);
};

LogHeader make_log_header(const GameState& state, uint64_t seed, uint64_t config_hash);

std::string serialize_log(const TrajectoryLog& log);
TrajectoryLog parse_log(const std::string& text);

void write_log(const std::string& path, const TrajectoryLog& log);
TrajectoryLog read_log(const std::string& path);

uint64_t log_hash(const TrajectoryLog& log);

// Re-simulates the episode from (task, seed, actions). Returns the
// re-simulated log; `visit`, when given, sees the pre-step state and the
// step index for every logged step.
TrajectoryLog replay_log(const TrajectoryLog& log, const RunConfig& cfg,
                         const std::function<void(const GameState&, int)>& visit = nullptr);

}  // namespace pitchlab
