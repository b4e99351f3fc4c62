#pragma once

#include <optional>

#include "pitchlab/io/trajectory_log.hpp"
#include "pitchlab/sim/engine.hpp"

namespace pitchlab {

struct DrillSpec {
  TaskId kind = TaskId::follow;
  int horizon = 0;
  std::optional<TargetTrack> target_track;
  std::optional<int> contact_budget;
  std::optional<double> window_s;
};

// Builds a fresh drill episode; the spec mirrors the sampled episode context.
std::pair<DrillSpec, GameState> spawn_drill(TaskId kind, Rng& rng, const RunConfig& cfg);

// Single-agent reward channels for the drill (channel order per
// reward_channel_names(kind)).
RewardVector drill_rewards(const GameState& prev, const GameState& next, const DrillSpec& spec,
                           const RunConfig& cfg);

// Episode fitness: the sum of the drill's environment-reward channels over
// all logged steps. Shaping-only channels do not count.
double drill_fitness(const TrajectoryLog& episode, const DrillSpec& spec);

}  // namespace pitchlab
