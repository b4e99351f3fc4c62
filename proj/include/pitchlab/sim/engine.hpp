#pragma once

#include <span>

#include "pitchlab/config.hpp"
#include "pitchlab/sim/types.hpp"

namespace pitchlab {

struct SimError : std::runtime_error {
  explicit SimError(const std::string& what) : std::runtime_error(what) {}
};

struct StepResult {
  std::vector<RewardVector> rewards;  // one RewardVector per player
  std::vector<EventRecord> events;
};

int task_horizon(TaskId task, const RunConfig& cfg);

// Pitch sampled so that area / n_players is uniform in the configured range
// and length/width matches the configured aspect ratio.
PitchSpec sample_pitch(const RunConfig& cfg, int n_players, Rng& rng);

// Fresh episode state. The rng is consumed for spawn sampling and a child
// stream is embedded into the state for in-episode resets.
GameState reset(TaskId task, Rng& rng, const RunConfig& cfg);

// Advances the state by one control step (cfg.sim.dt seconds). Throws
// SimError on non-finite action components; out-of-range components are
// clamped. Sparse goal rewards ride on the step that scores; dense channels
// are zero on that step (the scene re-spawns mid-step).
StepResult step(GameState& state, std::span<const ActionCommand> actions, const RunConfig& cfg);

// Egocentric observation of `player`. Layouts are fixed per task.
ObservationVector observe(const GameState& state, int player, const RunConfig& cfg);

const ObsLayout& obs_layout(TaskId task, const RunConfig& cfg);

// Dense (shaping) reward channels evaluated on the successor state.
std::vector<RewardVector> compute_rewards(const GameState& prev, const GameState& next, TaskId task,
                                          const RunConfig& cfg);

Vec2 goal_center(const PitchSpec& pitch, Team defending_team);

// In-episode spawn logic shared by reset() and goal restarts.
void spawn_scene(GameState& state, Rng& rng, const RunConfig& cfg);

double wrap_angle(double a);

}  // namespace pitchlab
