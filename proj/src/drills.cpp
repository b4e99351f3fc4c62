#include "pitchlab/sim/drills.hpp"

namespace pitchlab {

std::pair<DrillSpec, GameState> spawn_drill(TaskId kind, Rng& rng, const RunConfig& cfg) {
  if (kind == TaskId::football) throw SimError("spawn_drill(): football is not a drill");
  GameState state = reset(kind, rng, cfg);
  DrillSpec spec;
  spec.kind = kind;
  spec.horizon = state.horizon;
  if (kind == TaskId::follow || kind == TaskId::dribble) spec.target_track = state.context.track;
  if (kind == TaskId::shoot) spec.contact_budget = state.context.contact_budget;
  if (kind == TaskId::kick_to_target) spec.window_s = state.context.window_s;
  return {std::move(spec), std::move(state)};
}

RewardVector drill_rewards(const GameState& prev, const GameState& next, const DrillSpec& spec,
                           const RunConfig& cfg) {
  if (next.task != spec.kind) throw SimError("drill_rewards(): state/spec task mismatch");
  return compute_rewards(prev, next, spec.kind, cfg)[0];
}

double drill_fitness(const TrajectoryLog& episode, const DrillSpec& spec) {
  if (episode.header.task != task_name(spec.kind))
    throw SimError("drill_fitness(): episode task '" + episode.header.task +
                   "' does not match spec '" + task_name(spec.kind) + "'");
  const auto& channels = fitness_channels(spec.kind);
  double total = 0.0;
  for (const auto& step : episode.steps) {
    if (step.rewards.empty()) throw SimError("drill_fitness(): episode has no reward records");
    const auto& r = step.rewards[0];
    for (int ch : channels) {
      if (ch >= static_cast<int>(r.size()))
        throw SimError("drill_fitness(): reward channel count mismatch");
      total += r[ch];
    }
  }
  return total;
}

}  // namespace pitchlab
