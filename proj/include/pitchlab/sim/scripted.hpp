#pragma once

#include <memory>

#include "pitchlab/sim/engine.hpp"

namespace pitchlab {

// Hand-written controllers over the full game state. They serve three
// roles: experts for the skill dataset, fixed evaluator opponents, and
// reference behaviours in analysis oracles.
class ScriptedController {
 public:
  virtual ~ScriptedController() = default;
  virtual void reset(const GameState& state, Rng& rng) { (void)state, (void)rng; }
  virtual ActionCommand act(const GameState& state, int player, Rng& rng) = 0;
  virtual const char* name() const = 0;
};

// kinds:
//   waypoint     - seeks random waypoints across the pitch
//   dash_turn    - alternates straight dashes with in-place turns
//   ball_approach- closes on the ball, brakes near it, light touches
//   random       - uniform action noise every step
//   chaser       - runs at the ball and kicks it hard anywhere ahead
//   striker      - runs at the ball, kicks it toward the opponent goal
//   statue       - stands still
//   passer_correct - turns toward the teammate wing and kicks (probe oracle)
//   passer_wrong   - kicks toward the wrong wing (probe oracle)
std::unique_ptr<ScriptedController> make_scripted(const std::string& kind, uint64_t seed = 0);

// Steering primitive shared by the controllers.
ActionCommand steer_towards(const PlayerState& p, const Vec2& target, double speed_scale = 1.0);

}  // namespace pitchlab
