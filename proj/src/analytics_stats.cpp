#include <cmath>

#include "pitchlab/analytics/analytics.hpp"

namespace pitchlab {

std::vector<TouchEvent> collapse_touches(const TrajectoryLog& log) {
  std::vector<TouchEvent> out;
  int run_player = -1;
  int run_last_step = -10;
  for (const auto& rec : log.steps) {
    for (size_t p = 0; p < rec.players.size(); ++p) {
      if (!rec.players[p].touch) continue;
      const int player = static_cast<int>(p);
      if (player == run_player && rec.t == run_last_step + 1) {
        run_last_step = rec.t;  // same contact run
        continue;
      }
      if (player == run_player && rec.t == run_last_step) continue;
      out.push_back({rec.t, player, rec.players[p].team});
      run_player = player;
      run_last_step = rec.t;
    }
  }
  return out;
}

namespace {

std::vector<int> goal_steps(const TrajectoryLog& log) {
  std::vector<int> steps;
  for (const auto& rec : log.steps)
    for (const auto& e : rec.events)
      if (e.kind == EventKind::goal_home || e.kind == EventKind::goal_away)
        steps.push_back(rec.t);
  return steps;
}

bool goal_between(const std::vector<int>& goals, int from_inclusive, int to_exclusive) {
  for (int g : goals)
    if (g >= from_inclusive && g < to_exclusive) return true;
  return false;
}

}  // namespace

std::vector<PassEvent> detect_passes(const TrajectoryLog& log, double min_range) {
  std::vector<PassEvent> out;
  const auto touches = collapse_touches(log);
  const auto goals = goal_steps(log);
  for (size_t k = 0; k + 1 < touches.size(); ++k) {
    const auto& a = touches[k];
    const auto& b = touches[k + 1];
    if (a.player == b.player || a.team != b.team) continue;
    if (goal_between(goals, a.step, b.step)) continue;
    const auto& origin = log.steps[a.step].ball_position;
    const auto& dest = log.steps[b.step].ball_position;
    const double range = std::hypot(dest[0] - origin[0], dest[1] - origin[1]);
    if (range < min_range) continue;
    PassEvent pass;
    pass.team = a.team;
    pass.passer = a.player;
    pass.receiver = b.player;
    pass.step_kick = a.step;
    pass.step_receive = b.step;
    pass.range = range;
    pass.origin = origin;
    pass.destination = dest;
    out.push_back(pass);
  }
  return out;
}

BehaviourStats compute_behaviour_stats(const std::vector<TrajectoryLog>& logs,
                                       const RunConfig& cfg, int team) {
  if (logs.empty()) throw AnalyticsError("compute_behaviour_stats: no logs");
  BehaviourStats stats;
  stats.episodes = static_cast<long long>(logs.size());

  double speed_sum = 0.0;
  long long speed_n = 0;
  long long control_steps = 0, total_steps = 0;
  long long possession_steps = 0, possession_known = 0;
  long long close_steps = 0, crowd_steps = 0, spread_steps = 0;
  double territory_sum = 0.0;
  long long territory_n = 0;
  long long passes_10m = 0;
  long long intercept_for = 0, intercept_against = 0;
  const double near = cfg.analytics.near_ball_radius;

  for (const auto& log : logs) {
    const double half_len = 0.5 * log.header.pitch_length;
    const double half_wid = 0.5 * log.header.pitch_width;
    const int stride = std::max<size_t>(1, log.steps.size() / 300);

    int last_touch_team = -1;
    for (const auto& rec : log.steps) {
      ++total_steps;
      // team member speeds
      std::vector<int> mine, theirs;
      for (size_t p = 0; p < rec.players.size(); ++p)
        (rec.players[p].team == team ? mine : theirs).push_back(static_cast<int>(p));
      for (int p : mine) {
        speed_sum += std::hypot(rec.players[p].velocity[0], rec.players[p].velocity[1]);
        ++speed_n;
      }

      auto dist_to_ball = [&](int p) {
        return std::hypot(rec.players[p].position[0] - rec.ball_position[0],
                          rec.players[p].position[1] - rec.ball_position[1]);
      };
      // ball control: closest player overall belongs to the team
      int closest = 0;
      for (size_t p = 1; p < rec.players.size(); ++p)
        if (dist_to_ball(static_cast<int>(p)) < dist_to_ball(closest))
          closest = static_cast<int>(p);
      if (rec.players[closest].team == team) ++control_steps;

      // possession via the running last toucher; goal resets clear it
      int touch_player = -1;
      for (size_t p = 0; p < rec.players.size(); ++p)
        if (rec.players[p].touch) touch_player = static_cast<int>(p);
      if (touch_player >= 0) last_touch_team = rec.players[touch_player].team;
      for (const auto& e : rec.events)
        if (e.kind == EventKind::reset) last_touch_team = -1;
      if (last_touch_team >= 0) {
        ++possession_known;
        if (last_touch_team == team) ++possession_steps;
      }

      // teamwork indicators (2v2: exactly two teammates)
      if (mine.size() >= 2) {
        int n_close = 0;
        for (int p : mine) n_close += dist_to_ball(p) <= near ? 1 : 0;
        if (n_close >= 1) ++close_steps;
        if (n_close >= 2) ++crowd_steps;
        const double spread =
            std::hypot(rec.players[mine[0]].position[0] - rec.players[mine[1]].position[0],
                       rec.players[mine[0]].position[1] - rec.players[mine[1]].position[1]);
        if (spread >= cfg.analytics.spread_dist) ++spread_steps;
      }

      // territory on a subsampled step grid
      if (rec.t % stride == 0) {
        const int gx = 20, gy = 14;
        int mine_cells = 0;
        for (int ix = 0; ix < gx; ++ix)
          for (int iy = 0; iy < gy; ++iy) {
            const double x = -half_len + (ix + 0.5) * (2.0 * half_len / gx);
            const double y = -half_wid + (iy + 0.5) * (2.0 * half_wid / gy);
            double best = std::numeric_limits<double>::infinity();
            int best_team = -1;
            for (const auto& p : rec.players) {
              const double d = std::hypot(p.position[0] - x, p.position[1] - y);
              if (d < best) {
                best = d;
                best_team = p.team;
              }
            }
            if (best_team == team) ++mine_cells;
          }
        territory_sum += static_cast<double>(mine_cells) / (gx * gy);
        ++territory_n;
      }
    }

    // passes and touches
    const auto touches = collapse_touches(log);
    for (const auto& t : touches)
      if (t.team == team) ++stats.touches;
    const auto passes = detect_passes(log, cfg.analytics.pass_min_range);
    for (const auto& p : passes)
      if (p.team == team) {
        ++stats.passes;
        if (p.range >= cfg.analytics.pass_long_range) ++passes_10m;
      }

    // interceptions: possession change across consecutive touches
    const auto goals = goal_steps(log);
    for (size_t k = 0; k + 1 < touches.size(); ++k) {
      if (touches[k].team == touches[k + 1].team) continue;
      if (goal_between(goals, touches[k].step, touches[k + 1].step)) continue;
      if (touches[k + 1].team == team)
        ++intercept_for;
      else
        ++intercept_against;
    }
  }

  stats.speed = speed_n > 0 ? speed_sum / speed_n : 0.0;
  stats.getting_up = std::nullopt;  // disc players cannot fall
  stats.ball_control = total_steps > 0 ? double(control_steps) / total_steps : 0.0;
  stats.possession = possession_known > 0 ? double(possession_steps) / possession_known : 0.0;
  stats.pass_frequency = stats.touches > 0 ? double(stats.passes) / stats.touches : 0.0;
  stats.pass_range = stats.passes > 0 ? double(passes_10m) / stats.passes : 0.0;
  if (close_steps > 0)
    stats.division_of_labour = 1.0 - double(crowd_steps) / double(close_steps);
  stats.territory = territory_n > 0 ? territory_sum / territory_n : 0.0;
  stats.close_to_ball = total_steps > 0 ? double(close_steps) / total_steps : 0.0;
  stats.ball_crowding = total_steps > 0 ? double(crowd_steps) / total_steps : 0.0;
  stats.teammates_spread = total_steps > 0 ? double(spread_steps) / total_steps : 0.0;
  stats.passes_10m_per_episode = double(passes_10m) / double(logs.size());
  stats.net_interceptions_per_episode =
      double(intercept_for - intercept_against) / double(logs.size());
  return stats;
}

}  // namespace pitchlab
