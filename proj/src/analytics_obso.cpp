#include <Eigen/Dense>
#include <cmath>

#include "pitchlab/analytics/analytics.hpp"

namespace pitchlab {

double ObsoModel::score_probability(double distance_to_goal) const {
  if (score_fallback || score_bins.empty())
    return std::exp(-std::max(0.0, distance_to_goal) / score_prior_scale);
  const int bin =
      std::min<int>(static_cast<int>(distance_to_goal / score_bin_width),
                    static_cast<int>(score_bins.size()) - 1);
  return score_bins[std::max(0, bin)];
}

GameState state_from_log(const TrajectoryLog& log, int step_idx, const RunConfig& cfg) {
  if (step_idx < 0 || step_idx >= static_cast<int>(log.steps.size()))
    throw AnalyticsError("state_from_log: step out of range");
  const auto& rec = log.steps[step_idx];
  GameState s;
  s.task = task_from_name(log.header.task);
  s.pitch.length = log.header.pitch_length;
  s.pitch.width = log.header.pitch_width;
  s.pitch.goal_width = log.header.goal_width;
  s.pitch.hoarding_margin = cfg.sim.hoarding_margin;
  s.pitch.ball_radius = cfg.sim.ball_radius;
  s.pitch.player_radius = cfg.sim.player_radius;
  s.ball.position = {rec.ball_position[0], rec.ball_position[1]};
  s.ball.velocity = {rec.ball_velocity[0], rec.ball_velocity[1]};
  s.players.resize(rec.players.size());
  for (size_t p = 0; p < rec.players.size(); ++p) {
    auto& player = s.players[p];
    player.index = static_cast<int>(p);
    player.team = rec.players[p].team == 0 ? Team::home : Team::away;
    player.position = {rec.players[p].position[0], rec.players[p].position[1]};
    player.velocity = {rec.players[p].velocity[0], rec.players[p].velocity[1]};
    player.heading = rec.players[p].heading;
    player.speed = player.velocity.norm();
  }
  s.step = rec.t;
  s.horizon = std::max<int>(rec.t + 1, static_cast<int>(log.steps.size()));
  return s;
}

ObsoModel fit_obso(const std::vector<TrajectoryLog>& logs, const RunConfig& cfg) {
  if (logs.empty()) throw AnalyticsError("fit_obso: no logs");
  ObsoModel model;
  model.t_r = cfg.analytics.reaction_time;
  model.score_bin_width = cfg.analytics.score_bin_m;

  // reference player speed: aggregate over all players and steps
  double speed_sum = 0.0;
  long long speed_n = 0;
  for (const auto& log : logs)
    for (const auto& rec : log.steps)
      for (const auto& p : rec.players) {
        speed_sum += std::hypot(p.velocity[0], p.velocity[1]);
        ++speed_n;
      }
  model.v_p = speed_n > 0 ? speed_sum / speed_n : 1.0;
  if (model.v_p <= 1e-9) model.v_p = 1e-3;

  // reference ball speed: chord speed of detected passes
  double vb_sum = 0.0;
  long long n_passes = 0;
  std::vector<Vec2> displacements;
  for (const auto& log : logs) {
    const auto passes = detect_passes(log, cfg.analytics.pass_min_range);
    const double dt = cfg.sim.dt;
    for (const auto& pass : passes) {
      const double steps = std::max(1, pass.step_receive - pass.step_kick);
      vb_sum += pass.range / (steps * dt);
      ++n_passes;
      // attack-aligned displacement: +x toward the passing team's goal
      const double sign = pass.team == 0 ? 1.0 : -1.0;
      displacements.emplace_back(sign * (pass.destination[0] - pass.origin[0]),
                                 pass.destination[1] - pass.origin[1]);
    }
  }
  model.v_b = n_passes > 0 ? vb_sum / static_cast<double>(n_passes) : 2.0 * model.v_p;
  if (model.v_b <= 1e-9) model.v_b = 1.0;

  if (!displacements.empty()) {
    Vec2 mean{0, 0};
    for (const auto& d : displacements) mean += d;
    mean /= static_cast<double>(displacements.size());
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& d : displacements) cov += (d - mean) * (d - mean).transpose();
    cov /= std::max<double>(1.0, static_cast<double>(displacements.size()) - 1.0);
    cov += 1e-6 * Eigen::Matrix2d::Identity();
    model.transition_mean = mean;
    model.transition_cov = cov;
  } else {
    model.transition_mean = {0, 0};
    model.transition_cov = 25.0 * Eigen::Matrix2d::Identity();
  }

  // score model: touches immediately resulting in a goal, by distance bins
  long long n_goals = 0;
  const int n_bins = 32;
  std::vector<double> goals_in(n_bins, 0.0), touches_in(n_bins, 0.0);
  for (const auto& log : logs) {
    const auto touches = collapse_touches(log);
    std::vector<std::pair<int, int>> goal_events;  // (step, home?1:-1)
    for (const auto& rec : log.steps)
      for (const auto& e : rec.events) {
        if (e.kind == EventKind::goal_home) goal_events.push_back({rec.t, 1});
        if (e.kind == EventKind::goal_away) goal_events.push_back({rec.t, -1});
      }
    n_goals += static_cast<long long>(goal_events.size());
    const double half_len = 0.5 * log.header.pitch_length;
    for (size_t k = 0; k < touches.size(); ++k) {
      const auto& t = touches[k];
      const int next_touch_step =
          k + 1 < touches.size() ? touches[k + 1].step : std::numeric_limits<int>::max();
      // the goal this touch is aimed at
      const double gx = t.team == 0 ? half_len : -half_len;
      const auto& bp = log.steps[t.step].ball_position;
      const double dist = std::hypot(bp[0] - gx, bp[1]);
      const int bin = std::min(n_bins - 1, static_cast<int>(dist / model.score_bin_width));
      touches_in[bin] += 1.0;
      for (const auto& [gstep, gteam] : goal_events) {
        const bool scored_by_team = (gteam == 1) == (t.team == 0);
        if (scored_by_team && gstep >= t.step && gstep < next_touch_step) {
          goals_in[bin] += 1.0;
          break;
        }
      }
    }
  }
  if (n_goals == 0 || n_passes == 0) {
    model.score_fallback = true;  // config prior instead of an empty histogram
  } else {
    model.score_bins.resize(n_bins);
    for (int b = 0; b < n_bins; ++b)
      model.score_bins[b] = (goals_in[b] + 1.0) / (touches_in[b] + 2.0);  // add-one smoothing
  }
  return model;
}

double obso_arrival_time(const Vec2& position, const Vec2& velocity, const Vec2& target,
                         const ObsoModel& model) {
  const Vec2 start = position + model.t_r * velocity;
  return model.t_r + (target - start).norm() / model.v_p;
}

Vec2 ObsoField::cell_center(int ix, int iy) const {
  return {x0 + (ix + 0.5) * dx, y0 + (iy + 0.5) * dy};
}

double ObsoField::value_at(const Vec2& p) const {
  const int ix = static_cast<int>((p.x() - x0) / dx);
  const int iy = static_cast<int>((p.y() - y0) / dy);
  if (ix < 0 || iy < 0 || ix >= nx || iy >= ny) return 0.0;
  return obso(ix, iy);
}

ObsoField compute_obso(const GameState& snapshot, const ObsoModel& model, int receiver,
                       const RunConfig& cfg) {
  if (receiver < 0 || receiver >= static_cast<int>(snapshot.players.size()))
    throw AnalyticsError("compute_obso: receiver not in snapshot");
  const auto& pitch = snapshot.pitch;
  ObsoField field;
  field.nx = cfg.analytics.grid_x;
  field.ny = cfg.analytics.grid_y;
  field.x0 = -pitch.half_length();
  field.y0 = -pitch.half_width();
  field.dx = pitch.length / field.nx;
  field.dy = pitch.width / field.ny;
  field.control.setZero(field.nx, field.ny);
  field.team_control.setZero(field.nx, field.ny);
  field.transition.setZero(field.nx, field.ny);
  field.score.setZero(field.nx, field.ny);
  field.obso.setZero(field.nx, field.ny);

  const Team team = snapshot.players[receiver].team;
  const double attack_sign = team == Team::home ? 1.0 : -1.0;
  const Vec2 attacked_goal = goal_center(pitch, team == Team::home ? Team::away : Team::home);
  const double s_soft = cfg.analytics.obso_softmin_s;
  const double cutoff = cfg.analytics.obso_cutoff_s;
  const double w_residual = std::exp(-cutoff / s_soft);

  const Eigen::Matrix2d cov_inv = model.transition_cov.inverse();
  const double cov_norm =
      1.0 / (2.0 * M_PI * std::sqrt(model.transition_cov.determinant()));

  double transition_total = 0.0;
  for (int ix = 0; ix < field.nx; ++ix)
    for (int iy = 0; iy < field.ny; ++iy) {
      const Vec2 r = field.cell_center(ix, iy);
      const double tau_ball = (r - snapshot.ball.position).norm() / model.v_b;

      double w_sum = w_residual;
      double w_receiver = 0.0, w_team = 0.0;
      for (const auto& p : snapshot.players) {
        const double tau = obso_arrival_time(p.position, p.velocity, r, model);
        const double slack = tau - tau_ball;
        if (slack > cutoff) continue;
        const double w = std::exp(-std::max(0.0, slack) / s_soft);
        w_sum += w;
        if (p.index == receiver) w_receiver = w;
        if (p.team == team) w_team += w;
      }
      field.control(ix, iy) = w_receiver / w_sum;
      field.team_control(ix, iy) = w_team / w_sum;

      // attack-aligned Gaussian transition, modulated by team control
      Vec2 d = r - snapshot.ball.position;
      d.x() *= attack_sign;
      const Vec2 u = d - model.transition_mean;
      const double g = cov_norm * std::exp(-0.5 * u.dot(cov_inv * u));
      field.transition(ix, iy) = g * field.team_control(ix, iy);
      transition_total += field.transition(ix, iy);

      field.score(ix, iy) = model.score_probability((r - attacked_goal).norm());
    }

  if (transition_total > 0.0) field.transition /= transition_total;
  field.obso = field.transition.cwiseProduct(field.control).cwiseProduct(field.score);
  return field;
}

std::optional<double> receiver_obso_stat(const std::vector<TrajectoryLog>& logs,
                                         const ObsoModel& model, const RunConfig& cfg,
                                         int team) {
  double sum = 0.0;
  long long n = 0;
  for (const auto& log : logs) {
    const auto passes = detect_passes(log, cfg.analytics.receiver_obso_min_range);
    for (const auto& pass : passes) {
      if (pass.team != team) continue;
      GameState snap = state_from_log(log, pass.step_kick, cfg);
      const ObsoField field = compute_obso(snap, model, pass.receiver, cfg);
      sum += field.value_at({pass.destination[0], pass.destination[1]});
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::string field_to_text(const Mat& field) {
  std::string out = std::to_string(field.rows()) + " " + std::to_string(field.cols()) + "\n";
  char buf[32];
  for (int i = 0; i < field.rows(); ++i) {
    for (int j = 0; j < field.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", field(i, j));
      out += buf;
      out += j + 1 < field.cols() ? ' ' : '\n';
    }
  }
  return out;
}

}  // namespace pitchlab
