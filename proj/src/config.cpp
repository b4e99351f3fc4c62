#include "pitchlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "pitchlab/rng.hpp"

namespace pitchlab {
namespace {

enum class Kind { Float, Int, Bool, String, Seed };

struct Entry {
  const char* key;
  Kind kind;
  const char* provenance;
  const char* doc;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_open = false;
  bool hi_open = false;
  std::function<double*(RunConfig&)> fp;
  std::function<int*(RunConfig&)> ip;
  std::function<std::string*(RunConfig&)> sp;
};

Entry fkey(const char* key, std::function<double*(RunConfig&)> get, double lo, double hi,
           const char* prov, const char* doc, bool lo_open = false, bool hi_open = false) {
  Entry e;
  e.key = key;
  e.kind = Kind::Float;
  e.provenance = prov;
  e.doc = doc;
  e.lo = lo;
  e.hi = hi;
  e.lo_open = lo_open;
  e.hi_open = hi_open;
  e.fp = std::move(get);
  return e;
}

Entry ikey(const char* key, std::function<int*(RunConfig&)> get, double lo, double hi,
           const char* prov, const char* doc) {
  Entry e;
  e.key = key;
  e.kind = Kind::Int;
  e.provenance = prov;
  e.doc = doc;
  e.lo = lo;
  e.hi = hi;
  e.ip = std::move(get);
  return e;
}

Entry skey(const char* key, std::function<std::string*(RunConfig&)> get, const char* prov,
           const char* doc) {
  Entry e;
  e.key = key;
  e.kind = Kind::String;
  e.provenance = prov;
  e.doc = doc;
  e.sp = std::move(get);
  return e;
}

const double kInf = std::numeric_limits<double>::infinity();

std::vector<Entry> build_registry() {
  std::vector<Entry> r;
  auto F = [&](auto... a) { r.push_back(fkey(a...)); };
  auto I = [&](auto... a) { r.push_back(ikey(a...)); };

  // sim
  F("sim.dt", [](RunConfig& c) { return &c.sim.dt; }, 0.0, 1.0, "paper",
    "simulation step in seconds (30 ms control interval)", true);
  F("sim.aspect_ratio", [](RunConfig& c) { return &c.sim.aspect_ratio; }, 1.0, 10.0, "free",
    "pitch length/width ratio", true);
  F("sim.area_per_player_min", [](RunConfig& c) { return &c.sim.area_per_player_min; }, 1.0, 1e4,
    "paper", "lower bound of per-player pitch area in m^2");
  F("sim.area_per_player_max", [](RunConfig& c) { return &c.sim.area_per_player_max; }, 1.0, 1e4,
    "paper", "upper bound of per-player pitch area in m^2");
  F("sim.goal_width", [](RunConfig& c) { return &c.sim.goal_width; }, 0.0, 100.0, "paper",
    "goal mouth width, FIFA 3.66 m scaled by 1.5/1.75", true);
  F("sim.ball_radius", [](RunConfig& c) { return &c.sim.ball_radius; }, 0.0, 1.0, "paper",
    "ball radius, FIFA 0.11 m scaled by 1.5/1.75", true);
  F("sim.player_radius", [](RunConfig& c) { return &c.sim.player_radius; }, 0.0, 2.0, "free",
    "disc player radius", true);
  F("sim.hoarding_margin", [](RunConfig& c) { return &c.sim.hoarding_margin; }, 0.0, 50.0, "free",
    "how far beyond the pitch players may travel", true);
  F("sim.v_max", [](RunConfig& c) { return &c.sim.v_max; }, 0.0, 100.0, "free",
    "player top speed m/s", true);
  F("sim.a_max", [](RunConfig& c) { return &c.sim.a_max; }, 0.0, 1000.0, "free",
    "player forward acceleration limit m/s^2", true);
  F("sim.turn_max", [](RunConfig& c) { return &c.sim.turn_max; }, 0.0, 100.0, "free",
    "player turn rate limit rad/s", true);
  F("sim.v_kick_max", [](RunConfig& c) { return &c.sim.v_kick_max; }, 0.0, 100.0, "free",
    "ball speed of a full-strength kick m/s", true);
  F("sim.kick_radius", [](RunConfig& c) { return &c.sim.kick_radius; }, 0.0, 5.0, "free",
    "max player-to-ball-center distance for a kick", true);
  F("sim.ball_drag", [](RunConfig& c) { return &c.sim.ball_drag; }, 0.0, 10.0, "free",
    "exponential ball drag coefficient 1/s");
  F("sim.restitution", [](RunConfig& c) { return &c.sim.restitution; }, 0.0, 1.0, "free",
    "boundary bounce restitution");
  F("sim.spawn_fraction", [](RunConfig& c) { return &c.sim.spawn_fraction; }, 0.0, 1.0, "free",
    "central fraction of the pitch used for spawns", true);
  F("sim.match_seconds", [](RunConfig& c) { return &c.sim.match_seconds; }, 0.0, 3600.0, "paper",
    "football episode length in seconds", true);
  I("sim.players_per_team", [](RunConfig& c) { return &c.sim.players_per_team; }, 1, 8, "paper",
    "players per team in football");

  // drill
  F("drill.follow_horizon_s", [](RunConfig& c) { return &c.drill.follow_horizon_s; }, 0.0, 600.0,
    "free", "follow drill episode length", true);
  F("drill.dribble_horizon_s", [](RunConfig& c) { return &c.drill.dribble_horizon_s; }, 0.0, 600.0,
    "free", "dribble drill episode length", true);
  F("drill.shoot_horizon_s", [](RunConfig& c) { return &c.drill.shoot_horizon_s; }, 0.0, 600.0,
    "free", "shoot drill episode length", true);
  F("drill.ktt_extra_s", [](RunConfig& c) { return &c.drill.ktt_extra_s; }, 0.0, 60.0, "free",
    "seconds appended after the kick-to-target window");
  F("drill.window_min_s", [](RunConfig& c) { return &c.drill.window_min_s; }, 0.0, 60.0, "paper",
    "kick-to-target window lower bound", true);
  F("drill.window_max_s", [](RunConfig& c) { return &c.drill.window_max_s; }, 0.0, 60.0, "paper",
    "kick-to-target window upper bound", true);
  I("drill.shoot_contact_budget", [](RunConfig& c) { return &c.drill.shoot_contact_budget; }, 1, 10,
    "paper", "distinct ball contacts allowed in shoot");
  F("drill.target_speed_min", [](RunConfig& c) { return &c.drill.target_speed_min; }, 0.0, 20.0,
    "free", "moving-target speed lower bound");
  F("drill.target_speed_max", [](RunConfig& c) { return &c.drill.target_speed_max; }, 0.0, 20.0,
    "free", "moving-target speed upper bound");
  F("drill.segment_min_s", [](RunConfig& c) { return &c.drill.segment_min_s; }, 0.1, 60.0, "free",
    "target track segment duration lower bound");
  F("drill.segment_max_s", [](RunConfig& c) { return &c.drill.segment_max_s; }, 0.1, 60.0, "free",
    "target track segment duration upper bound");
  F("drill.lookahead_s", [](RunConfig& c) { return &c.drill.lookahead_s; }, 0.0, 10.0, "free",
    "how far ahead the follow drill exposes the target");
  F("drill.dead_ball_speed", [](RunConfig& c) { return &c.drill.dead_ball_speed; }, 0.0, 10.0,
    "free", "ball speed below which a spent shoot episode ends");

  // net
  I("net.hidden", [](RunConfig& c) { return &c.net.hidden; }, 1, 4096, "free",
    "policy/value hidden width");
  I("net.layers", [](RunConfig& c) { return &c.net.layers; }, 1, 8, "free",
    "policy/value hidden depth");
  F("net.sigma_min", [](RunConfig& c) { return &c.net.sigma_min; }, 0.0, 1.0, "free",
    "Gaussian head stddev floor", true);
  F("net.sigma_max", [](RunConfig& c) { return &c.net.sigma_max; }, 0.0, 100.0, "free",
    "Gaussian head stddev cap", true);

  // npmp
  I("npmp.latent_dim", [](RunConfig& c) { return &c.npmp.latent_dim; }, 1, 256, "free",
    "motor-intention latent dimension");
  I("npmp.lookahead", [](RunConfig& c) { return &c.npmp.lookahead; }, 1, 64, "free",
    "encoder future-state lookahead k");
  F("npmp.beta", [](RunConfig& c) { return &c.npmp.beta; }, 0.0, 100.0, "free",
    "weight of the latent regularizer");
  F("npmp.rho", [](RunConfig& c) { return &c.npmp.rho; }, 0.0, 1.0, "free",
    "AR(1) latent prior coefficient", true, true);
  I("npmp.hidden", [](RunConfig& c) { return &c.npmp.hidden; }, 1, 4096, "free",
    "encoder/decoder hidden width");
  I("npmp.layers", [](RunConfig& c) { return &c.npmp.layers; }, 1, 8, "free",
    "encoder/decoder hidden depth");
  F("npmp.lr", [](RunConfig& c) { return &c.npmp.lr; }, 0.0, 1.0, "free",
    "training learning rate", true);
  I("npmp.batch", [](RunConfig& c) { return &c.npmp.batch; }, 1, 4096, "free",
    "training batch (trajectory windows)");
  I("npmp.chunk_len", [](RunConfig& c) { return &c.npmp.chunk_len; }, 2, 512, "free",
    "trajectory window length");
  I("npmp.train_steps", [](RunConfig& c) { return &c.npmp.train_steps; }, 1, 10000000, "free",
    "gradient steps");
  I("npmp.dataset_episodes", [](RunConfig& c) { return &c.npmp.dataset_episodes; }, 1, 1000000,
    "free", "scripted-expert episodes to collect");
  I("npmp.episode_steps", [](RunConfig& c) { return &c.npmp.episode_steps; }, 8, 100000, "free",
    "steps per scripted-expert episode");
  F("npmp.action_noise", [](RunConfig& c) { return &c.npmp.action_noise; }, 0.0, 2.0, "free",
    "stddev of exploration noise injected at collection");

  // mpo
  F("mpo.epsilon", [](RunConfig& c) { return &c.mpo.epsilon; }, 0.0, 10.0, "free",
    "E-step KL budget", true);
  F("mpo.beta_trust", [](RunConfig& c) { return &c.mpo.beta_trust; }, 0.0, 10.0, "free",
    "M-step trust region", true);
  I("mpo.n_action_samples", [](RunConfig& c) { return &c.mpo.n_action_samples; }, 2, 1024, "free",
    "action samples per state in the E-step");
  F("mpo.retrace_lambda", [](RunConfig& c) { return &c.mpo.retrace_lambda; }, 0.0, 1.0, "free",
    "retrace truncation lambda");
  I("mpo.target_refresh", [](RunConfig& c) { return &c.mpo.target_refresh; }, 1, 1000000, "free",
    "learner steps between target-network refreshes");
  I("mpo.chunk_len", [](RunConfig& c) { return &c.mpo.chunk_len; }, 2, 512, "free",
    "replay chunk length");
  F("mpo.density_floor", [](RunConfig& c) { return &c.mpo.density_floor; }, 0.0, 1.0, "free",
    "behavior density floor for importance ratios", true);
  F("mpo.policy_lr", [](RunConfig& c) { return &c.mpo.policy_lr; }, 0.0, 1.0, "free",
    "policy Adam learning rate", true);
  F("mpo.q_lr", [](RunConfig& c) { return &c.mpo.q_lr; }, 0.0, 1.0, "free",
    "Q Adam learning rate", true);
  I("mpo.batch_chunks", [](RunConfig& c) { return &c.mpo.batch_chunks; }, 1, 4096, "free",
    "chunks per learner batch");
  I("mpo.mstep_iters", [](RunConfig& c) { return &c.mpo.mstep_iters; }, 1, 1000, "free",
    "gradient steps per M-step call");
  I("mpo.q_steps", [](RunConfig& c) { return &c.mpo.q_steps; }, 1, 1000, "free",
    "Q gradient steps per learner update");
  F("mpo.kl_mult_init", [](RunConfig& c) { return &c.mpo.kl_mult_init; }, 0.0, 1e9, "free",
    "initial trust-region Lagrange multiplier");
  F("mpo.kl_mult_lr", [](RunConfig& c) { return &c.mpo.kl_mult_lr; }, 0.0, 1e9, "free",
    "multiplier adaptation rate");
  F("mpo.kl_mult_max", [](RunConfig& c) { return &c.mpo.kl_mult_max; }, 0.0, 1e12, "free",
    "multiplier divergence threshold", true);
  I("mpo.update_period_steps", [](RunConfig& c) { return &c.mpo.update_period_steps; }, 1,
    10000000, "free", "environment steps between learner updates");
  I("mpo.min_replay_chunks", [](RunConfig& c) { return &c.mpo.min_replay_chunks; }, 1, 10000000,
    "free", "replay warmup before learning starts");

  // pbt
  I("pbt.population", [](RunConfig& c) { return &c.pbt.population; }, 1, 256, "free",
    "agents in the population");
  F("pbt.f_init", [](RunConfig& c) { return &c.pbt.f_init; }, 0.0, 1.0, "free",
    "fitness assigned at init and after evolution");
  F("pbt.decay", [](RunConfig& c) { return &c.pbt.decay; }, 0.0, 1.0, "free",
    "payoff count decay per recorded result", true);
  F("pbt.eligible_min_steps", [](RunConfig& c) { return &c.pbt.eligible_min_steps; }, 0.0, 1e12,
    "free", "env steps an agent must train before evolution");
  F("pbt.mutate_prob", [](RunConfig& c) { return &c.pbt.mutate_prob; }, 0.0, 1.0, "free",
    "per-coordinate mutation probability");
  F("pbt.mutate_factor", [](RunConfig& c) { return &c.pbt.mutate_factor; }, 1.0, 10.0, "free",
    "multiplicative mutation factor", true);
  F("pbt.nash_tol", [](RunConfig& c) { return &c.pbt.nash_tol; }, 0.0, 1.0, "free",
    "Nash solver exploitability target", true);
  I("pbt.nash_max_iters", [](RunConfig& c) { return &c.pbt.nash_max_iters; }, 1, 1000000000,
    "free", "Nash solver iteration cap");
  F("pbt.lambda_init", [](RunConfig& c) { return &c.pbt.lambda_init; }, 0.0, 1e6, "free",
    "initial prior-regularizer coefficient");
  F("pbt.alpha_sparse_init", [](RunConfig& c) { return &c.pbt.alpha_sparse_init; }, 0.0, 1e6,
    "free", "initial weight of sparse reward channels");
  F("pbt.alpha_dense_init", [](RunConfig& c) { return &c.pbt.alpha_dense_init; }, 0.0, 1e6, "free",
    "initial weight of dense shaping channels");
  F("pbt.gamma_sparse_init", [](RunConfig& c) { return &c.pbt.gamma_sparse_init; }, 0.0, 1.0,
    "free", "initial discount of sparse channels", true, true);
  F("pbt.gamma_dense_init", [](RunConfig& c) { return &c.pbt.gamma_dense_init; }, 0.0, 1.0, "free",
    "initial discount of dense channels", true, true);

  // priors
  I("priors.mc_samples", [](RunConfig& c) { return &c.priors.mc_samples; }, 1, 4096, "free",
    "Monte-Carlo samples in the mixture KL");
  I("priors.distill_seeds", [](RunConfig& c) { return &c.priors.distill_seeds; }, 1, 64, "paper",
    "distillation restarts, keep the lowest loss");
  I("priors.rollout_episodes", [](RunConfig& c) { return &c.priors.rollout_episodes; }, 1, 100000,
    "free", "expert rollouts per distillation");
  I("priors.train_steps", [](RunConfig& c) { return &c.priors.train_steps; }, 1, 10000000, "free",
    "distillation gradient steps");
  F("priors.lr", [](RunConfig& c) { return &c.priors.lr; }, 0.0, 1.0, "free",
    "distillation learning rate", true);

  // analytics
  I("analytics.grid_x", [](RunConfig& c) { return &c.analytics.grid_x; }, 2, 1024, "free",
    "pitch-control grid cells along the length");
  I("analytics.grid_y", [](RunConfig& c) { return &c.analytics.grid_y; }, 2, 1024, "free",
    "pitch-control grid cells along the width");
  F("analytics.reaction_time", [](RunConfig& c) { return &c.analytics.reaction_time; }, 0.0, 10.0,
    "paper", "receiver reaction time t_r in seconds");
  F("analytics.obso_softmin_s", [](RunConfig& c) { return &c.analytics.obso_softmin_s; }, 0.0,
    10.0, "free", "arrival-slack softmin scale", true);
  F("analytics.obso_cutoff_s", [](RunConfig& c) { return &c.analytics.obso_cutoff_s; }, 0.0, 60.0,
    "free", "arrival-slack cutoff beyond which control is zero", true);
  F("analytics.pass_min_range", [](RunConfig& c) { return &c.analytics.pass_min_range; }, 0.0,
    100.0, "paper", "minimum displacement for a touch pair to be a pass");
  F("analytics.pass_long_range", [](RunConfig& c) { return &c.analytics.pass_long_range; }, 0.0,
    100.0, "paper", "long-pass threshold");
  F("analytics.receiver_obso_min_range",
    [](RunConfig& c) { return &c.analytics.receiver_obso_min_range; }, 0.0, 100.0, "paper",
    "pass range qualifying for receiver OBSO (5 m default, 15 m variant)");
  F("analytics.near_ball_radius", [](RunConfig& c) { return &c.analytics.near_ball_radius; }, 0.0,
    100.0, "paper", "close-to-ball radius for DOL/crowding");
  F("analytics.spread_dist", [](RunConfig& c) { return &c.analytics.spread_dist; }, 0.0, 100.0,
    "paper", "teammates-spread-out distance");
  I("analytics.episode_steps", [](RunConfig& c) { return &c.analytics.episode_steps; }, 1,
    10000000, "paper", "steps per analytics episode (3000 = 90 s)");
  F("analytics.score_bin_m", [](RunConfig& c) { return &c.analytics.score_bin_m; }, 0.1, 100.0,
    "free", "score-model histogram bin width in meters");
  F("analytics.probe_seconds", [](RunConfig& c) { return &c.analytics.probe_seconds; }, 0.0, 600.0,
    "paper", "probe task episode length", true);
  I("analytics.cpd_states", [](RunConfig& c) { return &c.analytics.cpd_states; }, 1, 1000000,
    "free", "initial states sampled for CPD");
  I("analytics.cpd_resamples", [](RunConfig& c) { return &c.analytics.cpd_resamples; }, 1, 100000,
    "free", "counterfactual resamples per state");

  // eval
  I("eval.matches", [](RunConfig& c) { return &c.eval.matches; }, 1, 1000000, "paper",
    "matches against the evaluator set per evaluation");
  F("eval.elo_scale", [](RunConfig& c) { return &c.eval.elo_scale; }, 1.0, 1e4, "paper",
    "Elo logistic scale (400)");
  F("eval.elo_anchor", [](RunConfig& c) { return &c.eval.elo_anchor; }, -1e6, 1e6, "free",
    "mean rating of the evaluator pool");
  F("eval.elo_cap", [](RunConfig& c) { return &c.eval.elo_cap; }, 1.0, 1e7, "free",
    "rating magnitude cap for degenerate inputs");

  // run
  I("run.threads", [](RunConfig& c) { return &c.run.threads; }, 1, 256, "free",
    "worker threads; 1 = deterministic single-threaded mode");
  I("run.concurrent_matches", [](RunConfig& c) { return &c.run.concurrent_matches; }, 1, 4096,
    "free", "match lanes advanced in lockstep");
  I("run.replay_capacity_steps", [](RunConfig& c) { return &c.run.replay_capacity_steps; }, 1,
    1000000000, "free", "replay buffer capacity per agent");
  I("run.checkpoint_stride", [](RunConfig& c) { return &c.run.checkpoint_stride; }, 0, 1000000000,
    "free", "env steps between checkpoints (0 = round end only)");
  r.push_back(skey("run.out_dir", [](RunConfig& c) { return &c.run.out_dir; }, "free",
                   "output directory"));

  {
    Entry e;
    e.key = "seed";
    e.kind = Kind::Seed;
    e.provenance = "free";
    e.doc = "master random seed";
    r.push_back(e);
  }
  return r;
}

const std::vector<Entry>& registry() {
  static const std::vector<Entry> r = build_registry();
  return r;
}

void check_range(const Entry& e, double v) {
  const bool lo_bad = e.lo_open ? v <= e.lo : v < e.lo;
  const bool hi_bad = e.hi_open ? v >= e.hi : v > e.hi;
  if (!std::isfinite(v) || lo_bad || hi_bad) {
    std::ostringstream os;
    os << "config key '" << e.key << "' = " << v << " violates range "
       << (e.lo_open ? "(" : "[") << e.lo << ", " << e.hi << (e.hi_open ? ")" : "]");
    throw ConfigError(os.str());
  }
}

void check_cross_constraints(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("config key '" + key + "' " + why);
  };
  if (c.sim.area_per_player_min > c.sim.area_per_player_max)
    fail("sim.area_per_player_min", "exceeds sim.area_per_player_max");
  if (c.drill.window_min_s > c.drill.window_max_s)
    fail("drill.window_min_s", "exceeds drill.window_max_s");
  if (c.drill.target_speed_min > c.drill.target_speed_max)
    fail("drill.target_speed_min", "exceeds drill.target_speed_max");
  if (c.drill.segment_min_s > c.drill.segment_max_s)
    fail("drill.segment_min_s", "exceeds drill.segment_max_s");
  if (c.net.sigma_min >= c.net.sigma_max) fail("net.sigma_min", "must be below net.sigma_max");
  // goal must fit in the narrowest pitch the sampler can produce
  const double min_area = c.sim.area_per_player_min;
  const double min_width = std::sqrt(min_area / c.sim.aspect_ratio);
  if (c.sim.goal_width >= min_width)
    fail("sim.goal_width", "does not fit the narrowest sampled pitch");
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;

    const Entry* ent = nullptr;
    for (const auto& e : registry())
      if (key == e.key) {
        ent = &e;
        break;
      }
    if (!ent) throw ConfigError("unknown config key '" + key + "'");

    try {
      switch (ent->kind) {
        case Kind::Float: {
          size_t pos = 0;
          double v = std::stod(val, &pos);
          if (pos != val.size()) throw std::invalid_argument(val);
          check_range(*ent, v);
          *ent->fp(cfg) = v;
          break;
        }
        case Kind::Int: {
          size_t pos = 0;
          long long v = std::stoll(val, &pos);
          if (pos != val.size()) throw std::invalid_argument(val);
          check_range(*ent, static_cast<double>(v));
          *ent->ip(cfg) = static_cast<int>(v);
          break;
        }
        case Kind::Seed: {
          size_t pos = 0;
          unsigned long long v = std::stoull(val, &pos);
          if (pos != val.size()) throw std::invalid_argument(val);
          cfg.seed = v;
          break;
        }
        case Kind::String: {
          if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
            val = val.substr(1, val.size() - 2);
          *ent->sp(cfg) = val;
          break;
        }
        case Kind::Bool:
          break;  // no bool keys registered at present
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': cannot parse value '" + val + "'");
    }
  }
  check_cross_constraints(cfg);
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  auto& mut = const_cast<RunConfig&>(cfg);
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& e : registry()) {
    std::string v;
    switch (e.kind) {
      case Kind::Float: v = fmt_double(*e.fp(mut)); break;
      case Kind::Int: v = std::to_string(*e.ip(mut)); break;
      case Kind::Seed: v = std::to_string(cfg.seed); break;
      case Kind::String: v = "\"" + *e.sp(mut) + "\""; break;
      case Kind::Bool: break;
    }
    kv.emplace_back(e.key, v);
  }
  std::sort(kv.begin(), kv.end());
  std::ostringstream out;
  std::string cur_section;
  for (auto& [key, val] : kv) {
    size_t dot = key.rfind('.');
    std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    if (section != cur_section) {
      out << "[" << section << "]\n";
      cur_section = section;
    }
    out << name << " = " << val << "\n";
  }
  return out.str();
}

uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = serialize_config(cfg);
  return fnv1a64(s.data(), s.size());
}

void validate_config(const RunConfig& cfg) {
  auto& mut = const_cast<RunConfig&>(cfg);
  for (const auto& e : registry()) {
    if (e.kind == Kind::Float) check_range(e, *e.fp(mut));
    if (e.kind == Kind::Int) check_range(e, static_cast<double>(*e.ip(mut)));
  }
  check_cross_constraints(cfg);
}

std::vector<ConfigKeyInfo> describe_config() {
  std::vector<ConfigKeyInfo> out;
  for (const auto& e : registry()) {
    std::string type = "float";
    if (e.kind == Kind::Int) type = "int";
    if (e.kind == Kind::String) type = "string";
    if (e.kind == Kind::Seed) type = "uint";
    out.push_back({e.key, type, e.provenance, e.doc});
  }
  return out;
}

}  // namespace pitchlab
