#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pitchlab {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// All tunables live here. Keys are "<section>.<name>" in a TOML-style file;
// unknown keys and out-of-range values are rejected by name. Each key carries
// a provenance flag ("paper" when the default is stated or derived from the
// source environment's published constants, "free" otherwise) surfaced by
// describe_config().
struct RunConfig {
  struct Sim {
    double dt = 0.03;                      // paper: 30 ms control step
    double aspect_ratio = 1.5;             // paper-derived pitch shape
    double area_per_player_min = 100.0;    // paper
    double area_per_player_max = 350.0;    // paper
    double goal_width = 3.66 * (1.5 / 1.75);
    double ball_radius = 0.11 * (1.5 / 1.75);
    double player_radius = 0.3;
    double hoarding_margin = 5.0;
    double v_max = 8.0;
    double a_max = 12.0;
    double turn_max = 6.0;
    double v_kick_max = 14.0;
    double kick_radius = 0.5;
    double ball_drag = 0.3;
    double restitution = 0.8;
    double spawn_fraction = 0.7;
    double match_seconds = 45.0;           // paper: training matches
    int players_per_team = 2;
  } sim;

  struct Drill {
    double follow_horizon_s = 10.0;
    double dribble_horizon_s = 20.0;
    double shoot_horizon_s = 15.0;
    double ktt_extra_s = 2.0;
    double window_min_s = 2.0;             // paper
    double window_max_s = 6.0;             // paper
    int shoot_contact_budget = 3;          // paper
    double target_speed_min = 0.5;
    double target_speed_max = 3.0;
    double segment_min_s = 2.0;
    double segment_max_s = 4.0;
    double lookahead_s = 1.0;
    double dead_ball_speed = 0.1;
  } drill;

  struct Net {
    int hidden = 128;
    int layers = 2;
    double sigma_min = 1e-3;
    double sigma_max = 2.0;
  } net;

  struct Npmp {
    int latent_dim = 8;
    int lookahead = 5;
    double beta = 0.01;
    double rho = 0.95;
    int hidden = 128;
    int layers = 2;
    double lr = 1e-3;
    int batch = 32;
    int chunk_len = 24;
    int train_steps = 2000;
    int dataset_episodes = 200;
    int episode_steps = 300;
    double action_noise = 0.25;
  } npmp;

  struct Mpo {
    double epsilon = 0.1;
    double beta_trust = 5e-3;
    int n_action_samples = 20;
    double retrace_lambda = 0.95;
    int target_refresh = 100;
    int chunk_len = 16;
    double density_floor = 1e-12;
    double policy_lr = 3e-4;
    double q_lr = 1e-3;
    int batch_chunks = 8;
    int mstep_iters = 5;
    int q_steps = 4;
    double kl_mult_init = 10.0;
    double kl_mult_lr = 50.0;
    double kl_mult_max = 1e6;
    int update_period_steps = 64;
    int min_replay_chunks = 64;
  } mpo;

  struct Pbt {
    int population = 4;
    double f_init = 0.5;
    double decay = 0.9995;
    double eligible_min_steps = 1e5;
    double mutate_prob = 1.0 / 3.0;
    double mutate_factor = 1.25;
    double nash_tol = 1e-6;
    int nash_max_iters = 2000000;
    double lambda_init = 0.3;
    double alpha_sparse_init = 1.0;
    double alpha_dense_init = 0.05;
    double gamma_sparse_init = 0.99;
    double gamma_dense_init = 0.9;
  } pbt;

  struct Priors {
    int mc_samples = 16;
    int distill_seeds = 4;              // paper: keep lowest-loss of four
    int rollout_episodes = 8;
    int train_steps = 1500;
    double lr = 1e-3;
  } priors;

  struct Analytics {
    int grid_x = 60;
    int grid_y = 40;
    double reaction_time = 0.5;         // paper
    double obso_softmin_s = 0.3;
    double obso_cutoff_s = 3.0;
    double pass_min_range = 5.0;        // paper
    double pass_long_range = 10.0;      // paper
    double receiver_obso_min_range = 5.0;
    double near_ball_radius = 2.0;      // paper
    double spread_dist = 5.0;           // paper
    int episode_steps = 3000;           // paper: 90 s analytics episodes
    double score_bin_m = 2.0;
    double probe_seconds = 5.0;         // paper
    int cpd_states = 64;
    int cpd_resamples = 16;
  } analytics;

  struct Eval {
    int matches = 64;                   // paper
    double elo_scale = 400.0;
    double elo_anchor = 1000.0;
    double elo_cap = 4000.0;
  } eval;

  struct Run {
    int threads = 1;
    int concurrent_matches = 8;
    int replay_capacity_steps = 100000;
    int checkpoint_stride = 0;          // 0 = only at round end
    std::string out_dir = "out";
  } run;

  uint64_t seed = 1;
};

struct ConfigKeyInfo {
  std::string key;
  std::string type;        // "float" | "int" | "bool" | "string"
  std::string provenance;  // "paper" | "free"
  std::string doc;
};

// Parse TOML-subset text ([section] headers, key = value, # comments).
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

// Canonical serialization: every key, sorted sections, 17 significant digits.
std::string serialize_config(const RunConfig& cfg);
uint64_t config_hash(const RunConfig& cfg);

// Re-checks every registered constraint; throws ConfigError naming the key.
void validate_config(const RunConfig& cfg);

std::vector<ConfigKeyInfo> describe_config();

}  // namespace pitchlab
