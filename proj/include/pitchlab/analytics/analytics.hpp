#pragma once

#include <optional>

#include "pitchlab/io/trajectory_log.hpp"
#include "pitchlab/sim/scripted.hpp"
#include "pitchlab/skills/priors.hpp"

namespace pitchlab {

struct AnalyticsError : std::runtime_error {
  explicit AnalyticsError(const std::string& what) : std::runtime_error(what) {}
};

// ---------- touches and passes ----------

struct TouchEvent {
  int step = 0;
  int player = -1;
  int team = 0;
};

struct PassEvent {
  int team = 0;
  int passer = -1;
  int receiver = -1;
  int step_kick = 0;
  int step_receive = 0;
  double range = 0.0;
  std::array<double, 2> origin{};
  std::array<double, 2> destination{};
};

// Consecutive touch steps by the same player collapse into one touch (a
// kick spans a few contact steps).
std::vector<TouchEvent> collapse_touches(const TrajectoryLog& log);

// A pass: consecutive touches by distinct teammates, no goal in between,
// ball displacement of at least min_range.
std::vector<PassEvent> detect_passes(const TrajectoryLog& log, double min_range);

// ---------- behaviour statistics ----------

struct BehaviourStats {
  double speed = 0.0;
  std::optional<double> getting_up;  // structurally absent for disc players
  double ball_control = 0.0;
  double possession = 0.0;
  double pass_frequency = 0.0;
  double pass_range = 0.0;
  std::optional<double> division_of_labour;  // absent when never close to ball
  double territory = 0.0;
  double close_to_ball = 0.0;
  double ball_crowding = 0.0;
  double teammates_spread = 0.0;
  double passes_10m_per_episode = 0.0;
  double net_interceptions_per_episode = 0.0;
  std::optional<double> receiver_obso;
  long long touches = 0;
  long long passes = 0;
  long long episodes = 0;
};

// Statistics for one team (0 = home) over a set of episode logs.
BehaviourStats compute_behaviour_stats(const std::vector<TrajectoryLog>& logs,
                                       const RunConfig& cfg, int team = 0);

// ---------- OBSO ----------

struct ObsoModel {
  double v_p = 0.0;            // mean player speed
  double v_b = 0.0;            // mean ball speed over pass flights
  double t_r = 0.5;            // reaction time
  Vec2 transition_mean{0, 0};  // attack-aligned pass displacement mean
  Eigen::Matrix2d transition_cov = Eigen::Matrix2d::Identity();
  std::vector<double> score_bins;  // P(goal | distance bin)
  double score_bin_width = 2.0;
  bool score_fallback = false;
  double score_prior_scale = 8.0;

  double score_probability(double distance_to_goal) const;
};

ObsoModel fit_obso(const std::vector<TrajectoryLog>& logs, const RunConfig& cfg);

struct ObsoField {
  int nx = 0, ny = 0;
  double x0 = 0, y0 = 0, dx = 0, dy = 0;
  Mat control;     // receiver control probability per cell (nx x ny)
  Mat team_control;// receiving team's total control per cell
  Mat transition;  // grid-renormalized ball transition probability
  Mat score;       // score probability per cell
  Mat obso;        // product field

  Vec2 cell_center(int ix, int iy) const;
  double value_at(const Vec2& p) const;  // containing cell, 0 outside
};

// Snapshot needs positions/velocities/teams and the pitch; receiver is a
// player id on the attacking team.
ObsoField compute_obso(const GameState& snapshot, const ObsoModel& model, int receiver,
                       const RunConfig& cfg);

// Arrival time of the PPCF motion model: drift at the current velocity for
// t_r, then straight-line at the reference top speed.
double obso_arrival_time(const Vec2& position, const Vec2& velocity, const Vec2& target,
                         const ObsoModel& model);

// Mean OBSO at the reception point, measured at pass time, over qualifying
// passes (range >= cfg.analytics.receiver_obso_min_range) by `team`.
std::optional<double> receiver_obso_stat(const std::vector<TrajectoryLog>& logs,
                                         const ObsoModel& model, const RunConfig& cfg, int team);

// Rebuild a physics-free snapshot from one log step (for OBSO lookups).
GameState state_from_log(const TrajectoryLog& log, int step_idx, const RunConfig& cfg);

// Dense plain-text matrix dump: "rows cols" header then one row per line.
std::string field_to_text(const Mat& field);

// ---------- counterfactual policy divergence ----------

enum class CpdObject { ball, teammate, opponent1, opponent2 };

double cpd(const PolicyNet& policy, CpdObject object, int n_states, int n_resamples,
           const RunConfig& cfg, Rng& rng);

// ---------- probe task ----------

struct ProbeResult {
  double probe_score = 0.5;
  std::optional<double> pvc_passer;
  std::optional<double> pvc_receiver;
  int episodes = 0;
};

struct ProbeActors {
  const PolicyNet* policy = nullptr;        // attacker policy (both clones)
  ScriptedController* attacker = nullptr;   // scripted alternative
  const MultiChannelQ* q = nullptr;         // for PVC; scoring channel 0
};

ProbeResult run_probe(const ProbeActors& attackers,
                      const std::vector<std::string>& defender_kinds, int n_episodes,
                      const NpmpParams* npmp, const RunConfig& cfg, Rng& rng);

// ---------- linear knowledge probes ----------

struct LinearProbeReport {
  double balanced_accuracy = 0.0;  // mean over folds and re-splits
  double accuracy_sd = 0.0;        // sd over re-splits
};

// Logistic probe with 3-fold cross-validation repeated over 5 re-splits.
LinearProbeReport fit_linear_probe(const Mat& features, const std::vector<int>& labels,
                                   int folds, int resplits, Rng& rng);

// ---------- event-triggered KL ----------

struct EventKlCurves {
  int window = 0;                      // curve covers [-window, +window]
  std::vector<std::string> names;      // per prior
  std::vector<VectorXd> mean_kl;       // per prior, length 2*window+1
  int events = 0;
};

// KL(policy || prior_i) time-locked to kick events, averaged over events.
// States are reconstructed by deterministic replay of the logs.
EventKlCurves event_kl(const PolicyNet& policy, const std::vector<PriorPolicy>& priors,
                       const std::vector<TrajectoryLog>& logs, int window,
                       const RunConfig& cfg);

}  // namespace pitchlab
