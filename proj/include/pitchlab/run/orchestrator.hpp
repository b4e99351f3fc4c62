#pragma once

#include <deque>
#include <mutex>

#include "pitchlab/io/trajectory_log.hpp"
#include "pitchlab/pbt/population.hpp"
#include "pitchlab/sim/scripted.hpp"

namespace pitchlab {

struct OrchestratorError : std::runtime_error {
  explicit OrchestratorError(const std::string& what) : std::runtime_error(what) {}
};

// ---------- parameter snapshots and batched inference ----------

struct PolicySnapshot {
  PolicyNet net;
  uint64_t version = 0;
};

// Immutable snapshots behind shared_ptr: actors never observe a half-written
// update, a swap just republishes the pointer.
class SnapshotStore {
 public:
  void publish(const std::string& id, const PolicyNet& net);
  std::shared_ptr<const PolicySnapshot> get(const std::string& id) const;
  bool has(const std::string& id) const;

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const PolicySnapshot>> map_;
  uint64_t next_version_ = 1;
};

struct InferRequest {
  std::string model;
  VectorXd obs;
};

struct InferResult {
  GaussianParams head;
  uint64_t version = 0;
};

// Groups requests by model id and evaluates each group against exactly one
// snapshot, so responses are bit-exact against unbatched evaluation and a
// concurrent publish never mixes parameters inside a batch.
class InferenceService {
 public:
  explicit InferenceService(const SnapshotStore& store) : store_(store) {}
  std::vector<InferResult> infer(const std::vector<InferRequest>& requests) const;

 private:
  const SnapshotStore& store_;
};

// ---------- replay ----------

class ReplayBuffer {
 public:
  ReplayBuffer(int capacity_steps, int chunk_len);

  void add(TrajectoryChunk chunk);
  size_t chunks() const;
  bool ready(int min_chunks) const;
  std::vector<TrajectoryChunk> sample(int n, Rng& rng) const;

 private:
  mutable std::mutex mu_;
  std::deque<TrajectoryChunk> ring_;
  size_t capacity_chunks_;
};

// ---------- matchmaking ----------

struct MatchAssignment {
  int agent_i = 0;
  int agent_j = 0;
  uint64_t seed = 0;
};

// Uniform with replacement; self-play pairs are allowed.
MatchAssignment sample_match(int population_size, Rng& rng);

// Scripted-vs-scripted football episode with a full trajectory log.
TrajectoryLog play_scripted_episode(const std::string& home_kind, const std::string& away_kind,
                                    int max_steps, uint64_t seed, const RunConfig& cfg);

// Policy-vs-scripted football episode; the policy controls the home clones.
TrajectoryLog play_policy_episode(const PolicyNet& policy, const NpmpParams& npmp,
                                  const std::string& away_kind, int max_steps, uint64_t seed,
                                  const RunConfig& cfg);

// ---------- the in-process training loop ----------

struct RoundMetrics {
  double env_steps = 0.0;
  long long episodes = 0;
  long long learner_updates = 0;
  long long evolution_events = 0;
  std::vector<double> fitness;       // per agent at round end
  std::vector<uint64_t> policy_hash; // per agent at round end
  double mean_q_loss = 0.0;
  double mean_mstep_kl = 0.0;
};

struct EvalOutcome {
  std::vector<EloMatch> matches;
  EloResult elo;
  int n_agents = 0;      // entities [0, n_agents) are population agents
  int n_evaluators = 0;  // entities [n_agents, n_agents+n_evaluators)
};

class Orchestrator {
 public:
  Orchestrator(const RunConfig& cfg, TaskId task, NpmpParams npmp,
               std::optional<MixturePrior> mix, uint64_t seed);
  ~Orchestrator();

  // Algorithm-1 main loop for the given env-step budget: matchmaking,
  // concurrent episode execution, fitness updates, learner stepping,
  // evolution when eligible, checkpoint at round end.
  RoundMetrics run_training_round(double env_step_budget);

  // Play matches between one agent (or each agent) and the scripted
  // evaluator pool; fits Elo with the evaluators as the anchor set.
  EvalOutcome evaluate(const std::vector<std::string>& evaluator_kinds, int n_matches,
                       uint64_t seed, int only_agent = -1);

  // A full logged episode of `agent` (both clones) against one scripted
  // evaluator controlling the other team.
  TrajectoryLog play_episode_vs(const std::string& evaluator_kind, int agent, uint64_t seed,
                                int max_steps = -1);

  void write_checkpoint() const;

  // Load (theta, theta^Q) for one agent from a checkpoint prefix and
  // republish its snapshot.
  void load_agent(int agent, const std::string& params_prefix);

  std::vector<AgentRecord>& population() { return population_; }
  const PayoffMatrix& payoff() const { return payoff_; }
  NashResult nash() const;
  SnapshotStore& snapshots() { return snapshots_; }
  const InferenceService& inference() const { return inference_; }
  const NpmpParams& npmp() const { return npmp_; }
  double total_env_steps() const { return total_env_steps_; }
  int top_agent() const;  // highest fitness, ties to lowest id

  const ObsLayout& layout() const { return *layout_; }

 private:
  struct Lane;
  void reset_lane(Lane& lane);
  void sweep_lanes(std::vector<Lane>& lanes, RoundMetrics& metrics);
  void finish_episode(Lane& lane, RoundMetrics& metrics);
  void maybe_update_learners(RoundMetrics& metrics);
  void refresh_fitness();

  RunConfig cfg_;
  TaskId task_;
  NpmpParams npmp_;
  std::optional<MixturePrior> mix_;
  const ObsLayout* layout_ = nullptr;
  int proprio_offset_ = 0, proprio_size_ = 0;

  std::vector<AgentRecord> population_;
  std::vector<std::shared_ptr<ReplayBuffer>> replay_;
  std::vector<double> steps_since_update_;
  PayoffMatrix payoff_;
  bool payoff_dirty_ = false;

  SnapshotStore snapshots_;
  InferenceService inference_;

  Rng control_rng_;
  uint64_t episode_counter_ = 0;
  double total_env_steps_ = 0.0;
  std::string metrics_path_;
  std::vector<Lane> lanes_;
};

}  // namespace pitchlab
