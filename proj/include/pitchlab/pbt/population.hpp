#pragma once

#include <memory>
#include <optional>

#include "pitchlab/rl/mpo.hpp"

namespace pitchlab {

struct PbtError : std::runtime_error {
  explicit PbtError(const std::string& what) : std::runtime_error(what) {}
};

// The hyperparameters evolved by the outer loop: per-channel reward weights
// and discounts, the prior mixture weights, the prior-KL coefficient, and
// the two learning rates.
struct HyperParams {
  VectorXd alpha;   // channels, >= 0
  VectorXd gamma;   // channels, in (0,1)
  VectorXd beta;    // 4 mixture weights on the simplex
  double lambda = 0.0;
  double policy_lr = 3e-4;
  double q_lr = 1e-3;

  void validate() const;
};

HyperParams sample_initial_hyper(TaskId task, const RunConfig& cfg, Rng& rng);

// Per-coordinate uniform pick between child and parent values.
HyperParams crossover(const HyperParams& child, const HyperParams& parent, Rng& rng);

// Each coordinate independently with prob cfg.pbt.mutate_prob by factor
// {1/f, f}; gamma moves in log(1-gamma) space; beta is renormalized.
HyperParams mutate(const HyperParams& h, const RunConfig& cfg, Rng& rng);

struct AgentRecord {
  int id = 0;
  HyperParams hyper;
  double fitness = 0.5;
  double steps_since_evolution = 0.0;
  double total_env_steps = 0.0;
  std::shared_ptr<MpoLearner> learner;  // holds (theta, theta^Q)
};

// Decayed beta win/loss counts per ordered agent pair; both orderings are
// updated from every result so the derived matrix stays constant-sum.
class PayoffMatrix {
 public:
  PayoffMatrix(int n, double decay);

  // outcome: +1 i beat j, 0 draw, -1 i lost. Decays every count first.
  void record_result(int i, int j, int outcome);

  int size() const { return static_cast<int>(wins_.rows()); }
  double wins(int i, int j) const { return wins_(i, j); }
  double losses(int i, int j) const { return losses_(i, j); }

  // Mean win probability: wins/(wins+losses), 0.5 for empty pairs and the
  // diagonal.
  Mat mean_matrix() const;

  void reset_agent(int i);  // evolution wipes a reborn agent's history

 private:
  Mat wins_, losses_;
  double decay_;
};

struct NashResult {
  VectorXd p;            // mixed equilibrium over agents
  VectorXd fitness;      // M * p
  double exploitability; // max_i (A p)_i with A = M - 1/2
  int iterations;
};

// Regret matching (RM+ with linear averaging) on the zero-sum game
// A = M - 1/2, polished by an exact support solve; exploitability <= tol.
NashResult nash_average(const Mat& mean_matrix, double tol = 1e-6, int max_iters = 2000000);

struct EvolutionEvent {
  int child = -1;
  int parent = -1;
  HyperParams hyper_before, hyper_after;
};

// Alg-1 evolution: requires every agent to have trained at least
// cfg.pbt.eligible_min_steps since its last evolution; the child is the
// minimum-fitness agent (ties toward the lowest id), the parent uniform.
// Returns nullopt when not eligible.
std::optional<EvolutionEvent> evolution_step(std::vector<AgentRecord>& population,
                                             const RunConfig& cfg, Rng& rng);

// ---------- Elo ----------

struct EloMatch {
  int entity_a = 0;
  int entity_b = 0;
  double score_a = 0.5;  // 1 win, 0.5 draw, 0 loss
};

struct EloResult {
  VectorXd ratings;
  bool degenerate = false;  // ratings hit the configured cap
};

// Maximum-likelihood logistic ratings (base 10, scale 400), draws counted
// as half win + half loss; the anchor set's mean is pinned afterwards.
EloResult elo_fit(const std::vector<EloMatch>& matches, int n_entities,
                  const std::vector<int>& anchor_entities, const RunConfig& cfg);

double elo_expected_score(double rating_a, double rating_b, double scale = 400.0);

}  // namespace pitchlab
