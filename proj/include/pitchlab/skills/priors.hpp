#pragma once

#include "pitchlab/skills/npmp.hpp"

namespace pitchlab {

struct PriorError : std::runtime_error {
  explicit PriorError(const std::string& what) : std::runtime_error(what) {}
};

// Observation schema of a drill prior: the blocks it may condition on.
// follow -> {proprio}; dribble/shoot/kick_to_target -> {proprio, ball}.
// A shoot prior given goal features is a construction error.
std::vector<std::string> prior_schema(TaskId drill);
void validate_prior_schema(TaskId drill, const std::vector<std::string>& schema);

struct PriorPolicy {
  PolicyNet net;
  std::vector<std::string> schema;
  TaskId drill = TaskId::follow;
  double distill_loss = 0.0;

  PriorPolicy() = default;
  PriorPolicy(TaskId drill_kind, std::vector<std::string> schema_blocks, PolicyNet policy);
};

PriorPolicy make_prior(TaskId drill, int latent_dim, const RunConfig& cfg, Rng& rng);

// Pull the schema blocks out of any observation layout that carries them.
VectorXd extract_schema(const ObservationVector& obs, const std::vector<std::string>& schema);
int schema_dim(const ObsLayout& layout, const std::vector<std::string>& schema);

struct MixturePrior {
  std::vector<PriorPolicy> priors;
  VectorXd weights;  // simplex

  void validate() const;
};

// ---------- distillation (expert -> prior, forward KL) ----------

struct DistillDataset {
  Mat expert_mean, expert_sigma;  // d_z x N
  Mat reduced_obs;                // schema_dim x N
};

// Rolls out the expert on its drill and records its policy heads together
// with the schema-reduced observations.
DistillDataset collect_distill_dataset(const PolicyNet& expert, TaskId drill,
                                       const NpmpParams& npmp, int episodes,
                                       const RunConfig& cfg, Rng& rng);

struct DistillReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> curve;  // loss at every eval, non-increasing
};

// Minimizes E[KL(expert || prior)] on a frozen rollout set with a monotone
// descent guard (a step that raises the loss is rolled back at reduced lr).
DistillReport distill_prior(PriorPolicy& prior, const DistillDataset& data, int train_steps,
                            double lr, Rng& rng);

// Runs `seeds` restarts and keeps the prior with the lowest final loss.
PriorPolicy distill_prior_best_of(const PolicyNet& expert, TaskId drill, const NpmpParams& npmp,
                                  const RunConfig& cfg, Rng& rng);

// ---------- mixture KL (Eq.-5 direction: policy -> mixture) ----------

// Monte-Carlo estimate with policy-side sampling.
double mixture_kl(const GaussianParams& policy_head, const std::vector<GaussianParams>& priors,
                  const VectorXd& weights, int n_samples, Rng& rng);

// Differentiable version; prior heads are constants of shape d x n.
Var mixture_kl_graph(Graph& g, Var mean, Var sigma,
                     const std::vector<std::pair<Mat, Mat>>& prior_heads,
                     const VectorXd& weights, int n_samples, Rng& rng);

// Upper bound: min_i (KL(p || q_i) - log beta_i).
double mixture_kl_bound(const std::vector<double>& component_kls, const VectorXd& weights);

// Exact discrete utilities for bound checks.
double discrete_kl(const VectorXd& p, const VectorXd& q);
double discrete_mixture_kl(const VectorXd& p, const std::vector<VectorXd>& qs,
                           const VectorXd& weights);

// Batch-mean mixture KL over football observations (the L_priors term).
double l_priors(const PolicyNet& policy, const MixturePrior& mix,
                const std::vector<ObservationVector>& obs_batch, int n_samples, Rng& rng);

void save_prior(const std::string& prefix, const PriorPolicy& prior);
PriorPolicy load_prior(const std::string& prefix);

}  // namespace pitchlab
