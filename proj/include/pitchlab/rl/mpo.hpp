#pragma once

#include "pitchlab/skills/priors.hpp"

namespace pitchlab {

struct MpoError : std::runtime_error {
  explicit MpoError(const std::string& what) : std::runtime_error(what) {}
};

// Per-channel surrogate-objective hyperparameters.
struct ChannelHyper {
  VectorXd alpha;  // >= 0
  VectorXd gamma;  // in (0,1)
};

// Fixed-length slice of one episode. Column L of obs is the bootstrap
// observation; `terminal[t] = 1` marks an episode end at step t (no
// bootstrap past it).
struct TrajectoryChunk {
  Mat obs;                 // obs_dim x (L+1)
  Mat z;                   // latent_dim x L
  VectorXd behavior_logp;  // L
  Mat rewards;             // channels x L (unscaled)
  VectorXd terminal;       // L

  int len() const { return static_cast<int>(z.cols()); }
};

struct MpoConfig {
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
};

MpoConfig mpo_config_from(const RunConfig& cfg);

// Core retrace recursion for one channel:
//   R_t = r_t + g*(1-term_t) * [ EQ_{t+1} + c_{t+1} * (R_{t+1} - Q_{t+1}) ]
// with Q_t = Q(h_t, a_t), EQ_t = E_pi Q(h_t, .), c_t = lambda*min(1, ratio_t).
// eq carries L+1 entries (the last is the bootstrap state).
VectorXd retrace_recursion(const VectorXd& rewards, const VectorXd& q_sa, const VectorXd& eq,
                           const VectorXd& c, const VectorXd& terminal, double gamma);

// Neural path: per-chunk per-channel targets (channels x L each).
std::vector<Mat> retrace_targets(const std::vector<const TrajectoryChunk*>& chunks,
                                 const MultiChannelQ& q_target, const PolicyNet& policy,
                                 const ChannelHyper& hyper, const MpoConfig& cfg, Rng& rng);

struct EstepResult {
  Mat weights;     // n_a x n_states, each column sums to 1
  double eta = 0;  // dual temperature
  double mean_kl = 0;  // mean KL(weights || uniform) over states
};

// Nonparametric E-step: weights = softmax(q/eta) with eta from a 1-D
// bisection on the dual so that the sample KL to uniform meets epsilon.
EstepResult estep_weights(const Mat& q_values, double epsilon);

struct MstepStats {
  double kl_to_old = 0;
  double mixture_kl = 0;
  double weighted_ll = 0;
  double multiplier = 0;
  bool accepted = true;
};

// Trust-region M-step. Maximizes sum_j sum_r w_jr log pi(z_jr | h_j)
// - lambda*KL(pi || mixture), with KL(pi_old || pi) <= beta_trust enforced
// by an adaptive multiplier plus a parameter-interpolation backstop.
// lambda = 0 skips the mixture term entirely.
MstepStats mstep_update(PolicyNet& policy, const Mat& obs, const Mat& z_samples,
                        const Mat& weights, double beta_trust,
                        const std::vector<std::pair<Mat, Mat>>* prior_heads,
                        const VectorXd* prior_weights, double lambda, const MpoConfig& cfg,
                        Adam& opt, double& kl_multiplier, Rng& rng);

// One Adam step on the per-channel squared error to the targets.
double q_update(MultiChannelQ& q, const std::vector<const TrajectoryChunk*>& chunks,
                const std::vector<Mat>& targets, Adam& opt);

// Batched policy heads (fast GEMM path, learner-internal).
struct GaussianBatch {
  Mat mean, sigma;
};
GaussianBatch policy_heads_fast(const PolicyNet& net, const Mat& obs);
double mean_kl_between(const GaussianBatch& p, const GaussianBatch& q);

struct LearnerMetrics {
  double q_loss = 0;
  double eta = 0;
  double estep_kl = 0;
  double mstep_kl = 0;
  double mixture_kl = 0;
  double weighted_ll = 0;
  long long updates = 0;
};

// One agent's inner-loop learner: policy, per-channel Q, target network.
class MpoLearner {
 public:
  MpoLearner(int obs_dim, int latent_dim, int channels, const RunConfig& run_cfg, Rng& rng);

  LearnerMetrics update(const std::vector<const TrajectoryChunk*>& batch,
                        const ChannelHyper& hyper, const ObsLayout* layout,
                        const MixturePrior* mix, double lambda, Rng& rng);

  void copy_weights_from(const MpoLearner& other);  // inherit (theta, theta^Q)
  void refresh_target();
  void set_lrs(double policy_lr, double q_lr);

  PolicyNet policy;
  MultiChannelQ q;
  MultiChannelQ q_target;
  MpoConfig cfg;
  double kl_multiplier;
  long long update_count = 0;

 private:
  Adam policy_opt_;
  Adam q_opt_;
};

}  // namespace pitchlab
