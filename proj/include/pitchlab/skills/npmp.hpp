#pragma once

#include "pitchlab/nn/nets.hpp"
#include "pitchlab/sim/engine.hpp"

namespace pitchlab {

// Trajectories of proprioceptive features and noiseless expert actions.
struct SkillDataset {
  struct Trajectory {
    Mat x;  // proprio_dim x T
    Mat a;  // act_dim x T
  };
  std::vector<Trajectory> trajectories;

  size_t pair_count() const;
  uint64_t content_hash() const;
};

// Encoder q(z_t | z_{t-1}, x_{t+1:t+k}), AR(1) latent prior, decoder
// pi(a_t | x_t, z_t) with a bounded action head. The decoder is the frozen
// action interface for every later training stage.
struct NpmpParams {
  PolicyNet encoder;
  PolicyNet decoder;
  int latent_dim = 8;
  int lookahead = 5;
  int proprio_dim = 6;
  // The decoder reads only the kinematic proprio dims (heading-frame
  // velocity, speed). Conditioning it on the previous-action dims hands it
  // an identity shortcut: expert commands are smooth, so the decoder copies
  // them and the latent collapses. The encoder still sees the full future
  // proprio, so the motor intention carries the upcoming actions instead.
  int decoder_x_dim = 3;
  double rho = 0.95;
  double beta = 0.01;

  std::vector<Mat*> trainable();
  uint64_t decoder_hash() const;
};

NpmpParams make_npmp(const RunConfig& cfg, Rng& rng);

// Scripted waypoint / dash-turn / ball-approach experts rolled out with
// action noise; the recorded targets are the noiseless commands.
SkillDataset generate_expert_dataset(Rng& rng, int n_episodes, const RunConfig& cfg);

// One training window batch sampled from the dataset.
struct WindowBatch {
  std::vector<Mat> x;         // (L + lookahead) mats of proprio_dim x B
  std::vector<Mat> a;         // L mats of act_dim x B
  int len = 0;                // L
  int batch = 0;              // B
};
WindowBatch sample_windows(const SkillDataset& data, int len, int lookahead, int batch, Rng& rng);

struct ElboParts {
  double total = 0.0;       // decoder_ll + beta * (prior_ll - q_ll), per step-sample
  double decoder_ll = 0.0;  // mean log pi(a|x,z)
  double prior_ll = 0.0;    // mean log p_z(z|z_prev)
  double q_ll = 0.0;        // mean log q(z|z_prev, lookahead)
};

// Evaluates the reparameterized objective on a window batch; when `g` is
// non-null the differentiable loss Var (negative objective) is emitted too.
ElboParts npmp_objective(NpmpParams& params, const WindowBatch& batch, double beta, Rng& rng,
                         Graph* g = nullptr, Var* loss_out = nullptr);

struct NpmpTrainReport {
  double heldout_before = 0.0;  // objective on held-out windows at entry
  double heldout_after = 0.0;
  std::vector<double> curve;    // training objective every eval stride
};

NpmpTrainReport train_npmp(NpmpParams& params, const SkillDataset& data, const RunConfig& cfg,
                           Rng& rng);

// The frozen decoder's action distribution.
GaussianParams decode(const NpmpParams& npmp, const VectorXd& proprio, const VectorXd& z);

// AR(1) prior step: mean rho*z_prev, stddev sqrt(1 - rho^2).
GaussianParams prior_step(const NpmpParams& npmp, const VectorXd& z_prev);

void save_npmp(const std::string& prefix, const NpmpParams& params);
NpmpParams load_npmp(const std::string& prefix);

}  // namespace pitchlab
