#include "pitchlab/rl/mpo.hpp"

#include <cmath>

namespace pitchlab {

MpoConfig mpo_config_from(const RunConfig& cfg) {
  MpoConfig m;
  m.epsilon = cfg.mpo.epsilon;
  m.beta_trust = cfg.mpo.beta_trust;
  m.n_action_samples = cfg.mpo.n_action_samples;
  m.retrace_lambda = cfg.mpo.retrace_lambda;
  m.target_refresh = cfg.mpo.target_refresh;
  m.chunk_len = cfg.mpo.chunk_len;
  m.density_floor = cfg.mpo.density_floor;
  m.policy_lr = cfg.mpo.policy_lr;
  m.q_lr = cfg.mpo.q_lr;
  m.batch_chunks = cfg.mpo.batch_chunks;
  m.mstep_iters = cfg.mpo.mstep_iters;
  m.q_steps = cfg.mpo.q_steps;
  m.kl_mult_init = cfg.mpo.kl_mult_init;
  m.kl_mult_lr = cfg.mpo.kl_mult_lr;
  m.kl_mult_max = cfg.mpo.kl_mult_max;
  return m;
}

VectorXd retrace_recursion(const VectorXd& rewards, const VectorXd& q_sa, const VectorXd& eq,
                           const VectorXd& c, const VectorXd& terminal, double gamma) {
  const int L = static_cast<int>(rewards.size());
  if (eq.size() != L + 1) throw MpoError("retrace_recursion: eq must have L+1 entries");
  VectorXd target(L);
  for (int t = L - 1; t >= 0; --t) {
    const bool term = terminal[t] != 0.0;
    double v = rewards[t];
    if (!term) {
      double correction = 0.0;
      if (t + 1 < L) correction = c[t + 1] * (target[t + 1] - q_sa[t + 1]);
      v += gamma * (eq[t + 1] + correction);
    }
    target[t] = v;
  }
  return target;
}

GaussianBatch policy_heads_fast(const PolicyNet& net, const Mat& obs) {
  const Mat out = net.mlp.forward_batch_fast(obs);
  const int d = net.act_dim;
  GaussianBatch h;
  h.mean = out.topRows(d);
  if (net.squash_mean) {
    const Mat c = (0.5 * (net.mean_hi + net.mean_lo)).replicate(1, obs.cols());
    const Mat r = (0.5 * (net.mean_hi - net.mean_lo)).replicate(1, obs.cols());
    h.mean = (c.array() + r.array() * h.mean.array().tanh()).matrix();
  }
  h.sigma = (net.sigma_min +
             (net.sigma_max - net.sigma_min) /
                 (1.0 + (-out.bottomRows(d).array()).exp()))
                .matrix();
  return h;
}

double mean_kl_between(const GaussianBatch& p, const GaussianBatch& q) {
  const auto sp = p.sigma.array(), sq = q.sigma.array();
  const auto dm = (p.mean - q.mean).array();
  const double total =
      ((sq.log() - sp.log()) + (sp.square() + dm.square()) / (2.0 * sq.square()) - 0.5).sum();
  return total / static_cast<double>(p.mean.cols());
}

namespace {

// log prob of z under a batched diagonal Gaussian, per column
VectorXd batch_log_prob(const GaussianBatch& h, const Mat& z) {
  const auto u = (z - h.mean).array() / h.sigma.array();
  const double d = static_cast<double>(z.rows());
  return (-0.5 * u.square().colwise().sum() - h.sigma.array().log().colwise().sum() -
          0.5 * d * std::log(2.0 * M_PI))
      .matrix()
      .transpose();
}

}  // namespace

std::vector<Mat> retrace_targets(const std::vector<const TrajectoryChunk*>& chunks,
                                 const MultiChannelQ& q_target, const PolicyNet& policy,
                                 const ChannelHyper& hyper, const MpoConfig& cfg, Rng& rng) {
  const int M = static_cast<int>(hyper.alpha.size());
  std::vector<Mat> out;
  out.reserve(chunks.size());

  for (const TrajectoryChunk* chunk : chunks) {
    const int L = chunk->len();
    const int dz = static_cast<int>(chunk->z.rows());
    if (L < 1) throw MpoError("retrace_targets: empty chunk");

    const GaussianBatch heads = policy_heads_fast(policy, chunk->obs);  // L+1 states

    // c_t = lambda * min(1, pi(z_t|h_t) / mu_t)
    VectorXd c(L);
    {
      GaussianBatch step_heads{heads.mean.leftCols(L), heads.sigma.leftCols(L)};
      const VectorXd logp_pi = batch_log_prob(step_heads, chunk->z);
      for (int t = 0; t < L; ++t) {
        const double mu = std::max(chunk->behavior_logp[t], std::log(cfg.density_floor));
        const double ratio = std::exp(std::min(0.0, logp_pi[t] - mu));
        c[t] = cfg.retrace_lambda * std::min(1.0, ratio);
      }
    }

    // E_pi[Q_target] per state via n_a sampled latents
    const int S = cfg.n_action_samples;
    Mat sampled_in(chunk->obs.rows() + dz, (L + 1) * S);
    for (int t = 0; t <= L; ++t)
      for (int s = 0; s < S; ++s) {
        const int col = t * S + s;
        sampled_in.col(col).head(chunk->obs.rows()) = chunk->obs.col(t);
        for (int k = 0; k < dz; ++k)
          sampled_in(chunk->obs.rows() + k, col) =
              heads.mean(k, t) + heads.sigma(k, t) * rng.normal();
      }
    const Mat q_samples = q_target.values_batch_fast(sampled_in);  // M x (L+1)*S
    Mat eq(M, L + 1);
    for (int t = 0; t <= L; ++t)
      eq.col(t) = q_samples.middleCols(t * S, S).rowwise().mean();

    // Q_target at the logged actions
    Mat logged_in(chunk->obs.rows() + dz, L);
    logged_in.topRows(chunk->obs.rows()) = chunk->obs.leftCols(L);
    logged_in.bottomRows(dz) = chunk->z;
    const Mat q_sa = q_target.values_batch_fast(logged_in);  // M x L

    Mat targets(M, L);
    for (int m = 0; m < M; ++m) {
      const VectorXd scaled_r = hyper.alpha[m] * chunk->rewards.row(m).transpose();
      targets.row(m) = retrace_recursion(scaled_r, q_sa.row(m).transpose(),
                                         eq.row(m).transpose(), c, chunk->terminal,
                                         hyper.gamma[m])
                           .transpose();
    }
    out.push_back(std::move(targets));
  }
  return out;
}

namespace {

// mean over states of KL(softmax(q/eta) || uniform)
double mean_sample_kl(const Mat& q, double eta) {
  const int n_a = static_cast<int>(q.rows());
  double total = 0.0;
  for (int j = 0; j < q.cols(); ++j) {
    const double m = q.col(j).maxCoeff();
    const Eigen::ArrayXd u = (q.col(j).array() - m) / eta;
    const Eigen::ArrayXd e = u.exp();
    const double sum = e.sum();
    const Eigen::ArrayXd w = e / sum;
    double kl = std::log(static_cast<double>(n_a)) - std::log(sum);
    for (int a = 0; a < n_a; ++a) kl += w[a] * u[a];
    total += kl;
  }
  return total / static_cast<double>(q.cols());
}

}  // namespace

EstepResult estep_weights(const Mat& q_values, double epsilon) {
  if (epsilon <= 0.0) throw MpoError("estep_weights: epsilon must be positive");
  if (!q_values.allFinite()) throw MpoError("estep_weights: non-finite q values");
  const int n_a = static_cast<int>(q_values.rows());
  if (n_a < 2) throw MpoError("estep_weights: need at least two action samples");

  // KL(eta) is monotone decreasing; bisect for KL = epsilon in log space.
  double lo = std::log(1e-9), hi = std::log(1e9);
  const double kl_lo = mean_sample_kl(q_values, std::exp(lo));
  const double kl_hi = mean_sample_kl(q_values, std::exp(hi));
  double eta;
  if (kl_lo <= epsilon) {
    eta = std::exp(lo);  // constraint slack everywhere (e.g. flat q)
  } else if (kl_hi > epsilon) {
    throw MpoError("estep_weights: dual bracket failed, KL(" + std::to_string(std::exp(hi)) +
                   ") = " + std::to_string(kl_hi) + " > epsilon = " + std::to_string(epsilon));
  } else {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mean_sample_kl(q_values, std::exp(mid)) > epsilon)
        lo = mid;
      else
        hi = mid;
    }
    eta = std::exp(0.5 * (lo + hi));
  }

  EstepResult res;
  res.eta = eta;
  res.weights.resize(n_a, q_values.cols());
  for (int j = 0; j < q_values.cols(); ++j) {
    const double m = q_values.col(j).maxCoeff();
    const Eigen::ArrayXd e = ((q_values.col(j).array() - m) / eta).exp();
    res.weights.col(j) = (e / e.sum()).matrix();
  }
  res.mean_kl = mean_sample_kl(q_values, eta);
  return res;
}

MstepStats mstep_update(PolicyNet& policy, const Mat& obs, const Mat& z_samples,
                        const Mat& weights, double beta_trust,
                        const std::vector<std::pair<Mat, Mat>>* prior_heads,
                        const VectorXd* prior_weights, double lambda, const MpoConfig& cfg,
                        Adam& opt, double& kl_multiplier, Rng& rng) {
  const int n = static_cast<int>(obs.cols());
  const int n_a = static_cast<int>(weights.rows());
  if (z_samples.cols() != static_cast<Eigen::Index>(n) * n_a)
    throw MpoError("mstep_update: z_samples must hold n_states * n_a columns");

  const GaussianBatch old_heads = policy_heads_fast(policy, obs);
  std::vector<Mat> saved;
  for (Mat* p : policy.params()) saved.push_back(*p);

  // weights flattened state-major to match repeat_cols order
  Mat w_row(1, n * n_a);
  for (int j = 0; j < n; ++j)
    for (int r = 0; r < n_a; ++r) w_row(0, j * n_a + r) = weights(r, j);

  MstepStats stats;
  stats.multiplier = kl_multiplier;
  const bool use_mixture = lambda > 0.0 && prior_heads && prior_weights;

  auto measure_kl = [&] {
    return mean_kl_between(old_heads, policy_heads_fast(policy, obs));
  };

  for (int it = 0; it < cfg.mstep_iters; ++it) {
    Graph g;
    auto [mean, sigma] = policy.forward_graph(g, g.constant(obs));
    Var lp = gaussian_log_prob_graph(repeat_cols(mean, n_a), repeat_cols(sigma, n_a),
                                     g.constant(z_samples));
    Var weighted = affine_scalar(sum_all(mul_rowwise(lp, g.constant(w_row))),
                                 -1.0 / static_cast<double>(n), 0.0);
    Var kl_old = mean_all(gaussian_kl_graph(g.constant(old_heads.mean),
                                            g.constant(old_heads.sigma), mean, sigma));
    Var loss = add(weighted, affine_scalar(kl_old, kl_multiplier, 0.0));
    if (use_mixture) {
      Var mix = mixture_kl_graph(g, mean, sigma, *prior_heads, *prior_weights,
                                 cfg.n_action_samples, rng);
      loss = add(loss, affine_scalar(mix, lambda, 0.0));
      stats.mixture_kl = g.val(mix)(0, 0);
    }
    stats.weighted_ll = -g.val(weighted)(0, 0);
    g.backward(loss);
    opt.step(g.leaf_grads());

    const double kl_now = measure_kl();
    kl_multiplier =
        std::max(0.0, kl_multiplier + cfg.kl_mult_lr * (kl_now - beta_trust));
    if (kl_multiplier >= cfg.kl_mult_max) {
      auto params = policy.params();
      for (size_t i = 0; i < params.size(); ++i) *params[i] = saved[i];
      kl_multiplier = cfg.kl_mult_init;
      stats.accepted = false;
      stats.kl_to_old = 0.0;
      return stats;
    }
  }

  // backstop: interpolate toward the old parameters until inside the region
  double kl_now = measure_kl();
  if (kl_now > beta_trust) {
    std::vector<Mat> delta;
    auto params = policy.params();
    for (size_t i = 0; i < params.size(); ++i) delta.push_back(*params[i] - saved[i]);
    double scale = 0.5;
    for (int tries = 0; tries < 40 && kl_now > beta_trust; ++tries, scale *= 0.5) {
      for (size_t i = 0; i < params.size(); ++i) *params[i] = saved[i] + scale * delta[i];
      kl_now = measure_kl();
    }
    if (kl_now > beta_trust) {
      for (size_t i = 0; i < params.size(); ++i) *params[i] = saved[i];
      kl_now = 0.0;
    }
  }
  stats.kl_to_old = kl_now;
  stats.multiplier = kl_multiplier;
  return stats;
}

double q_update(MultiChannelQ& q, const std::vector<const TrajectoryChunk*>& chunks,
                const std::vector<Mat>& targets, Adam& opt) {
  if (chunks.size() != targets.size()) throw MpoError("q_update: chunk/target count mismatch");
  int total = 0;
  for (const auto* c : chunks) total += c->len();
  const int obs_dim = static_cast<int>(chunks.front()->obs.rows());
  const int dz = static_cast<int>(chunks.front()->z.rows());
  const int M = q.channels();

  Mat input(obs_dim + dz, total);
  Mat target(M, total);
  int col = 0;
  for (size_t i = 0; i < chunks.size(); ++i) {
    const int L = chunks[i]->len();
    input.middleCols(col, L).topRows(obs_dim) = chunks[i]->obs.leftCols(L);
    input.middleCols(col, L).bottomRows(dz) = chunks[i]->z;
    target.middleCols(col, L) = targets[i];
    col += L;
  }

  Graph g;
  Var pred = q.values_graph(g, g.constant(input));
  Var loss = mean_all(vsquare(sub(pred, g.constant(target))));
  const double loss_value = g.val(loss)(0, 0);
  if (!std::isfinite(loss_value)) throw MpoError("q_update: non-finite loss");
  g.backward(loss);
  opt.step(g.leaf_grads());
  return loss_value;
}

MpoLearner::MpoLearner(int obs_dim, int latent_dim, int channels, const RunConfig& run_cfg,
                       Rng& rng)
    : cfg(mpo_config_from(run_cfg)),
      kl_multiplier(cfg.kl_mult_init),
      policy_opt_(cfg.policy_lr),
      q_opt_(cfg.q_lr) {
  policy = PolicyNet::make(obs_dim, latent_dim, run_cfg.net.hidden, run_cfg.net.layers, rng,
                           run_cfg.net.sigma_min, run_cfg.net.sigma_max);
  q = MultiChannelQ::make(obs_dim + latent_dim, channels, run_cfg.net.hidden, run_cfg.net.layers,
                          rng);
  q_target = q;
}

void MpoLearner::refresh_target() { q_target = q; }

void MpoLearner::set_lrs(double policy_lr, double q_lr) {
  policy_opt_.set_lr(policy_lr);
  q_opt_.set_lr(q_lr);
}

void MpoLearner::copy_weights_from(const MpoLearner& other) {
  auto dst_p = policy.params();
  auto src_p = other.policy.params();
  for (size_t i = 0; i < dst_p.size(); ++i) *dst_p[i] = *src_p[i];
  auto dst_q = q.params();
  auto src_q = other.q.params();
  for (size_t i = 0; i < dst_q.size(); ++i) *dst_q[i] = *src_q[i];
  q_target = other.q_target;
  policy_opt_ = Adam(policy_opt_.lr());
  q_opt_ = Adam(q_opt_.lr());
  kl_multiplier = cfg.kl_mult_init;
}

LearnerMetrics MpoLearner::update(const std::vector<const TrajectoryChunk*>& batch,
                                  const ChannelHyper& hyper, const ObsLayout* layout,
                                  const MixturePrior* mix, double lambda, Rng& rng) {
  if (batch.empty()) throw MpoError("MpoLearner::update: empty batch");
  LearnerMetrics metrics;

  // policy evaluation
  const std::vector<Mat> targets = retrace_targets(batch, q_target, policy, hyper, cfg, rng);
  for (int it = 0; it < cfg.q_steps; ++it)
    metrics.q_loss = q_update(q, batch, targets, q_opt_);

  // E-step states: every step state in the batch
  int total = 0;
  for (const auto* c : batch) total += c->len();
  const int obs_dim = static_cast<int>(batch.front()->obs.rows());
  const int dz = static_cast<int>(batch.front()->z.rows());
  Mat states(obs_dim, total);
  int col = 0;
  for (const auto* c : batch) {
    states.middleCols(col, c->len()) = c->obs.leftCols(c->len());
    col += c->len();
  }

  const GaussianBatch heads = policy_heads_fast(policy, states);
  const int S = cfg.n_action_samples;
  Mat z_samples(dz, total * S);
  for (int j = 0; j < total; ++j)
    for (int r = 0; r < S; ++r)
      for (int k = 0; k < dz; ++k)
        z_samples(k, j * S + r) = heads.mean(k, j) + heads.sigma(k, j) * rng.normal();

  Mat q_in(obs_dim + dz, total * S);
  for (int j = 0; j < total; ++j)
    for (int r = 0; r < S; ++r) {
      q_in.col(j * S + r).head(obs_dim) = states.col(j);
      q_in.col(j * S + r).tail(dz) = z_samples.col(j * S + r);
    }
  // the online q tracks fresh rewards faster than the target net
  const Mat q_vals_flat = q.values_batch_fast(q_in).colwise().sum();  // 1 x total*S
  Mat q_vals(S, total);
  for (int j = 0; j < total; ++j)
    for (int r = 0; r < S; ++r) q_vals(r, j) = q_vals_flat(0, j * S + r);

  EstepResult estep = estep_weights(q_vals, cfg.epsilon);
  metrics.eta = estep.eta;
  metrics.estep_kl = estep.mean_kl;

  // M-step, with mixture-prior heads for the batch states when enabled
  std::vector<std::pair<Mat, Mat>> prior_heads;
  const VectorXd* prior_w = nullptr;
  if (mix && lambda > 0.0) {
    if (!layout) throw MpoError("MpoLearner::update: mixture prior needs the obs layout");
    mix->validate();
    for (const auto& prior : mix->priors) {
      // pull the schema rows out of the state matrix
      Mat reduced(schema_dim(*layout, prior.schema), total);
      int k = 0;
      for (const auto& name : prior.schema) {
        const ObsBlock* b = layout->find(name);
        reduced.middleRows(k, b->size) = states.middleRows(b->offset, b->size);
        k += b->size;
      }
      const GaussianBatch ph = policy_heads_fast(prior.net, reduced);
      prior_heads.emplace_back(ph.mean, ph.sigma);
    }
    prior_w = &mix->weights;
  }

  MstepStats ms = mstep_update(policy, states, z_samples, estep.weights, cfg.beta_trust,
                               prior_heads.empty() ? nullptr : &prior_heads, prior_w, lambda,
                               cfg, policy_opt_, kl_multiplier, rng);
  metrics.mstep_kl = ms.kl_to_old;
  metrics.mixture_kl = ms.mixture_kl;
  metrics.weighted_ll = ms.weighted_ll;

  ++update_count;
  metrics.updates = update_count;
  if (update_count % cfg.target_refresh == 0) refresh_target();
  return metrics;
}

}  // namespace pitchlab
