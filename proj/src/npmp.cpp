#include "pitchlab/skills/npmp.hpp"

#include <cmath>

#include "pitchlab/sim/scripted.hpp"

namespace pitchlab {

size_t SkillDataset::pair_count() const {
  size_t n = 0;
  for (const auto& t : trajectories) n += static_cast<size_t>(t.a.cols());
  return n;
}

uint64_t SkillDataset::content_hash() const {
  uint64_t h = 14695981039346656037ULL;
  for (const auto& t : trajectories) {
    h = fnv1a64(t.x.data(), sizeof(double) * t.x.size(), h);
    h = fnv1a64(t.a.data(), sizeof(double) * t.a.size(), h);
  }
  return h;
}

std::vector<Mat*> NpmpParams::trainable() {
  std::vector<Mat*> out = encoder.params();
  for (Mat* p : decoder.params()) out.push_back(p);
  return out;
}

uint64_t NpmpParams::decoder_hash() const { return params_hash(decoder.params()); }

NpmpParams make_npmp(const RunConfig& cfg, Rng& rng) {
  NpmpParams np;
  np.latent_dim = cfg.npmp.latent_dim;
  np.lookahead = cfg.npmp.lookahead;
  np.proprio_dim = 6;
  np.rho = cfg.npmp.rho;
  np.beta = cfg.npmp.beta;
  const int enc_in = np.latent_dim + np.proprio_dim * np.lookahead;
  // the encoder output must carry future-state information from the start,
  // otherwise z is noise at init, the decoder zeroes it, and the latent
  // channel never bootstraps
  np.encoder = PolicyNet::make(enc_in, np.latent_dim, cfg.npmp.hidden, cfg.npmp.layers, rng,
                               cfg.net.sigma_min, cfg.net.sigma_max, 0.5, 1.0);
  np.decoder = PolicyNet::make(np.decoder_x_dim + np.latent_dim, 3, cfg.npmp.hidden,
                               cfg.npmp.layers, rng, cfg.net.sigma_min, cfg.net.sigma_max);
  np.decoder.squash_mean = true;
  np.decoder.mean_lo = VectorXd(3);
  np.decoder.mean_lo << -1.0, -1.0, 0.0;
  np.decoder.mean_hi = VectorXd(3);
  np.decoder.mean_hi << 1.0, 1.0, 1.0;
  return np;
}

SkillDataset generate_expert_dataset(Rng& rng, int n_episodes, const RunConfig& cfg) {
  SkillDataset data;
  const char* kinds[] = {"waypoint", "dash_turn", "ball_approach"};
  for (int ep = 0; ep < n_episodes; ++ep) {
    const std::string kind = kinds[ep % 3];
    // dash/waypoint run on the empty follow arena; ball_approach needs a ball
    const TaskId arena = kind == "ball_approach" ? TaskId::dribble : TaskId::follow;
    GameState s = reset(arena, rng, cfg);
    auto ctrl = make_scripted(kind);
    ctrl->reset(s, rng);

    const int steps = std::min(cfg.npmp.episode_steps, s.horizon);
    SkillDataset::Trajectory traj;
    traj.x.resize(6, steps);
    traj.a.resize(3, steps);
    const auto& layout = obs_layout(arena, cfg);
    const ObsBlock* proprio = layout.find("proprio");
    for (int t = 0; t < steps && !s.terminal; ++t) {
      ObservationVector obs = observe(s, 0, cfg);
      traj.x.col(t) = obs.values.segment(proprio->offset, proprio->size);
      ActionCommand clean = ctrl->act(s, 0, rng).quantized();
      traj.a.col(t) << clean.forward, clean.turn, clean.kick;
      ActionCommand noisy = clean;
      noisy.forward += cfg.npmp.action_noise * rng.normal();
      noisy.turn += cfg.npmp.action_noise * rng.normal();
      std::vector<ActionCommand> actions = {noisy};
      step(s, actions, cfg);
    }
    data.trajectories.push_back(std::move(traj));
  }
  return data;
}

WindowBatch sample_windows(const SkillDataset& data, int len, int lookahead, int batch, Rng& rng) {
  if (data.trajectories.empty()) throw NnError("sample_windows: empty dataset");
  WindowBatch wb;
  wb.len = len;
  wb.batch = batch;
  const int span = len + lookahead;
  const int xdim = static_cast<int>(data.trajectories.front().x.rows());
  const int adim = static_cast<int>(data.trajectories.front().a.rows());
  for (int t = 0; t < span; ++t) wb.x.emplace_back(Mat::Zero(xdim, batch));
  for (int t = 0; t < len; ++t) wb.a.emplace_back(Mat::Zero(adim, batch));
  for (int b = 0; b < batch; ++b) {
    const SkillDataset::Trajectory* traj = nullptr;
    for (int tries = 0; tries < 100; ++tries) {
      const auto& cand = data.trajectories[rng.uniform_int(data.trajectories.size())];
      if (cand.a.cols() >= span + 1) {
        traj = &cand;
        break;
      }
    }
    if (!traj) throw NnError("sample_windows: trajectories shorter than window span");
    const int t0 =
        static_cast<int>(rng.uniform_int(static_cast<uint64_t>(traj->a.cols() - span)));
    for (int t = 0; t < span; ++t) wb.x[t].col(b) = traj->x.col(t0 + t);
    for (int t = 0; t < len; ++t) wb.a[t].col(b) = traj->a.col(t0 + t);
  }
  return wb;
}

ElboParts npmp_objective(NpmpParams& params, const WindowBatch& batch, double beta, Rng& rng,
                         Graph* g_out, Var* loss_out) {
  Graph local;
  Graph& g = g_out ? *g_out : local;
  const int B = batch.batch;
  const int L = batch.len;
  const int dz = params.latent_dim;
  const int k = params.lookahead;
  const double prior_sigma = std::sqrt(1.0 - params.rho * params.rho);

  Var z_prev = g.constant(Mat::Zero(dz, B));
  Var dec_ll_sum = g.constant_scalar(0.0);
  Var prior_ll_sum = g.constant_scalar(0.0);
  Var q_ll_sum = g.constant_scalar(0.0);

  for (int t = 0; t < L; ++t) {
    // encoder input: [z_prev ; x_{t+1..t+k}]
    Mat lookahead(params.proprio_dim * k, B);
    for (int j = 0; j < k; ++j)
      lookahead.middleRows(j * params.proprio_dim, params.proprio_dim) = batch.x[t + 1 + j];
    Var enc_in = vstack(z_prev, g.constant(std::move(lookahead)));
    auto [qm, qs] = params.encoder.forward_graph(g, enc_in);

    Mat eps = Mat::NullaryExpr(dz, B, [&] { return rng.normal(); });
    Var z = add(qm, mul(qs, g.constant(std::move(eps))));

    Var dec_in = vstack(g.constant(Mat(batch.x[t].topRows(params.decoder_x_dim))), z);
    auto [am, as] = params.decoder.forward_graph(g, dec_in);
    Var dec_ll = gaussian_log_prob_graph(am, as, g.constant(batch.a[t]));

    Var prior_mean = affine_scalar(z_prev, params.rho, 0.0);
    Var prior_sig = g.constant(Mat::Constant(dz, B, prior_sigma));
    Var prior_ll = gaussian_log_prob_graph(prior_mean, prior_sig, z);
    Var q_ll = gaussian_log_prob_graph(qm, qs, z);

    dec_ll_sum = add(dec_ll_sum, mean_all(dec_ll));
    prior_ll_sum = add(prior_ll_sum, mean_all(prior_ll));
    q_ll_sum = add(q_ll_sum, mean_all(q_ll));
    z_prev = z;
  }

  const double inv_len = 1.0 / static_cast<double>(L);
  Var dec_term = affine_scalar(dec_ll_sum, inv_len, 0.0);
  Var kl_term = affine_scalar(sub(prior_ll_sum, q_ll_sum), inv_len, 0.0);
  Var objective = add(dec_term, affine_scalar(kl_term, beta, 0.0));

  ElboParts parts;
  parts.decoder_ll = g.val(dec_term)(0, 0);
  parts.prior_ll = g.val(prior_ll_sum)(0, 0) * inv_len;
  parts.q_ll = g.val(q_ll_sum)(0, 0) * inv_len;
  parts.total = g.val(objective)(0, 0);

  if (g_out && loss_out) *loss_out = affine_scalar(objective, -1.0, 0.0);
  return parts;
}

namespace {

double heldout_objective(NpmpParams& params, const SkillDataset& heldout, const RunConfig& cfg,
                         uint64_t eval_seed) {
  Rng rng(eval_seed);
  double total = 0.0;
  const int evals = 8;
  for (int i = 0; i < evals; ++i) {
    WindowBatch wb = sample_windows(heldout, cfg.npmp.chunk_len, cfg.npmp.lookahead,
                                    cfg.npmp.batch, rng);
    total += npmp_objective(params, wb, params.beta, rng).total;
  }
  return total / evals;
}

}  // namespace

NpmpTrainReport train_npmp(NpmpParams& params, const SkillDataset& data, const RunConfig& cfg,
                           Rng& rng) {
  if (data.trajectories.empty()) throw NnError("train_npmp: empty dataset");
  // hold out the tail 10% of trajectories
  SkillDataset train, held;
  const size_t n_held = std::max<size_t>(1, data.trajectories.size() / 10);
  for (size_t i = 0; i < data.trajectories.size(); ++i)
    (i + n_held >= data.trajectories.size() ? held : train).trajectories.push_back(
        data.trajectories[i]);
  if (train.trajectories.empty()) train = held;

  NpmpTrainReport report;
  report.heldout_before = heldout_objective(params, held, cfg, 0xe7a1);

  Adam opt(cfg.npmp.lr);
  for (int it = 0; it < cfg.npmp.train_steps; ++it) {
    WindowBatch wb =
        sample_windows(train, cfg.npmp.chunk_len, cfg.npmp.lookahead, cfg.npmp.batch, rng);
    Graph g;
    Var loss;
    ElboParts parts = npmp_objective(params, wb, params.beta, rng, &g, &loss);
    if (!std::isfinite(parts.total))
      throw NnError("train_npmp: objective diverged (non-finite) at step " + std::to_string(it));
    g.backward(loss);
    opt.step(g.leaf_grads());
    if (it % 50 == 0) report.curve.push_back(parts.total);
  }

  report.heldout_after = heldout_objective(params, held, cfg, 0xe7a1);
  return report;
}

GaussianParams decode(const NpmpParams& npmp, const VectorXd& proprio, const VectorXd& z) {
  if (z.size() != npmp.latent_dim) throw NnError("decode: latent dimension mismatch");
  if (proprio.size() < npmp.decoder_x_dim) throw NnError("decode: proprio too short");
  VectorXd in(npmp.decoder_x_dim + z.size());
  in << proprio.head(npmp.decoder_x_dim), z;
  return npmp.decoder.forward(in);
}

GaussianParams prior_step(const NpmpParams& npmp, const VectorXd& z_prev) {
  if (!z_prev.allFinite()) throw NnError("prior_step: non-finite latent");
  GaussianParams p;
  p.mean = npmp.rho * z_prev;
  p.sigma = VectorXd::Constant(z_prev.size(), std::sqrt(1.0 - npmp.rho * npmp.rho));
  return p;
}

void save_npmp(const std::string& prefix, const NpmpParams& params) {
  NamedTensors t;
  add_policy_tensors(t, "encoder", params.encoder);
  add_policy_tensors(t, "decoder", params.decoder);
  Mat meta(6, 1);
  meta << params.latent_dim, params.lookahead, params.proprio_dim, params.rho,
      params.beta, params.decoder_x_dim;
  t.add("meta", meta);
  save_checkpoint(prefix, "npmp", t);
}

NpmpParams load_npmp(const std::string& prefix) {
  std::string tag;
  NamedTensors t = load_checkpoint(prefix, &tag);
  if (tag != "npmp") throw CheckpointError("checkpoint at '" + prefix + "' is not tagged npmp");
  NpmpParams np;
  const Mat& meta = t.get("meta");
  np.latent_dim = static_cast<int>(meta(0, 0));
  np.lookahead = static_cast<int>(meta(1, 0));
  np.proprio_dim = static_cast<int>(meta(2, 0));
  np.rho = meta(3, 0);
  np.beta = meta(4, 0);
  np.decoder_x_dim = meta.rows() > 5 ? static_cast<int>(meta(5, 0)) : 3;
  // rebuild shells with the right shapes, then overwrite
  Rng tmp(0);
  RunConfig cfg;
  cfg.npmp.latent_dim = np.latent_dim;
  cfg.npmp.lookahead = np.lookahead;
  NpmpParams shell = make_npmp(cfg, tmp);
  np.encoder = shell.encoder;
  np.decoder = shell.decoder;
  load_policy_tensors(t, "encoder", np.encoder);
  load_policy_tensors(t, "decoder", np.decoder);
  return np;
}

}  // namespace pitchlab
