#include "pitchlab/skills/priors.hpp"

#include <cmath>

namespace pitchlab {

std::vector<std::string> prior_schema(TaskId drill) {
  switch (drill) {
    case TaskId::follow: return {"proprio"};
    case TaskId::dribble:
    case TaskId::shoot:
    case TaskId::kick_to_target: return {"proprio", "ball"};
    case TaskId::football: break;
  }
  throw PriorError("prior_schema: football has no drill prior");
}

void validate_prior_schema(TaskId drill, const std::vector<std::string>& schema) {
  static const std::vector<std::string> football_blocks = {"proprio", "ball",      "goals",
                                                           "pitch",   "teammates", "opponents"};
  for (const auto& block : schema) {
    bool known = false;
    for (const auto& fb : football_blocks) known = known || fb == block;
    if (!known) throw PriorError("prior schema block '" + block + "' is not a football feature");
    if (drill == TaskId::shoot && block == "goals")
      throw PriorError("shoot prior must not observe goal features");
  }
}

PriorPolicy::PriorPolicy(TaskId drill_kind, std::vector<std::string> schema_blocks,
                         PolicyNet policy)
    : net(std::move(policy)), schema(std::move(schema_blocks)), drill(drill_kind) {
  validate_prior_schema(drill, schema);
}

int schema_dim(const ObsLayout& layout, const std::vector<std::string>& schema) {
  int dim = 0;
  for (const auto& name : schema) {
    const ObsBlock* b = layout.find(name);
    if (!b) throw PriorError("layout for task lacks schema block '" + name + "'");
    dim += b->size;
  }
  return dim;
}

VectorXd extract_schema(const ObservationVector& obs, const std::vector<std::string>& schema) {
  if (!obs.layout) throw PriorError("extract_schema: observation lacks a layout");
  VectorXd out(schema_dim(*obs.layout, schema));
  int k = 0;
  for (const auto& name : schema) {
    const ObsBlock* b = obs.layout->find(name);
    out.segment(k, b->size) = obs.values.segment(b->offset, b->size);
    k += b->size;
  }
  return out;
}

PriorPolicy make_prior(TaskId drill, int latent_dim, const RunConfig& cfg, Rng& rng) {
  auto schema = prior_schema(drill);
  const int in_dim = schema_dim(obs_layout(TaskId::football, cfg), schema);
  PolicyNet net = PolicyNet::make(in_dim, latent_dim, cfg.net.hidden, cfg.net.layers, rng,
                                  cfg.net.sigma_min, cfg.net.sigma_max);
  return PriorPolicy(drill, std::move(schema), std::move(net));
}

void MixturePrior::validate() const {
  if (priors.empty()) throw PriorError("mixture prior has no components");
  if (weights.size() != static_cast<Eigen::Index>(priors.size()))
    throw PriorError("mixture weight count does not match prior count");
  double sum = 0.0;
  for (int i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0) throw PriorError("mixture weights must be nonnegative");
    sum += weights[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw PriorError("mixture weights must sum to 1");
}

// ---------- distillation ----------

DistillDataset collect_distill_dataset(const PolicyNet& expert, TaskId drill,
                                       const NpmpParams& npmp, int episodes,
                                       const RunConfig& cfg, Rng& rng) {
  const auto schema = prior_schema(drill);
  const auto& layout = obs_layout(drill, cfg);
  const ObsBlock* proprio = layout.find("proprio");

  std::vector<VectorXd> means, sigmas, reduced;
  for (int ep = 0; ep < episodes; ++ep) {
    GameState s = reset(drill, rng, cfg);
    while (!s.terminal) {
      ObservationVector obs = observe(s, 0, cfg);
      GaussianParams head = expert.forward(obs.values);
      means.push_back(head.mean);
      sigmas.push_back(head.sigma);
      reduced.push_back(extract_schema(obs, schema));
      const VectorXd z = gaussian_sample(head, rng);
      const VectorXd x = obs.values.segment(proprio->offset, proprio->size);
      GaussianParams act = decode(npmp, x, z);
      const VectorXd a = gaussian_sample(act, rng);
      std::vector<ActionCommand> actions = {{a[0], a[1], a[2]}};
      step(s, actions, cfg);
    }
  }
  DistillDataset data;
  const int n = static_cast<int>(means.size());
  if (n == 0) throw PriorError("collect_distill_dataset: no steps recorded");
  data.expert_mean.resize(means[0].size(), n);
  data.expert_sigma.resize(means[0].size(), n);
  data.reduced_obs.resize(reduced[0].size(), n);
  for (int i = 0; i < n; ++i) {
    data.expert_mean.col(i) = means[i];
    data.expert_sigma.col(i) = sigmas[i];
    data.reduced_obs.col(i) = reduced[i];
  }
  return data;
}

namespace {

double distill_loss_eval(PriorPolicy& prior, const DistillDataset& data) {
  Graph g;
  auto [pm, ps] = prior.net.forward_graph(g, g.constant(data.reduced_obs));
  Var kl = gaussian_kl_graph(g.constant(data.expert_mean), g.constant(data.expert_sigma), pm, ps);
  return g.val(mean_all(kl))(0, 0);
}

}  // namespace

DistillReport distill_prior(PriorPolicy& prior, const DistillDataset& data, int train_steps,
                            double lr, Rng& rng) {
  (void)rng;
  DistillReport report;
  report.initial_loss = distill_loss_eval(prior, data);
  report.curve.push_back(report.initial_loss);

  Adam opt(lr);
  double current = report.initial_loss;
  auto snapshot = [&] {
    std::vector<Mat> copy;
    for (Mat* p : prior.net.params()) copy.push_back(*p);
    return copy;
  };
  auto restore = [&](const std::vector<Mat>& saved) {
    auto ps = prior.net.params();
    for (size_t i = 0; i < ps.size(); ++i) *ps[i] = saved[i];
  };

  for (int it = 0; it < train_steps; ++it) {
    const auto saved = snapshot();
    Graph g;
    auto [pm, psig] = prior.net.forward_graph(g, g.constant(data.reduced_obs));
    Var kl = gaussian_kl_graph(g.constant(data.expert_mean), g.constant(data.expert_sigma), pm,
                               psig);
    Var loss = mean_all(kl);
    g.backward(loss);
    opt.step(g.leaf_grads());
    const double next = distill_loss_eval(prior, data);
    if (next <= current) {
      current = next;
    } else {
      restore(saved);  // keep the frozen-set loss non-increasing
      opt.set_lr(opt.lr() * 0.5);
      if (opt.lr() < 1e-10) break;
    }
    if (it % 25 == 24) report.curve.push_back(current);
  }
  report.final_loss = current;
  report.curve.push_back(current);
  prior.distill_loss = current;
  return report;
}

PriorPolicy distill_prior_best_of(const PolicyNet& expert, TaskId drill, const NpmpParams& npmp,
                                  const RunConfig& cfg, Rng& rng) {
  DistillDataset data =
      collect_distill_dataset(expert, drill, npmp, cfg.priors.rollout_episodes, cfg, rng);
  PriorPolicy best;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int seed = 0; seed < cfg.priors.distill_seeds; ++seed) {
    Rng init_rng = rng.split(seed + 1);
    PriorPolicy cand = make_prior(drill, npmp.latent_dim, cfg, init_rng);
    DistillReport rep = distill_prior(cand, data, cfg.priors.train_steps, cfg.priors.lr, init_rng);
    if (rep.final_loss < best_loss) {
      best_loss = rep.final_loss;
      best = std::move(cand);
    }
  }
  return best;
}

// ---------- mixture KL ----------

double mixture_kl(const GaussianParams& policy_head, const std::vector<GaussianParams>& priors,
                  const VectorXd& weights, int n_samples, Rng& rng) {
  if (priors.size() != static_cast<size_t>(weights.size()))
    throw PriorError("mixture_kl: weight/component count mismatch");
  double acc = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const VectorXd z = gaussian_sample(policy_head, rng);
    const double lp = gaussian_log_prob(policy_head, z);
    double m = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    for (size_t i = 0; i < priors.size(); ++i) {
      if (weights[static_cast<int>(i)] <= 0.0) continue;
      const double t = std::log(weights[static_cast<int>(i)]) + gaussian_log_prob(priors[i], z);
      terms.push_back(t);
      m = std::max(m, t);
    }
    if (terms.empty()) throw PriorError("mixture_kl: all weights are zero");
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - m);
    acc += lp - (m + std::log(sum));
  }
  return acc / n_samples;
}

Var mixture_kl_graph(Graph& g, Var mean, Var sigma,
                     const std::vector<std::pair<Mat, Mat>>& prior_heads,
                     const VectorXd& weights, int n_samples, Rng& rng) {
  const int d = static_cast<int>(g.val(mean).rows());
  const int n = static_cast<int>(g.val(mean).cols());
  Var mean_rep = repeat_cols(mean, n_samples);
  Var sigma_rep = repeat_cols(sigma, n_samples);
  Mat eps = Mat::NullaryExpr(d, n * n_samples, [&] { return rng.normal(); });
  Var z = add(mean_rep, mul(sigma_rep, g.constant(std::move(eps))));
  Var lp_policy = gaussian_log_prob_graph(mean_rep, sigma_rep, z);

  std::vector<Var> components;
  for (size_t i = 0; i < prior_heads.size(); ++i) {
    const double w = weights[static_cast<int>(i)];
    if (w <= 0.0) continue;
    Mat pm(d, n * n_samples), psig(d, n * n_samples);
    for (int j = 0; j < n; ++j)
      for (int r = 0; r < n_samples; ++r) {
        pm.col(j * n_samples + r) = prior_heads[i].first.col(j);
        psig.col(j * n_samples + r) = prior_heads[i].second.col(j);
      }
    Var lp = gaussian_log_prob_graph(g.constant(std::move(pm)), g.constant(std::move(psig)), z);
    components.push_back(affine_scalar(lp, 1.0, std::log(w)));
  }
  if (components.empty()) throw PriorError("mixture_kl_graph: all weights are zero");
  Var mix_lp = logsumexp(components);
  return mean_all(sub(lp_policy, mix_lp));
}

double mixture_kl_bound(const std::vector<double>& component_kls, const VectorXd& weights) {
  if (component_kls.size() != static_cast<size_t>(weights.size()))
    throw PriorError("mixture_kl_bound: size mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < component_kls.size(); ++i) {
    const double w = weights[static_cast<int>(i)];
    if (w <= 0.0) continue;
    best = std::min(best, component_kls[i] - std::log(w));
  }
  return best;
}

double discrete_kl(const VectorXd& p, const VectorXd& q) {
  if (p.size() != q.size()) throw PriorError("discrete_kl: size mismatch");
  double kl = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
    kl += p[i] * std::log(p[i] / q[i]);
  }
  return kl;
}

double discrete_mixture_kl(const VectorXd& p, const std::vector<VectorXd>& qs,
                           const VectorXd& weights) {
  VectorXd mix = VectorXd::Zero(p.size());
  for (size_t i = 0; i < qs.size(); ++i) mix += weights[static_cast<int>(i)] * qs[i];
  return discrete_kl(p, mix);
}

double l_priors(const PolicyNet& policy, const MixturePrior& mix,
                const std::vector<ObservationVector>& obs_batch, int n_samples, Rng& rng) {
  mix.validate();
  double total = 0.0;
  for (const auto& obs : obs_batch) {
    GaussianParams head = policy.forward(obs.values);
    std::vector<GaussianParams> prior_heads;
    prior_heads.reserve(mix.priors.size());
    for (const auto& prior : mix.priors)
      prior_heads.push_back(prior.net.forward(extract_schema(obs, prior.schema)));
    total += mixture_kl(head, prior_heads, mix.weights, n_samples, rng);
  }
  return obs_batch.empty() ? 0.0 : total / static_cast<double>(obs_batch.size());
}

void save_prior(const std::string& prefix, const PriorPolicy& prior) {
  NamedTensors t;
  add_policy_tensors(t, "net", prior.net);
  Mat meta(2, 1);
  meta << static_cast<double>(static_cast<int>(prior.drill)), prior.distill_loss;
  t.add("meta", meta);
  save_checkpoint(prefix, std::string("prior_") + task_name(prior.drill), t);
}

PriorPolicy load_prior(const std::string& prefix) {
  std::string tag;
  NamedTensors t = load_checkpoint(prefix, &tag);
  if (tag.rfind("prior_", 0) != 0)
    throw CheckpointError("checkpoint at '" + prefix + "' is not a drill prior");
  const Mat& meta = t.get("meta");
  const TaskId drill = static_cast<TaskId>(static_cast<int>(meta(0, 0)));
  PolicyNet net;
  net.mlp.layers.resize(1);  // load_mlp_tensors rebuilds
  load_policy_tensors(t, "net", net);
  PriorPolicy prior(drill, prior_schema(drill), std::move(net));
  prior.distill_loss = meta(1, 0);
  return prior;
}

}  // namespace pitchlab
