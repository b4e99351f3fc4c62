#include <doctest.h>

#include <cmath>

#include "pitchlab/skills/priors.hpp"

using namespace pitchlab;

namespace {

RunConfig small_cfg() {
  RunConfig cfg;
  cfg.net.hidden = 32;
  cfg.npmp.hidden = 32;
  cfg.npmp.latent_dim = 4;
  cfg.priors.rollout_episodes = 2;
  cfg.priors.train_steps = 400;
  return cfg;
}

VectorXd simplex4(Rng& rng) {
  VectorXd w(4);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    w[i] = rng.uniform(0.05, 1.0);
    sum += w[i];
  }
  return w / sum;
}

}  // namespace

TEST_CASE("prior schemas follow the drill intersection rule") {
  CHECK(prior_schema(TaskId::follow) == std::vector<std::string>{"proprio"});
  CHECK(prior_schema(TaskId::dribble) == std::vector<std::string>({"proprio", "ball"}));
  CHECK(prior_schema(TaskId::shoot) == std::vector<std::string>({"proprio", "ball"}));
  // a shoot prior that peeks at the goal is a construction error
  RunConfig cfg = small_cfg();
  Rng rng(1);
  PolicyNet net = PolicyNet::make(10, 4, 16, 1, rng, 1e-3, 2.0);
  CHECK_THROWS_AS(PriorPolicy(TaskId::shoot, {"proprio", "ball", "goals"}, net), PriorError);
  CHECK_NOTHROW(PriorPolicy(TaskId::dribble, {"proprio", "ball"}, net));
}

TEST_CASE("schema extraction pulls the right blocks") {
  RunConfig cfg = small_cfg();
  Rng rng(3);
  GameState s = reset(TaskId::football, rng, cfg);
  ObservationVector obs = observe(s, 0, cfg);
  VectorXd reduced = extract_schema(obs, {"proprio", "ball"});
  CHECK(reduced.size() == 10);
  const ObsBlock* ball = obs.layout->find("ball");
  for (int k = 0; k < 4; ++k) CHECK(reduced[6 + k] == obs.values[ball->offset + k]);
}

TEST_CASE("discrete mixture KL matches hand computation and the bound") {
  // p = (.5,.5); mixture of (1,0) and (0,1) with beta=(.5,.5) equals p
  VectorXd p(2);
  p << 0.5, 0.5;
  std::vector<VectorXd> qs(2, VectorXd(2));
  qs[0] << 1.0, 0.0;
  qs[1] << 0.0, 1.0;
  VectorXd w(2);
  w << 0.5, 0.5;
  CHECK(discrete_mixture_kl(p, qs, w) == doctest::Approx(0.0).epsilon(1e-15));

  // bound: KL(p||mix) <= min_i (KL(p||q_i) - log beta_i) on random cases
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const int support = 2 + static_cast<int>(rng.uniform_int(7));
    auto random_dist = [&](bool allow_zero) {
      VectorXd v(support);
      double sum = 0.0;
      for (int i = 0; i < support; ++i) {
        v[i] = allow_zero && rng.uniform() < 0.2 ? 1e-12 : rng.uniform(0.01, 1.0);
        sum += v[i];
      }
      return VectorXd(v / sum);
    };
    VectorXd pp = random_dist(false);
    const int k = 2 + static_cast<int>(rng.uniform_int(3));
    std::vector<VectorXd> comps;
    std::vector<double> kls;
    VectorXd weights(k);
    double wsum = 0.0;
    for (int i = 0; i < k; ++i) {
      comps.push_back(random_dist(false));
      weights[i] = rng.uniform(0.05, 1.0);
      wsum += weights[i];
    }
    weights /= wsum;
    for (int i = 0; i < k; ++i) kls.push_back(discrete_kl(pp, comps[i]));
    const double kl_mix = discrete_mixture_kl(pp, comps, weights);
    CHECK(kl_mix <= mixture_kl_bound(kls, weights) + 1e-12);
    CHECK(kl_mix >= 0.0);
  }
}

TEST_CASE("gaussian mixture KL: identity, bound within monte-carlo error") {
  Rng rng(7);
  const int d = 4;
  auto random_head = [&](double spread) {
    GaussianParams g;
    g.mean = VectorXd::NullaryExpr(d, [&] { return spread * rng.normal(); });
    g.sigma = VectorXd::NullaryExpr(d, [&] { return 0.3 + std::abs(0.3 * rng.normal()); });
    return g;
  };

  // policy equal to component 1 with weight 1 on it: KL is exactly 0
  {
    GaussianParams head = random_head(1.0);
    std::vector<GaussianParams> priors = {head, random_head(1.0), random_head(1.0),
                                          random_head(1.0)};
    VectorXd w(4);
    w << 1.0, 0.0, 0.0, 0.0;
    Rng mc(11);
    CHECK(mixture_kl(head, priors, w, 64, mc) == doctest::Approx(0.0).epsilon(1e-12));
  }

  // bound within 3 sigma over repeated estimates
  for (int trial = 0; trial < 10; ++trial) {
    GaussianParams head = random_head(0.8);
    std::vector<GaussianParams> priors;
    std::vector<double> kls;
    for (int i = 0; i < 4; ++i) {
      priors.push_back(random_head(0.8));
      kls.push_back(gaussian_kl(head, priors.back()));
    }
    VectorXd w = simplex4(rng);
    const double bound = mixture_kl_bound(kls, w);
    // many estimates to measure the Monte-Carlo spread
    Rng mc(trial + 100);
    const int reps = 40, n = 64;
    double mean = 0.0, m2 = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double est = mixture_kl(head, priors, w, n, mc);
      const double delta = est - mean;
      mean += delta / (r + 1);
      m2 += delta * (est - mean);
    }
    const double se = std::sqrt(m2 / (reps - 1) / reps);
    CHECK(mean <= bound + 3.0 * std::max(se, 1e-6));
    CHECK(mean >= -3.0 * std::max(se, 1e-6));
  }
}

TEST_CASE("mixture weights are validated") {
  RunConfig cfg = small_cfg();
  Rng rng(13);
  MixturePrior mix;
  for (TaskId t : {TaskId::follow, TaskId::dribble, TaskId::shoot, TaskId::kick_to_target})
    mix.priors.push_back(make_prior(t, 4, cfg, rng));
  mix.weights = VectorXd::Constant(4, 0.25);
  CHECK_NOTHROW(mix.validate());
  mix.weights[0] = -0.1;
  CHECK_THROWS_AS(mix.validate(), PriorError);
  mix.weights = VectorXd::Constant(4, 0.3);
  CHECK_THROWS_AS(mix.validate(), PriorError);
}

TEST_CASE("distillation: full schema can copy the expert") {
  RunConfig cfg = small_cfg();
  Rng rng(17);
  NpmpParams npmp = make_npmp(cfg, rng);

  // expert over the dribble observation; prior sees {proprio, ball} which is
  // a strict subset, so craft an expert that only reads those blocks: use a
  // prior-shaped expert lifted to the full obs via zero weights elsewhere.
  const auto& layout = obs_layout(TaskId::dribble, cfg);
  PolicyNet expert = PolicyNet::make(layout.dim, npmp.latent_dim, 32, 2, rng, 1e-3, 2.0);
  {
    // zero the columns outside proprio+ball so the reduced prior can match it
    const ObsBlock* target = layout.find("target");
    expert.mlp.layers[0].W.middleCols(target->offset, target->size).setZero();
  }

  Rng roll(19);
  DistillDataset data = collect_distill_dataset(expert, TaskId::dribble, npmp, 2, cfg, roll);
  CHECK(data.expert_mean.cols() > 100);

  PriorPolicy prior = make_prior(TaskId::dribble, npmp.latent_dim, cfg, rng);
  Rng train(23);
  DistillReport rep = distill_prior(prior, data, 1200, 1e-3, train);
  CHECK(rep.final_loss < rep.initial_loss);
  CHECK(rep.final_loss < 1e-3);
  // frozen-set loss curve is non-increasing
  for (size_t i = 1; i < rep.curve.size(); ++i) CHECK(rep.curve[i] <= rep.curve[i - 1] + 1e-12);
}

TEST_CASE("reduced schema fits the behaviour mixture, not one branch") {
  // expert behaviour depends on a feature the prior cannot see; the prior
  // must land between the two branch means with inflated sigma
  RunConfig cfg = small_cfg();
  Rng rng(29);

  DistillDataset data;
  const int n = 400;
  data.expert_mean.resize(1, n);
  data.expert_sigma = Mat::Constant(1, n, 0.1);
  data.reduced_obs = Mat::Zero(2, n);  // constant reduced view
  for (int i = 0; i < n; ++i) data.expert_mean(0, i) = (i % 2 == 0) ? 1.0 : -1.0;

  PolicyNet net = PolicyNet::make(2, 1, 16, 1, rng, 1e-3, 2.0);
  PriorPolicy prior(TaskId::dribble, {"proprio", "ball"}, net);
  Rng train(31);
  DistillReport rep = distill_prior(prior, data, 800, 3e-3, train);

  GaussianParams head = prior.net.forward(VectorXd::Zero(2));
  CHECK(std::abs(head.mean[0]) < 0.2);  // between the branches
  CHECK(head.sigma[0] > 0.5);           // covers both modes
  CHECK(rep.final_loss > 1.0);          // strictly above the copyable case
}

TEST_CASE("distill_prior_best_of keeps the lowest loss seed") {
  RunConfig cfg = small_cfg();
  cfg.priors.distill_seeds = 3;
  cfg.priors.train_steps = 60;
  Rng rng(37);
  NpmpParams npmp = make_npmp(cfg, rng);
  const auto& layout = obs_layout(TaskId::follow, cfg);
  PolicyNet expert = PolicyNet::make(layout.dim, npmp.latent_dim, 16, 1, rng, 1e-3, 2.0);
  Rng roll(41);
  PriorPolicy best = distill_prior_best_of(expert, TaskId::follow, npmp, cfg, roll);
  CHECK(best.schema == prior_schema(TaskId::follow));
  CHECK(best.distill_loss >= 0.0);
}

TEST_CASE("l_priors is zero for a policy equal to a pure component") {
  RunConfig cfg = small_cfg();
  Rng rng(43);
  MixturePrior mix;
  for (TaskId t : {TaskId::follow, TaskId::dribble, TaskId::shoot, TaskId::kick_to_target})
    mix.priors.push_back(make_prior(t, 4, cfg, rng));
  mix.weights = VectorXd::Zero(4);
  mix.weights[1] = 1.0;  // dribble only

  // a football policy that reproduces the dribble prior through its schema
  const auto& layout = obs_layout(TaskId::football, cfg);
  PolicyNet policy = PolicyNet::make(layout.dim, 4, cfg.net.hidden, cfg.net.layers, rng, 1e-3,
                                     2.0);
  // build the policy to exactly equal prior(extract(obs)): zero all input
  // columns except the schema blocks, then copy the prior weights
  policy.mlp = mix.priors[1].net.mlp;
  {
    // lift the prior's input matrix into football-obs space
    Mat lifted = Mat::Zero(policy.mlp.layers[0].W.rows(), layout.dim);
    int k = 0;
    for (const auto& name : mix.priors[1].schema) {
      const ObsBlock* b = layout.find(name);
      lifted.middleCols(b->offset, b->size) =
          mix.priors[1].net.mlp.layers[0].W.middleCols(k, b->size);
      k += b->size;
    }
    policy.mlp.layers[0].W = lifted;
  }

  Rng sim(47);
  GameState s = reset(TaskId::football, sim, cfg);
  std::vector<ObservationVector> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(observe(s, i, cfg));
  Rng mc(53);
  CHECK(l_priors(policy, mix, batch, 16, mc) == doctest::Approx(0.0).epsilon(1e-10));

  // permuting priors together with weights leaves the loss unchanged
  MixturePrior perm;
  perm.priors = {mix.priors[2], mix.priors[1], mix.priors[0], mix.priors[3]};
  perm.weights = VectorXd::Zero(4);
  perm.weights[1] = 1.0;
  Rng mc2(53);
  CHECK(l_priors(policy, perm, batch, 16, mc2) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("prior checkpoints round-trip") {
  RunConfig cfg = small_cfg();
  Rng rng(59);
  PriorPolicy prior = make_prior(TaskId::shoot, 4, cfg, rng);
  prior.distill_loss = 0.123;
  save_prior("/tmp/pl_prior_test", prior);
  PriorPolicy back = load_prior("/tmp/pl_prior_test");
  CHECK(back.drill == TaskId::shoot);
  CHECK(back.schema == prior.schema);
  CHECK(back.distill_loss == doctest::Approx(0.123));
  VectorXd in = VectorXd::Zero(10);
  CHECK((back.net.forward(in).mean - prior.net.forward(in).mean).norm() == 0.0);
}
