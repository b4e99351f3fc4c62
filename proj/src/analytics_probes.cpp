#include <map>
#include <cmath>

#include "pitchlab/analytics/analytics.hpp"

namespace pitchlab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sgn(double v) { return v >= 0.0 ? 1.0 : -1.0; }
}  // namespace

// ---------- counterfactual policy divergence ----------

double cpd(const PolicyNet& policy, CpdObject object, int n_states, int n_resamples,
           const RunConfig& cfg, Rng& rng) {
  double total = 0.0;
  long long count = 0;
  for (int s = 0; s < n_states; ++s) {
    GameState state = reset(TaskId::football, rng, cfg);
    const ObservationVector base_obs = observe(state, 0, cfg);
    const GaussianParams base = policy.forward(base_obs.values);
    for (int r = 0; r < n_resamples; ++r) {
      GameState alt = state;
      const Vec2 pos{rng.uniform(-alt.pitch.half_length(), alt.pitch.half_length()),
                     rng.uniform(-alt.pitch.half_width(), alt.pitch.half_width())};
      switch (object) {
        case CpdObject::ball: alt.ball.position = pos; break;
        case CpdObject::teammate: alt.players[1].position = pos; break;
        case CpdObject::opponent1: alt.players[2].position = pos; break;
        case CpdObject::opponent2: alt.players[3].position = pos; break;
      }
      const GaussianParams moved = policy.forward(observe(alt, 0, cfg).values);
      total += gaussian_kl(moved, base);
      ++count;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

// ---------- probe task ----------

namespace {

struct ProbeSetup {
  GameState state;
  double receiver_y = 0.0;
};

ProbeSetup make_probe_state(const RunConfig& cfg, Rng& rng) {
  ProbeSetup setup;
  setup.state = reset(TaskId::football, rng, cfg);
  GameState& s = setup.state;
  const double L = s.pitch.length, W = s.pitch.width;

  auto place = [&](int p, double x, double y) {
    s.players[p].position = {x, y};
    s.players[p].velocity = {0, 0};
    s.players[p].speed = 0;
    s.players[p].heading = rng.uniform(-kPi, kPi);
  };
  // passer deep in its own half with the ball close by
  place(0, rng.uniform(-0.45, -0.25) * L, rng.uniform(-0.2, 0.2) * W);
  const double ball_angle = rng.uniform(-kPi, kPi);
  const double ball_dist = rng.uniform(0.45, 1.0);
  s.ball.position = s.players[0].position +
                    ball_dist * Vec2{std::cos(ball_angle), std::sin(ball_angle)};
  s.ball.velocity = {0, 0};
  s.ball.last_toucher = -1;
  // receiver near the halfway line, wing side uniform
  const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
  place(1, rng.uniform(-0.05, 0.05) * L, side * rng.uniform(0.25, 0.45) * W);
  setup.receiver_y = s.players[1].position.y();
  // defenders central
  place(2, rng.uniform(-0.05, 0.15) * L, rng.uniform(-0.15, 0.15) * W);
  place(3, rng.uniform(-0.05, 0.15) * L, rng.uniform(-0.15, 0.15) * W);
  return setup;
}

}  // namespace

ProbeResult run_probe(const ProbeActors& attackers,
                      const std::vector<std::string>& defender_kinds, int n_episodes,
                      const NpmpParams* npmp, const RunConfig& cfg, Rng& rng) {
  if (!attackers.policy && !attackers.attacker)
    throw AnalyticsError("run_probe: no attacker given");
  if (attackers.policy && !npmp)
    throw AnalyticsError("run_probe: a policy attacker needs the motor module");
  if (defender_kinds.empty()) throw AnalyticsError("run_probe: no defenders");

  const auto& layout = obs_layout(TaskId::football, cfg);
  const ObsBlock* proprio = layout.find("proprio");
  const int probe_steps =
      static_cast<int>(std::llround(cfg.analytics.probe_seconds / cfg.sim.dt));

  ProbeResult result;
  result.episodes = n_episodes;
  double score_sum = 0.0;
  std::vector<double> q_passer, ind_passer, q_receiver, ind_receiver;

  for (int ep = 0; ep < n_episodes; ++ep) {
    ProbeSetup setup = make_probe_state(cfg, rng);
    GameState& s = setup.state;
    auto defender = make_scripted(defender_kinds[ep % defender_kinds.size()]);
    defender->reset(s, rng);

    // pass-value correlation: score-channel Q under 1-second-reachable
    // ball-velocity interventions, against the ball-to-receiver indicator
    if (attackers.q && attackers.policy) {
      const double drag = cfg.sim.ball_drag;
      const double reach = drag > 1e-9 ? (1.0 - std::exp(-drag)) / drag : 1.0;
      for (int v = 0; v < 8; ++v) {
        const double sign_y = v % 2 == 0 ? 1.0 : -1.0;
        GameState alt = s;
        const Vec2 target{rng.uniform(s.ball.position.x(), s.pitch.half_length()),
                          sign_y * rng.uniform(0.0, s.pitch.half_width())};
        alt.ball.velocity = (target - s.ball.position) / reach;  // lands in ~1 s
        const double indicator =
            sgn(alt.ball.velocity.y()) == sgn(setup.receiver_y) ? 1.0 : 0.0;
        for (int role : {0, 1}) {
          ObservationVector obs = observe(alt, role, cfg);
          const GaussianParams head = attackers.policy->forward(obs.values);
          const VectorXd z = gaussian_sample(head, rng);
          VectorXd qin(obs.values.size() + z.size());
          qin << obs.values, z;
          const double q_score = attackers.q->values(qin)[0];  // scoring channel
          (role == 0 ? q_passer : q_receiver).push_back(q_score);
          (role == 0 ? ind_passer : ind_receiver).push_back(indicator);
        }
      }
    }

    // roll the episode until the first touch decides the score
    double episode_score = 0.5;
    for (int t = 0; t < probe_steps && !s.terminal; ++t) {
      std::vector<ActionCommand> actions(4);
      for (int p = 0; p < 4; ++p) {
        if (p < 2) {
          if (attackers.policy) {
            ObservationVector obs = observe(s, p, cfg);
            const GaussianParams head = attackers.policy->forward(obs.values);
            const VectorXd z = gaussian_sample(head, rng);
            const VectorXd x = obs.values.segment(proprio->offset, proprio->size);
            const VectorXd a = gaussian_sample(decode(*npmp, x, z), rng);
            actions[p] = ActionCommand{a[0], a[1], a[2]};
          } else {
            actions[p] = attackers.attacker->act(s, p, rng);
          }
        } else {
          actions[p] = defender->act(s, p, rng);
        }
      }
      StepResult res = step(s, actions, cfg);
      int first_toucher = -1;
      for (const auto& e : res.events)
        if (e.kind == EventKind::touch || e.kind == EventKind::kick) {
          first_toucher = e.actor;
          break;
        }
      if (first_toucher >= 0) {
        if (first_toucher == 0 && s.ball.velocity.x() > 0.0) {
          episode_score = 0.5 + 0.5 * sgn(s.ball.velocity.y()) * sgn(setup.receiver_y);
        } else {
          episode_score = 0.5;  // defender first, receiver first, or backward
        }
        break;
      }
    }
    score_sum += episode_score;
  }
  result.probe_score = score_sum / std::max(1, n_episodes);

  auto correlation = [](const std::vector<double>& a,
                        const std::vector<double>& b) -> std::optional<double> {
    if (a.size() < 2) return std::nullopt;
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      ma += a[i];
      mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      sab += (a[i] - ma) * (b[i] - mb);
      saa += (a[i] - ma) * (a[i] - ma);
      sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 1e-15 || sbb <= 1e-15) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
  };
  result.pvc_passer = correlation(q_passer, ind_passer);
  result.pvc_receiver = correlation(q_receiver, ind_receiver);
  return result;
}

// ---------- linear knowledge probes ----------

namespace {

double balanced_accuracy(const VectorXd& w, double b, const Mat& x,
                         const std::vector<int>& labels, const std::vector<int>& idx) {
  long long tp = 0, tn = 0, np = 0, nn = 0;
  for (int i : idx) {
    const double pred = w.dot(x.col(i)) + b;
    if (labels[i] == 1) {
      ++np;
      if (pred > 0) ++tp;
    } else {
      ++nn;
      if (pred <= 0) ++tn;
    }
  }
  const double tpr = np > 0 ? double(tp) / np : 0.0;
  const double tnr = nn > 0 ? double(tn) / nn : 0.0;
  if (np == 0) return tnr;
  if (nn == 0) return tpr;
  return 0.5 * (tpr + tnr);
}

}  // namespace

LinearProbeReport fit_linear_probe(const Mat& features, const std::vector<int>& labels,
                                   int folds, int resplits, Rng& rng) {
  const int n = static_cast<int>(features.cols());
  if (n != static_cast<int>(labels.size()))
    throw AnalyticsError("fit_linear_probe: feature/label count mismatch");
  int positives = 0;
  for (int y : labels) positives += y;
  if (positives == 0 || positives == n)
    throw AnalyticsError("fit_linear_probe: labels contain a single class");

  // standardize features once
  Mat x = features;
  for (int r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().mean();
    const double sd = std::sqrt(std::max(var, 1e-12));
    x.row(r) = (x.row(r).array() - mean) / sd;
  }
  const double pos_frac = static_cast<double>(positives) / n;

  std::vector<double> split_scores;
  for (int split = 0; split < resplits; ++split) {
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(static_cast<uint64_t>(i + 1))]);

    double fold_sum = 0.0;
    for (int fold = 0; fold < folds; ++fold) {
      std::vector<int> train, test;
      for (int i = 0; i < n; ++i)
        ((i % folds) == fold ? test : train).push_back(order[i]);

      VectorXd w = VectorXd::Zero(x.rows());
      double b = 0.0;
      const double lr = 1.0;
      for (int it = 0; it < 1500; ++it) {
        VectorXd gw = VectorXd::Zero(x.rows());
        double gb = 0.0;
        for (int i : train) {
          const double margin = w.dot(x.col(i)) + b;
          const double p = 1.0 / (1.0 + std::exp(-margin));
          // class-balanced logistic loss
          const double weight = labels[i] == 1 ? 0.5 / pos_frac : 0.5 / (1.0 - pos_frac);
          const double d = weight * (p - labels[i]);
          gw += d * x.col(i);
          gb += d;
        }
        const double inv = 1.0 / std::max<size_t>(1, train.size());
        w -= lr * (inv * gw + 1e-6 * w);
        b -= lr * inv * gb;
      }
      fold_sum += balanced_accuracy(w, b, x, labels, test);
    }
    split_scores.push_back(fold_sum / folds);
  }

  LinearProbeReport report;
  for (double s : split_scores) report.balanced_accuracy += s;
  report.balanced_accuracy /= split_scores.size();
  double var = 0.0;
  for (double s : split_scores) var += (s - report.balanced_accuracy) * (s - report.balanced_accuracy);
  report.accuracy_sd = split_scores.size() > 1
                           ? std::sqrt(var / (static_cast<double>(split_scores.size()) - 1.0))
                           : 0.0;
  return report;
}

// ---------- event-triggered KL ----------

EventKlCurves event_kl(const PolicyNet& policy, const std::vector<PriorPolicy>& priors,
                       const std::vector<TrajectoryLog>& logs, int window,
                       const RunConfig& cfg) {
  EventKlCurves curves;
  curves.window = window;
  const int span = 2 * window + 1;
  curves.mean_kl.assign(priors.size(), VectorXd::Zero(span));
  for (const auto& prior : priors) curves.names.push_back(task_name(prior.drill));
  std::vector<VectorXd> sums(priors.size(), VectorXd::Zero(span));
  VectorXd counts = VectorXd::Zero(span);

  for (const auto& log : logs) {
    // kick events and their actors
    std::vector<std::pair<int, int>> kicks;  // (step, actor)
    for (const auto& rec : log.steps)
      for (const auto& e : rec.events)
        if (e.kind == EventKind::kick && e.actor >= 0) kicks.push_back({rec.t, e.actor});
    if (kicks.empty()) continue;
    curves.events += static_cast<int>(kicks.size());

    // which (step, actor) observations the curves need
    std::map<int, std::vector<int>> wanted;  // step -> actors
    for (const auto& [kstep, actor] : kicks)
      for (int d = -window; d <= window; ++d) {
        const int t = kstep + d;
        if (t >= 0 && t < static_cast<int>(log.steps.size())) wanted[t].push_back(actor);
      }

    // deterministic replay, collecting per-prior KL at the visited states
    std::map<std::pair<int, int>, std::vector<double>> kl_at;  // (step, actor) -> per prior
    replay_log(log, cfg, [&](const GameState& state, int t) {
      auto it = wanted.find(t);
      if (it == wanted.end()) return;
      for (int actor : it->second) {
        auto key = std::make_pair(t, actor);
        if (kl_at.count(key)) continue;
        ObservationVector obs = observe(state, actor, cfg);
        const GaussianParams head = policy.forward(obs.values);
        std::vector<double> kls;
        kls.reserve(priors.size());
        for (const auto& prior : priors) {
          const GaussianParams ph = prior.net.forward(extract_schema(obs, prior.schema));
          kls.push_back(gaussian_kl(head, ph));
        }
        kl_at.emplace(key, std::move(kls));
      }
    });

    for (const auto& [kstep, actor] : kicks)
      for (int d = -window; d <= window; ++d) {
        const int t = kstep + d;
        auto it = kl_at.find({t, actor});
        if (it == kl_at.end()) continue;
        for (size_t i = 0; i < priors.size(); ++i) sums[i][d + window] += it->second[i];
        counts[d + window] += 1.0;
      }
  }

  if (curves.events == 0)
    throw AnalyticsError("event_kl: no kick events in the given logs");
  for (size_t i = 0; i < priors.size(); ++i)
    for (int d = 0; d < span; ++d)
      curves.mean_kl[i][d] = counts[d] > 0 ? sums[i][d] / counts[d] : 0.0;
  return curves;
}

}  // namespace pitchlab
