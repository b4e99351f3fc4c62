#include "pitchlab/pbt/population.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace pitchlab {

void HyperParams::validate() const {
  for (int i = 0; i < alpha.size(); ++i)
    if (!(alpha[i] >= 0.0) || !std::isfinite(alpha[i]))
      throw PbtError("hyper: alpha must be >= 0");
  for (int i = 0; i < gamma.size(); ++i)
    if (!(gamma[i] > 0.0 && gamma[i] < 1.0)) throw PbtError("hyper: gamma must be in (0,1)");
  double sum = 0.0;
  for (int i = 0; i < beta.size(); ++i) {
    if (!(beta[i] >= 0.0)) throw PbtError("hyper: beta must be >= 0");
    sum += beta[i];
  }
  if (beta.size() > 0 && std::abs(sum - 1.0) > 1e-9)
    throw PbtError("hyper: beta must sum to 1");
  if (!(lambda >= 0.0)) throw PbtError("hyper: lambda must be >= 0");
  if (!(policy_lr > 0.0) || !(q_lr > 0.0)) throw PbtError("hyper: learning rates must be > 0");
}

HyperParams sample_initial_hyper(TaskId task, const RunConfig& cfg, Rng& rng) {
  const int M = reward_channel_count(task);
  HyperParams h;
  h.alpha.resize(M);
  h.gamma.resize(M);
  const auto& names = reward_channel_names(task);
  for (int m = 0; m < M; ++m) {
    const bool sparse = names[m] == "scoring" || names[m] == "conceding";
    const double base = sparse ? cfg.pbt.alpha_sparse_init : cfg.pbt.alpha_dense_init;
    h.alpha[m] = base * std::exp(0.3 * rng.normal());
    const double g = sparse ? cfg.pbt.gamma_sparse_init : cfg.pbt.gamma_dense_init;
    // jitter in log(1-gamma) space, the same space mutation uses
    h.gamma[m] = 1.0 - (1.0 - g) * std::exp(0.2 * rng.normal());
    h.gamma[m] = std::clamp(h.gamma[m], 1e-6, 1.0 - 1e-6);
  }
  h.beta = VectorXd::Zero(4);
  for (int i = 0; i < 4; ++i) h.beta[i] = rng.uniform(0.5, 1.5);
  h.beta /= h.beta.sum();
  h.lambda = task == TaskId::football ? cfg.pbt.lambda_init * std::exp(0.3 * rng.normal()) : 0.0;
  h.policy_lr = cfg.mpo.policy_lr * std::exp(0.3 * rng.normal());
  h.q_lr = cfg.mpo.q_lr * std::exp(0.3 * rng.normal());
  h.validate();
  return h;
}

HyperParams crossover(const HyperParams& child, const HyperParams& parent, Rng& rng) {
  HyperParams out = child;
  auto pick = [&](double c, double p) { return rng.uniform() < 0.5 ? c : p; };
  for (int i = 0; i < out.alpha.size(); ++i) out.alpha[i] = pick(child.alpha[i], parent.alpha[i]);
  for (int i = 0; i < out.gamma.size(); ++i) out.gamma[i] = pick(child.gamma[i], parent.gamma[i]);
  for (int i = 0; i < out.beta.size(); ++i) out.beta[i] = pick(child.beta[i], parent.beta[i]);
  out.lambda = pick(child.lambda, parent.lambda);
  out.policy_lr = pick(child.policy_lr, parent.policy_lr);
  out.q_lr = pick(child.q_lr, parent.q_lr);
  if (out.beta.size() > 0 && out.beta.sum() > 0.0) out.beta /= out.beta.sum();
  return out;
}

HyperParams mutate(const HyperParams& h, const RunConfig& cfg, Rng& rng) {
  HyperParams out = h;
  const double f = cfg.pbt.mutate_factor;
  auto factor = [&] { return rng.uniform() < 0.5 ? f : 1.0 / f; };
  auto maybe = [&](double v) { return rng.uniform() < cfg.pbt.mutate_prob ? v * factor() : v; };

  for (int i = 0; i < out.alpha.size(); ++i) out.alpha[i] = maybe(out.alpha[i]);
  for (int i = 0; i < out.gamma.size(); ++i) {
    if (rng.uniform() < cfg.pbt.mutate_prob) {
      const double one_minus = std::clamp((1.0 - out.gamma[i]) * factor(), 1e-6, 1.0 - 1e-6);
      out.gamma[i] = 1.0 - one_minus;
    }
  }
  for (int i = 0; i < out.beta.size(); ++i) out.beta[i] = maybe(out.beta[i]);
  if (out.beta.size() > 0) {
    const double sum = out.beta.sum();
    if (sum <= 0.0)
      out.beta.setConstant(1.0 / static_cast<double>(out.beta.size()));
    else
      out.beta /= sum;
  }
  out.lambda = maybe(out.lambda);
  out.policy_lr = maybe(out.policy_lr);
  out.q_lr = maybe(out.q_lr);
  out.validate();
  return out;
}

// ---------- payoff matrix ----------

PayoffMatrix::PayoffMatrix(int n, double decay)
    : wins_(Mat::Zero(n, n)), losses_(Mat::Zero(n, n)), decay_(decay) {}

void PayoffMatrix::record_result(int i, int j, int outcome) {
  if (i < 0 || j < 0 || i >= size() || j >= size()) throw PbtError("record_result: bad agent id");
  if (i == j) return;  // self-play tells nothing about relative strength
  wins_ *= decay_;
  losses_ *= decay_;
  if (outcome > 0) {
    wins_(i, j) += 1.0;
    losses_(j, i) += 1.0;
  } else if (outcome < 0) {
    losses_(i, j) += 1.0;
    wins_(j, i) += 1.0;
  } else {
    // a draw counts toward both
    wins_(i, j) += 1.0;
    losses_(i, j) += 1.0;
    wins_(j, i) += 1.0;
    losses_(j, i) += 1.0;
  }
}

Mat PayoffMatrix::mean_matrix() const {
  const int n = size();
  Mat m = Mat::Constant(n, n, 0.5);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double total = wins_(i, j) + losses_(i, j);
      if (total > 0.0) m(i, j) = wins_(i, j) / total;
    }
  return m;
}

void PayoffMatrix::reset_agent(int i) {
  wins_.row(i).setZero();
  wins_.col(i).setZero();
  losses_.row(i).setZero();
  losses_.col(i).setZero();
}

// ---------- Nash averaging ----------

namespace {

double exploitability_of(const Mat& A, const VectorXd& p) { return (A * p).maxCoeff(); }

// Equalizing strategy on a candidate support: solve A_SS x = 0, sum x = 1.
// Returns an empty vector when the system has no nonnegative solution.
VectorXd polish_support(const Mat& A, const std::vector<int>& support) {
  const int k = static_cast<int>(support.size());
  Mat sys(k + 1, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) sys(r, c) = A(support[r], support[c]);
  sys.row(k).setOnes();
  VectorXd rhs = VectorXd::Zero(k + 1);
  rhs[k] = 1.0;
  VectorXd x = (sys.transpose() * sys).ldlt().solve(sys.transpose() * rhs);
  if (!x.allFinite()) return {};
  return x;
}

// Exact maximin strategy by primal simplex (Bland's rule) on the
// positivized game B = A + 1: solve max 1'v s.t. Bv <= 1, v >= 0 and read
// the row strategy from the duals of the slack basis.
VectorXd nash_lp(const Mat& A) {
  const int n = static_cast<int>(A.rows());
  const Mat B = A.array() + 1.0;  // entries in (0, 2), game value positive

  // tableau: n rows, columns [v(n) | slack(n) | rhs]
  Mat t(n, 2 * n + 1);
  t.leftCols(n) = B;
  t.middleCols(n, n) = Mat::Identity(n, n);
  t.col(2 * n) = VectorXd::Ones(n);
  VectorXd cost = VectorXd::Zero(2 * n);  // maximize sum of v
  cost.head(n).setOnes();
  std::vector<int> basis(n);
  for (int i = 0; i < n; ++i) basis[i] = n + i;

  VectorXd reduced = cost;  // row-0 costs for the all-slack basis
  for (int iter = 0; iter < 4096; ++iter) {
    // entering: Bland's rule, smallest index with positive reduced cost
    int enter = -1;
    for (int j = 0; j < 2 * n; ++j)
      if (reduced[j] > 1e-12) {
        enter = j;
        break;
      }
    if (enter < 0) break;  // optimal
    // leaving: min ratio, ties to the smallest basis index
    int leave = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < n; ++i) {
      if (t(i, enter) > 1e-12) {
        const double ratio = t(i, 2 * n) / t(i, enter);
        if (leave < 0 || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return {};  // unbounded: cannot happen for B > 0
    // pivot
    t.row(leave) /= t(leave, enter);
    for (int i = 0; i < n; ++i)
      if (i != leave && std::abs(t(i, enter)) > 1e-15) t.row(i) -= t(i, enter) * t.row(leave);
    reduced -= reduced[enter] * t.row(leave).head(2 * n).transpose();
    basis[leave] = enter;
  }

  // dual of constraint i = -reduced cost of slack i at the optimum
  VectorXd u(n);
  for (int i = 0; i < n; ++i) u[i] = -reduced[n + i];
  const double sum = u.sum();
  if (!(sum > 0.0) || !u.allFinite()) return {};
  VectorXd p = (u / sum).cwiseMax(0.0);
  p /= p.sum();
  return p;
}

// Equalize on the LP support for a final cleanup of rounding dust.
VectorXd exact_polish(const Mat& A, const VectorXd& seed) {
  const int n = static_cast<int>(A.rows());
  std::vector<int> support;
  for (int i = 0; i < n; ++i)
    if (seed[i] > 1e-9) support.push_back(i);
  if (support.empty()) return seed;
  VectorXd x = polish_support(A, support);
  if (x.size() == 0) return seed;
  VectorXd full = VectorXd::Zero(n);
  for (size_t i = 0; i < support.size(); ++i)
    full[support[i]] = std::max(0.0, x[static_cast<int>(i)]);
  const double sum = full.sum();
  if (sum <= 0.0) return seed;
  return full / sum;
}

}  // namespace

NashResult nash_average(const Mat& mean_matrix, double tol, int max_iters) {
  const int n = static_cast<int>(mean_matrix.rows());
  if (mean_matrix.cols() != n) throw PbtError("nash_average: matrix must be square");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (mean_matrix(i, j) < -1e-12 || mean_matrix(i, j) > 1.0 + 1e-12)
        throw PbtError("nash_average: entries must be win probabilities");
      const double sum = mean_matrix(i, j) + mean_matrix(j, i);
      if (std::abs(sum - 1.0) > 1e-9)
        throw PbtError("nash_average: matrix is not constant-sum");
    }

  NashResult res;
  if (n == 1) {
    res.p = VectorXd::Ones(1);
    res.fitness = mean_matrix * res.p;
    res.exploitability = 0.0;
    res.iterations = 0;
    return res;
  }

  const Mat A = mean_matrix.array() - 0.5;  // antisymmetric zero-sum game

  VectorXd regret = VectorXd::Zero(n);
  VectorXd strategy = VectorXd::Constant(n, 1.0 / n);
  VectorXd avg = VectorXd::Zero(n);
  double avg_weight = 0.0;
  VectorXd best = strategy;
  double best_expl = exploitability_of(A, best);
  auto consider = [&](const VectorXd& cand) {
    if (cand.size() != n) return;
    const double expl = exploitability_of(A, cand);
    if (expl < best_expl) {
      best_expl = expl;
      best = cand;
    }
  };

  int it = 0;
  for (; it < max_iters; ++it) {
    const VectorXd payoff = A * strategy;
    const double value = strategy.dot(payoff);
    regret = (regret + payoff.array().matrix() - VectorXd::Constant(n, value)).cwiseMax(0.0);

    const double rsum = regret.sum();
    strategy = rsum > 0.0 ? VectorXd(regret / rsum) : VectorXd::Constant(n, 1.0 / n);

    // linear averaging
    const double w = static_cast<double>(it + 1);
    avg = (avg * avg_weight + strategy * w) / (avg_weight + w);
    avg_weight += w;

    if (it % 128 == 127 || it + 1 == max_iters) {
      // exact LP polish first; regret matching alone closes in on the
      // support but cannot reliably reach 1e-6 inside the iteration budget
      const VectorXd lp = nash_lp(A);
      if (lp.size() == n) consider(exact_polish(A, lp));
      consider(lp);
      consider(avg);
      if (best_expl <= tol) break;
    }
  }

  res.p = best;
  res.fitness = mean_matrix * best;
  res.exploitability = best_expl;
  res.iterations = it + 1;
  return res;
}

// ---------- evolution ----------

std::optional<EvolutionEvent> evolution_step(std::vector<AgentRecord>& population,
                                             const RunConfig& cfg, Rng& rng) {
  if (population.size() < 2) throw PbtError("evolution_step: population must have >= 2 agents");
  for (const auto& agent : population)
    if (agent.steps_since_evolution < cfg.pbt.eligible_min_steps) return std::nullopt;

  // child: minimum fitness, ties toward the lowest id
  int child = 0;
  for (size_t i = 1; i < population.size(); ++i)
    if (population[i].fitness < population[child].fitness) child = static_cast<int>(i);

  const int parent = static_cast<int>(rng.uniform_int(population.size()));

  EvolutionEvent event;
  event.child = population[child].id;
  event.parent = population[parent].id;
  event.hyper_before = population[child].hyper;

  if (population[child].learner && population[parent].learner && parent != child)
    population[child].learner->copy_weights_from(*population[parent].learner);

  population[child].hyper =
      mutate(crossover(population[child].hyper, population[parent].hyper, rng), cfg, rng);
  if (population[child].learner)
    population[child].learner->set_lrs(population[child].hyper.policy_lr,
                                       population[child].hyper.q_lr);
  population[child].fitness = cfg.pbt.f_init;
  population[child].steps_since_evolution = 0.0;
  event.hyper_after = population[child].hyper;
  return event;
}

// ---------- Elo ----------

double elo_expected_score(double rating_a, double rating_b, double scale) {
  return 1.0 / (1.0 + std::pow(10.0, (rating_b - rating_a) / scale));
}

EloResult elo_fit(const std::vector<EloMatch>& matches, int n_entities,
                  const std::vector<int>& anchor_entities, const RunConfig& cfg) {
  if (matches.empty()) throw PbtError("elo_fit: no results");
  std::vector<bool> seen(n_entities, false);
  for (const auto& m : matches) {
    if (m.entity_a < 0 || m.entity_a >= n_entities || m.entity_b < 0 ||
        m.entity_b >= n_entities)
      throw PbtError("elo_fit: entity id out of range");
    seen[m.entity_a] = seen[m.entity_b] = true;
  }
  for (int i = 0; i < n_entities; ++i)
    if (!seen[i]) throw PbtError("elo_fit: entity " + std::to_string(i) + " has no results");

  // Bradley-Terry strengths gamma = 10^(r/scale); draws enter as half wins.
  Mat pair_count = Mat::Zero(n_entities, n_entities);
  VectorXd win_total = VectorXd::Zero(n_entities);
  VectorXd match_total = VectorXd::Zero(n_entities);
  for (const auto& m : matches) {
    pair_count(m.entity_a, m.entity_b) += 1.0;
    pair_count(m.entity_b, m.entity_a) += 1.0;
    win_total[m.entity_a] += m.score_a;
    win_total[m.entity_b] += 1.0 - m.score_a;
    match_total[m.entity_a] += 1.0;
    match_total[m.entity_b] += 1.0;
  }

  EloResult out;
  std::vector<bool> all_win(n_entities), all_loss(n_entities);
  for (int i = 0; i < n_entities; ++i) {
    all_win[i] = win_total[i] >= match_total[i] - 1e-12;
    all_loss[i] = win_total[i] <= 1e-12;
    if (all_win[i] || all_loss[i]) out.degenerate = true;
  }

  // minorization-maximization on the non-degenerate likelihood, with the
  // degenerate entities pinned so the rest stays identified
  VectorXd gamma = VectorXd::Ones(n_entities);
  const double cap_gamma = std::pow(10.0, cfg.eval.elo_cap / cfg.eval.elo_scale);
  for (int it = 0; it < 2000; ++it) {
    VectorXd next = gamma;
    double shift = 0.0;
    for (int i = 0; i < n_entities; ++i) {
      double denom = 0.0;
      for (int j = 0; j < n_entities; ++j)
        if (pair_count(i, j) > 0.0) denom += pair_count(i, j) / (gamma[i] + gamma[j]);
      if (denom <= 0.0) continue;
      const double w = std::clamp(win_total[i], 1e-9, match_total[i] - 1e-9);
      next[i] = std::clamp(w / denom, 1.0 / cap_gamma, cap_gamma);
      shift = std::max(shift, std::abs(std::log(next[i]) - std::log(gamma[i])));
    }
    // renormalize to the geometric mean for numeric stability
    const double log_gm = next.array().log().mean();
    gamma = (next.array().log() - log_gm).exp().matrix();
    if (shift < 1e-12) break;
  }

  VectorXd r = (cfg.eval.elo_scale / std::log(10.0)) * gamma.array().log().matrix();

  // anchor: the evaluator pool mean sits at the configured rating
  double anchor_mean = 0.0;
  if (!anchor_entities.empty()) {
    for (int id : anchor_entities) anchor_mean += r[id];
    anchor_mean /= static_cast<double>(anchor_entities.size());
  }
  r.array() += cfg.eval.elo_anchor - anchor_mean;
  for (int i = 0; i < n_entities; ++i) {
    if (all_win[i]) r[i] = cfg.eval.elo_anchor + cfg.eval.elo_cap;
    if (all_loss[i]) r[i] = cfg.eval.elo_anchor - cfg.eval.elo_cap;
    r[i] = std::clamp(r[i], cfg.eval.elo_anchor - cfg.eval.elo_cap,
                      cfg.eval.elo_anchor + cfg.eval.elo_cap);
  }
  out.ratings = r;
  return out;
}

}  // namespace pitchlab
