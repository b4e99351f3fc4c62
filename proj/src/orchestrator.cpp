#include "pitchlab/run/orchestrator.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <atomic>
#include <thread>

namespace pitchlab {

namespace fs = std::filesystem;

// ---------- snapshots / inference ----------

void SnapshotStore::publish(const std::string& id, const PolicyNet& net) {
  auto snap = std::make_shared<PolicySnapshot>();
  snap->net = net;  // deep copy; immutable afterwards
  std::lock_guard<std::mutex> lock(mu_);
  snap->version = next_version_++;
  map_[id] = std::move(snap);
}

std::shared_ptr<const PolicySnapshot> SnapshotStore::get(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = map_.find(id);
  if (it == map_.end()) throw OrchestratorError("unknown model id '" + id + "'");
  return it->second;
}

bool SnapshotStore::has(const std::string& id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return map_.count(id) > 0;
}

std::vector<InferResult> InferenceService::infer(const std::vector<InferRequest>& requests) const {
  std::vector<InferResult> out(requests.size());
  // group indices by model so each group runs against one snapshot
  std::unordered_map<std::string, std::vector<size_t>> groups;
  for (size_t i = 0; i < requests.size(); ++i) groups[requests[i].model].push_back(i);
  for (auto& [model, idx] : groups) {
    const auto snap = store_.get(model);
    for (size_t i : idx) {
      out[i].head = snap->net.forward(requests[i].obs);
      out[i].version = snap->version;
    }
  }
  return out;
}

// ---------- replay ----------

ReplayBuffer::ReplayBuffer(int capacity_steps, int chunk_len)
    : capacity_chunks_(std::max<size_t>(1, capacity_steps / std::max(1, chunk_len))) {}

void ReplayBuffer::add(TrajectoryChunk chunk) {
  std::lock_guard<std::mutex> lock(mu_);
  ring_.push_back(std::move(chunk));
  while (ring_.size() > capacity_chunks_) ring_.pop_front();
}

size_t ReplayBuffer::chunks() const {
  std::lock_guard<std::mutex> lock(mu_);
  return ring_.size();
}

bool ReplayBuffer::ready(int min_chunks) const {
  return chunks() >= static_cast<size_t>(min_chunks);
}

std::vector<TrajectoryChunk> ReplayBuffer::sample(int n, Rng& rng) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (ring_.empty()) throw OrchestratorError("replay sample from an empty buffer");
  std::vector<TrajectoryChunk> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(ring_[rng.uniform_int(ring_.size())]);
  return out;
}

MatchAssignment sample_match(int population_size, Rng& rng) {
  if (population_size < 1) throw OrchestratorError("sample_match: empty population");
  MatchAssignment m;
  m.agent_i = static_cast<int>(rng.uniform_int(population_size));
  m.agent_j = static_cast<int>(rng.uniform_int(population_size));
  m.seed = rng.next_u64();
  return m;
}

TrajectoryLog play_scripted_episode(const std::string& home_kind, const std::string& away_kind,
                                    int max_steps, uint64_t seed, const RunConfig& cfg) {
  Rng reset_rng(seed);
  GameState state = reset(TaskId::football, reset_rng, cfg);
  Rng act_rng(seed ^ 0x7a771e5cull);
  auto home = make_scripted(home_kind);
  auto away = make_scripted(away_kind);
  home->reset(state, act_rng);
  away->reset(state, act_rng);
  TrajectoryLog log;
  log.header = make_log_header(state, seed, config_hash(cfg));
  const int ppt = cfg.sim.players_per_team;
  const int steps = max_steps > 0 ? std::min(max_steps, state.horizon) : state.horizon;
  for (int t = 0; t < steps && !state.terminal; ++t) {
    std::vector<ActionCommand> actions(state.players.size());
    for (size_t p = 0; p < state.players.size(); ++p)
      actions[p] = (static_cast<int>(p) < ppt ? home : away)->act(state, static_cast<int>(p),
                                                                  act_rng);
    StepResult res = step(state, actions, cfg);
    log.append(state, actions, res);
  }
  return log;
}

TrajectoryLog play_policy_episode(const PolicyNet& policy, const NpmpParams& npmp,
                                  const std::string& away_kind, int max_steps, uint64_t seed,
                                  const RunConfig& cfg) {
  Rng reset_rng(seed);
  GameState state = reset(TaskId::football, reset_rng, cfg);
  Rng act_rng(seed ^ 0x51ed2701ull);
  auto away = make_scripted(away_kind);
  away->reset(state, act_rng);
  const auto& layout = obs_layout(TaskId::football, cfg);
  const ObsBlock* proprio = layout.find("proprio");
  TrajectoryLog log;
  log.header = make_log_header(state, seed, config_hash(cfg));
  const int ppt = cfg.sim.players_per_team;
  const int steps = max_steps > 0 ? std::min(max_steps, state.horizon) : state.horizon;
  for (int t = 0; t < steps && !state.terminal; ++t) {
    std::vector<ActionCommand> actions(state.players.size());
    for (size_t p = 0; p < state.players.size(); ++p) {
      if (static_cast<int>(p) < ppt) {
        ObservationVector obs = observe(state, static_cast<int>(p), cfg);
        const GaussianParams head = policy.forward(obs.values);
        const VectorXd z = gaussian_sample(head, act_rng);
        const VectorXd x = obs.values.segment(proprio->offset, proprio->size);
        const VectorXd a = gaussian_sample(decode(npmp, x, z), act_rng);
        actions[p] = ActionCommand{a[0], a[1], a[2]};
      } else {
        actions[p] = away->act(state, static_cast<int>(p), act_rng);
      }
    }
    StepResult res = step(state, actions, cfg);
    log.append(state, actions, res);
  }
  return log;
}

// ---------- per-player experience stream ----------

namespace {

struct PlayerStream {
  int agent = 0;
  std::vector<VectorXd> obs;  // one more entry than steps
  std::vector<VectorXd> z;
  std::vector<double> logp;
  std::vector<VectorXd> rewards;
  std::vector<double> terminal;

  void start(const VectorXd& first_obs) {
    obs.assign(1, first_obs);
    z.clear();
    logp.clear();
    rewards.clear();
    terminal.clear();
  }

  // returns a completed chunk when chunk_len steps have accumulated
  std::optional<TrajectoryChunk> push(const VectorXd& next_obs, VectorXd zt, double lp,
                                      VectorXd reward, bool term, int chunk_len) {
    obs.push_back(next_obs);
    z.push_back(std::move(zt));
    logp.push_back(lp);
    rewards.push_back(std::move(reward));
    terminal.push_back(term ? 1.0 : 0.0);
    if (static_cast<int>(z.size()) < chunk_len) return std::nullopt;

    TrajectoryChunk chunk;
    const int L = chunk_len;
    chunk.obs.resize(obs[0].size(), L + 1);
    for (int t = 0; t <= L; ++t) chunk.obs.col(t) = obs[t];
    chunk.z.resize(z[0].size(), L);
    chunk.rewards.resize(rewards[0].size(), L);
    chunk.behavior_logp.resize(L);
    chunk.terminal.resize(L);
    for (int t = 0; t < L; ++t) {
      chunk.z.col(t) = z[t];
      chunk.rewards.col(t) = rewards[t];
      chunk.behavior_logp[t] = logp[t];
      chunk.terminal[t] = terminal[t];
    }
    // the bootstrap obs opens the next chunk
    start(obs.back());
    return chunk;
  }
};

std::string model_id(int agent) { return "agent" + std::to_string(agent); }

}  // namespace

struct Orchestrator::Lane {
  GameState state;
  MatchAssignment match;
  std::vector<PlayerStream> streams;  // per player
  Rng rng;
  uint64_t id = 0;
};

// ---------- orchestrator ----------

Orchestrator::Orchestrator(const RunConfig& cfg, TaskId task, NpmpParams npmp,
                           std::optional<MixturePrior> mix, uint64_t seed)
    : cfg_(cfg),
      task_(task),
      npmp_(std::move(npmp)),
      mix_(std::move(mix)),
      payoff_(cfg.pbt.population, cfg.pbt.decay),
      inference_(snapshots_),
      control_rng_(seed) {
  layout_ = &obs_layout(task_, cfg_);
  const ObsBlock* proprio = layout_->find("proprio");
  proprio_offset_ = proprio->offset;
  proprio_size_ = proprio->size;

  const int channels = reward_channel_count(task_);
  for (int i = 0; i < cfg_.pbt.population; ++i) {
    AgentRecord rec;
    rec.id = i;
    Rng init = control_rng_.split(1000 + i);
    rec.hyper = sample_initial_hyper(task_, cfg_, init);
    rec.fitness = cfg_.pbt.f_init;
    rec.learner = std::make_shared<MpoLearner>(layout_->dim, npmp_.latent_dim, channels, cfg_,
                                               init);
    rec.learner->set_lrs(rec.hyper.policy_lr, rec.hyper.q_lr);
    population_.push_back(std::move(rec));
    replay_.push_back(std::make_shared<ReplayBuffer>(cfg_.run.replay_capacity_steps,
                                                     cfg_.mpo.chunk_len));
    steps_since_update_.push_back(0.0);
    snapshots_.publish(model_id(i), population_.back().learner->policy);
  }

  fs::create_directories(cfg_.run.out_dir);
  metrics_path_ = cfg_.run.out_dir + "/metrics.csv";
  if (!fs::exists(metrics_path_)) {
    std::ofstream out(metrics_path_);
    out << "wall_time_s,env_steps,episodes";
    for (int i = 0; i < cfg_.pbt.population; ++i) out << ",fitness_" << i;
    out << ",elo_top\n";
  }

  lanes_.resize(cfg_.run.concurrent_matches);
  for (auto& lane : lanes_) reset_lane(lane);
}

Orchestrator::~Orchestrator() = default;

void Orchestrator::reset_lane(Lane& lane) {
  lane.match = task_ == TaskId::football
                   ? sample_match(cfg_.pbt.population, control_rng_)
                   : MatchAssignment{static_cast<int>(episode_counter_ %
                                                      cfg_.pbt.population),
                                     static_cast<int>(episode_counter_ % cfg_.pbt.population),
                                     control_rng_.next_u64()};
  ++episode_counter_;
  lane.rng = Rng(lane.match.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng reset_rng(lane.match.seed);
  lane.state = reset(task_, reset_rng, cfg_);
  lane.streams.assign(lane.state.players.size(), PlayerStream{});
  const int ppt = cfg_.sim.players_per_team;
  for (size_t p = 0; p < lane.state.players.size(); ++p) {
    lane.streams[p].agent = task_ == TaskId::football
                                ? (static_cast<int>(p) < ppt ? lane.match.agent_i
                                                             : lane.match.agent_j)
                                : lane.match.agent_i;
    lane.streams[p].start(observe(lane.state, static_cast<int>(p), cfg_).values);
  }
}

void Orchestrator::finish_episode(Lane& lane, RoundMetrics& metrics) {
  ++metrics.episodes;
  if (task_ == TaskId::football && lane.match.agent_i != lane.match.agent_j) {
    int outcome = 0;
    if (lane.state.score_home > lane.state.score_away) outcome = 1;
    if (lane.state.score_home < lane.state.score_away) outcome = -1;
    payoff_.record_result(lane.match.agent_i, lane.match.agent_j, outcome);
    payoff_dirty_ = true;
  } else if (task_ != TaskId::football) {
    // drill fitness: smoothed episode return of the environment channels
    double ep_return = 0.0;
    const auto& channels = fitness_channels(task_);
    for (const auto& r : lane.streams[0].rewards)
      for (int ch : channels) ep_return += r[ch];
    auto& agent = population_[lane.match.agent_i];
    const double mapped = 0.5 * (1.0 + ep_return / (1.0 + std::abs(ep_return)));
    agent.fitness = 0.9 * agent.fitness + 0.1 * mapped;
  }
  reset_lane(lane);
}

void Orchestrator::sweep_lanes(std::vector<Lane>& lanes, RoundMetrics& metrics) {
  // 1) batched inference over every player of every lane
  std::vector<InferRequest> requests;
  requests.reserve(lanes.size() * 4);
  for (auto& lane : lanes)
    for (size_t p = 0; p < lane.state.players.size(); ++p)
      requests.push_back({model_id(lane.streams[p].agent), lane.streams[p].obs.back()});
  const std::vector<InferResult> heads = inference_.infer(requests);

  // 2) per lane: sample latents, decode actions, step physics, route chunks
  auto advance = [&](size_t lane_idx, size_t req_base) {
    Lane& lane = lanes[lane_idx];
    const size_t n_players = lane.state.players.size();
    std::vector<ActionCommand> actions(n_players);
    std::vector<VectorXd> zs(n_players);
    std::vector<double> lps(n_players);
    for (size_t p = 0; p < n_players; ++p) {
      const GaussianParams& head = heads[req_base + p].head;
      VectorXd z = gaussian_sample(head, lane.rng);
      lps[p] = gaussian_log_prob(head, z);
      const VectorXd x =
          lane.streams[p].obs.back().segment(proprio_offset_, proprio_size_);
      GaussianParams adist = decode(npmp_, x, z);
      const VectorXd a = gaussian_sample(adist, lane.rng);
      actions[p] = ActionCommand{a[0], a[1], a[2]};
      zs[p] = std::move(z);
    }
    StepResult res = step(lane.state, actions, cfg_);
    for (size_t p = 0; p < n_players; ++p) {
      VectorXd reward(res.rewards[p].size());
      for (size_t c = 0; c < res.rewards[p].size(); ++c) reward[c] = res.rewards[p][c];
      auto chunk = lane.streams[p].push(
          observe(lane.state, static_cast<int>(p), cfg_).values, std::move(zs[p]), lps[p],
          std::move(reward), lane.state.terminal, cfg_.mpo.chunk_len);
      if (chunk) replay_[lane.streams[p].agent]->add(std::move(*chunk));
    }
  };

  if (cfg_.run.threads <= 1) {
    size_t base = 0;
    for (size_t l = 0; l < lanes.size(); ++l) {
      const size_t players = lanes[l].state.players.size();
      advance(l, base);
      base += players;
    }
  } else {
    std::vector<size_t> bases(lanes.size());
    size_t base = 0;
    for (size_t l = 0; l < lanes.size(); ++l) {
      bases[l] = base;
      base += lanes[l].state.players.size();
    }
    std::vector<std::thread> workers;
    std::atomic<size_t> next{0};
    const int n_threads = std::min<int>(cfg_.run.threads, static_cast<int>(lanes.size()));
    for (int t = 0; t < n_threads; ++t)
      workers.emplace_back([&] {
        for (size_t l = next.fetch_add(1); l < lanes.size(); l = next.fetch_add(1))
          advance(l, bases[l]);
      });
    for (auto& w : workers) w.join();
  }

  // 3) bookkeeping on the control thread, in lane order
  for (auto& lane : lanes) {
    total_env_steps_ += 1.0;
    metrics.env_steps += 1.0;
    for (auto& stream : lane.streams) {
      auto& agent = population_[stream.agent];
      agent.steps_since_evolution += 1.0;
      agent.total_env_steps += 1.0;
      steps_since_update_[stream.agent] += 1.0;
    }
    if (lane.state.terminal) finish_episode(lane, metrics);
  }
}

void Orchestrator::maybe_update_learners(RoundMetrics& metrics) {
  for (int i = 0; i < cfg_.pbt.population; ++i) {
    if (steps_since_update_[i] < cfg_.mpo.update_period_steps) continue;
    if (!replay_[i]->ready(cfg_.mpo.min_replay_chunks)) continue;
    steps_since_update_[i] = 0.0;
    auto& agent = population_[i];
    Rng update_rng = control_rng_.split(0xABC000 + i + 7919 * agent.learner->update_count);
    const std::vector<TrajectoryChunk> batch =
        replay_[i]->sample(cfg_.mpo.batch_chunks, update_rng);
    std::vector<const TrajectoryChunk*> ptrs;
    ptrs.reserve(batch.size());
    for (const auto& c : batch) ptrs.push_back(&c);
    ChannelHyper hyper{agent.hyper.alpha, agent.hyper.gamma};
    const MixturePrior* mix = nullptr;
    MixturePrior weighted;
    if (mix_ && task_ == TaskId::football && agent.hyper.lambda > 0.0) {
      weighted = *mix_;
      weighted.weights = agent.hyper.beta;
      mix = &weighted;
    }
    LearnerMetrics lm =
        agent.learner->update(ptrs, hyper, layout_, mix, agent.hyper.lambda, update_rng);
    metrics.mean_q_loss += lm.q_loss;
    metrics.mean_mstep_kl += lm.mstep_kl;
    ++metrics.learner_updates;
    snapshots_.publish(model_id(i), agent.learner->policy);
  }
}

void Orchestrator::refresh_fitness() {
  if (task_ != TaskId::football || !payoff_dirty_) return;
  const NashResult nr = nash_average(payoff_.mean_matrix(), cfg_.pbt.nash_tol,
                                     cfg_.pbt.nash_max_iters);
  for (int i = 0; i < cfg_.pbt.population; ++i) population_[i].fitness = nr.fitness[i];
  payoff_dirty_ = false;
}

NashResult Orchestrator::nash() const {
  return nash_average(payoff_.mean_matrix(), cfg_.pbt.nash_tol, cfg_.pbt.nash_max_iters);
}

int Orchestrator::top_agent() const {
  int best = 0;
  for (size_t i = 1; i < population_.size(); ++i)
    if (population_[i].fitness > population_[best].fitness) best = static_cast<int>(i);
  return best;
}

RoundMetrics Orchestrator::run_training_round(double env_step_budget) {
  RoundMetrics metrics;
  const auto wall_start = std::chrono::steady_clock::now();

  while (metrics.env_steps < env_step_budget) {
    sweep_lanes(lanes_, metrics);
    maybe_update_learners(metrics);
    refresh_fitness();
    if (population_.size() >= 2) {
      auto event = evolution_step(population_, cfg_, control_rng_);
      if (event) {
        ++metrics.evolution_events;
        snapshots_.publish(model_id(event->child),
                           population_[event->child].learner->policy);
        payoff_.reset_agent(event->child);
        payoff_dirty_ = true;
      }
    }
  }

  metrics.fitness.resize(population_.size());
  metrics.policy_hash.resize(population_.size());
  for (size_t i = 0; i < population_.size(); ++i) {
    metrics.fitness[i] = population_[i].fitness;
    metrics.policy_hash[i] =
        params_hash(const_cast<const PolicyNet&>(population_[i].learner->policy).params());
  }
  if (metrics.learner_updates > 0) {
    metrics.mean_q_loss /= static_cast<double>(metrics.learner_updates);
    metrics.mean_mstep_kl /= static_cast<double>(metrics.learner_updates);
  }

  // metrics stream row
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  std::ofstream out(metrics_path_, std::ios::app);
  out << wall << "," << total_env_steps_ << "," << metrics.episodes;
  for (const auto& agent : population_) out << "," << agent.fitness;
  out << ",\n";

  write_checkpoint();
  return metrics;
}

// ---------- evaluation ----------

TrajectoryLog Orchestrator::play_episode_vs(const std::string& evaluator_kind, int agent,
                                            uint64_t seed, int max_steps) {
  if (task_ != TaskId::football)
    throw OrchestratorError("play_episode_vs: football orchestrator only");
  auto evaluator = make_scripted(evaluator_kind);
  const auto snap = snapshots_.get(model_id(agent));

  Rng reset_rng(seed);
  GameState state = reset(task_, reset_rng, cfg_);
  Rng act_rng(seed ^ 0x51ed2701);
  evaluator->reset(state, act_rng);

  TrajectoryLog log;
  log.header = make_log_header(state, seed, config_hash(cfg_));
  const int ppt = cfg_.sim.players_per_team;
  const int steps = max_steps > 0 ? max_steps : state.horizon;
  for (int t = 0; t < steps && !state.terminal; ++t) {
    std::vector<ActionCommand> actions(state.players.size());
    for (size_t p = 0; p < state.players.size(); ++p) {
      if (static_cast<int>(p) < ppt) {
        ObservationVector obs = observe(state, static_cast<int>(p), cfg_);
        const GaussianParams head = snap->net.forward(obs.values);
        const VectorXd z = gaussian_sample(head, act_rng);
        const VectorXd x = obs.values.segment(proprio_offset_, proprio_size_);
        const VectorXd a = gaussian_sample(decode(npmp_, x, z), act_rng);
        actions[p] = ActionCommand{a[0], a[1], a[2]};
      } else {
        actions[p] = evaluator->act(state, static_cast<int>(p), act_rng);
      }
    }
    StepResult res = step(state, actions, cfg_);
    log.append(state, actions, res);
  }
  return log;
}

EvalOutcome Orchestrator::evaluate(const std::vector<std::string>& evaluator_kinds,
                                   int n_matches, uint64_t seed, int only_agent) {
  if (evaluator_kinds.empty()) throw OrchestratorError("evaluate: no evaluators");
  EvalOutcome out;
  out.n_agents = cfg_.pbt.population;
  // every rated evaluator must appear in at least one result
  out.n_evaluators = std::min<int>(static_cast<int>(evaluator_kinds.size()),
                                   std::max(1, n_matches));

  Rng rng(seed);
  std::vector<int> agents;
  if (only_agent >= 0)
    agents.push_back(only_agent);
  else
    for (int i = 0; i < cfg_.pbt.population; ++i) agents.push_back(i);

  for (int agent : agents) {
    for (int m = 0; m < n_matches; ++m) {
      const int ev = m % out.n_evaluators;
      const uint64_t ep_seed = rng.next_u64();
      TrajectoryLog log = play_episode_vs(evaluator_kinds[ev], agent, ep_seed);
      int home = 0, away = 0;
      for (const auto& s : log.steps)
        for (const auto& e : s.events) {
          if (e.kind == EventKind::goal_home) ++home;
          if (e.kind == EventKind::goal_away) ++away;
        }
      EloMatch match;
      match.entity_a = agent;
      match.entity_b = out.n_agents + ev;
      match.score_a = home > away ? 1.0 : (home < away ? 0.0 : 0.5);
      out.matches.push_back(match);
    }
  }
  std::vector<int> anchors;
  for (int e = 0; e < out.n_evaluators; ++e) anchors.push_back(out.n_agents + e);
  out.elo = elo_fit(out.matches, out.n_agents + out.n_evaluators, anchors, cfg_);
  return out;
}

// ---------- checkpointing ----------

void Orchestrator::load_agent(int agent, const std::string& params_prefix) {
  if (agent < 0 || agent >= static_cast<int>(population_.size()))
    throw OrchestratorError("load_agent: bad agent id");
  NamedTensors t = load_checkpoint(params_prefix);
  auto& learner = *population_[agent].learner;
  load_policy_tensors(t, "policy", learner.policy);
  load_q_tensors(t, "q", learner.q);
  learner.refresh_target();
  snapshots_.publish(model_id(agent), learner.policy);
}

void Orchestrator::write_checkpoint() const {
  const std::string step_tag = std::to_string(static_cast<long long>(total_env_steps_));
  for (const auto& agent : population_) {
    const std::string dir =
        cfg_.run.out_dir + "/pop/" + std::to_string(agent.id) + "/" + step_tag;
    fs::create_directories(dir);
    NamedTensors t;
    add_policy_tensors(t, "policy", agent.learner->policy);
    add_q_tensors(t, "q", agent.learner->q);
    save_checkpoint(dir + "/params", "agent", t);

    std::ofstream hyp(dir + "/hyper.txt");
    hyp << "alpha";
    for (int i = 0; i < agent.hyper.alpha.size(); ++i) hyp << " " << agent.hyper.alpha[i];
    hyp << "\ngamma";
    for (int i = 0; i < agent.hyper.gamma.size(); ++i) hyp << " " << agent.hyper.gamma[i];
    hyp << "\nbeta";
    for (int i = 0; i < agent.hyper.beta.size(); ++i) hyp << " " << agent.hyper.beta[i];
    hyp << "\nlambda " << agent.hyper.lambda;
    hyp << "\npolicy_lr " << agent.hyper.policy_lr;
    hyp << "\nq_lr " << agent.hyper.q_lr;
    hyp << "\nfitness " << agent.fitness << "\n";

    std::ofstream pay(dir + "/payoff.csv");
    const Mat m = payoff_.mean_matrix();
    pay << "agent";
    for (int j = 0; j < m.cols(); ++j) pay << ",vs_" << j;
    pay << "\n";
    for (int i = 0; i < m.rows(); ++i) {
      pay << i;
      for (int j = 0; j < m.cols(); ++j) pay << "," << m(i, j);
      pay << "\n";
    }
  }
}

}  // namespace pitchlab
