// Command-line entry points: training stages, evaluation, analytics, replay.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pitchlab/analytics/analytics.hpp"
#include "pitchlab/run/orchestrator.hpp"

using namespace pitchlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "TOML config file");
  cmd->add_option("--out", opts.out_dir, "output directory (overrides run.out_dir)");
  cmd->add_option("--seed", opts.seed, "master seed (overrides the config)")
      ->each([&](const std::string&) { opts.seed_set = true; });
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : parse_config_file(opts.config_path);
  if (opts.seed_set) cfg.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.run.out_dir = opts.out_dir;
  validate_config(cfg);
  fs::create_directories(cfg.run.out_dir);
  return cfg;
}

std::string npmp_prefix(const RunConfig& cfg) { return cfg.run.out_dir + "/npmp"; }
std::string expert_prefix(const RunConfig& cfg, const std::string& kind) {
  return cfg.run.out_dir + "/expert_" + kind;
}
std::string prior_prefix(const RunConfig& cfg, const std::string& kind) {
  return cfg.run.out_dir + "/prior_" + kind;
}

NpmpParams require_npmp(const RunConfig& cfg) {
  if (!fs::exists(npmp_prefix(cfg) + ".manifest.txt"))
    throw std::runtime_error("no npmp checkpoint at '" + npmp_prefix(cfg) +
                             "'; run `train npmp` first");
  return load_npmp(npmp_prefix(cfg));
}

std::optional<MixturePrior> try_load_priors(const RunConfig& cfg) {
  MixturePrior mix;
  int found = 0;
  for (TaskId t : {TaskId::follow, TaskId::dribble, TaskId::shoot, TaskId::kick_to_target}) {
    const std::string prefix = prior_prefix(cfg, task_name(t));
    if (!fs::exists(prefix + ".manifest.txt")) continue;
    mix.priors.push_back(load_prior(prefix));
    ++found;
  }
  if (found == 0) return std::nullopt;
  if (found != 4)
    throw std::runtime_error("found " + std::to_string(found) +
                             " drill priors; need all four (or none) to train football");
  mix.weights = VectorXd::Constant(4, 0.25);
  return mix;
}

// latest checkpoint step dir for one agent under <out>/pop/<id>/
std::string latest_params_prefix(const RunConfig& cfg, int agent) {
  const fs::path base = fs::path(cfg.run.out_dir) / "pop" / std::to_string(agent);
  if (!fs::exists(base)) throw std::runtime_error("no checkpoints under " + base.string());
  long long best = -1;
  for (const auto& entry : fs::directory_iterator(base)) {
    if (!entry.is_directory()) continue;
    try {
      best = std::max(best, std::stoll(entry.path().filename().string()));
    } catch (...) {
    }
  }
  if (best < 0) throw std::runtime_error("no checkpoints under " + base.string());
  return (base / std::to_string(best) / "params").string();
}

struct LoadedAgent {
  PolicyNet policy;
  MultiChannelQ q;
};

LoadedAgent load_pop_agent(const RunConfig& cfg, int agent) {
  NamedTensors t = load_checkpoint(latest_params_prefix(cfg, agent));
  LoadedAgent out;
  out.policy.mlp.layers.resize(1);
  load_policy_tensors(t, "policy", out.policy);
  out.q.trunk.layers.resize(1);
  load_q_tensors(t, "q", out.q);
  return out;
}

std::vector<TrajectoryLog> generate_episode_logs(const RunConfig& cfg, const PolicyNet* policy,
                                                 const NpmpParams* npmp,
                                                 const std::string& scripted_kind, int episodes,
                                                 int steps,
                                                 const std::vector<std::string>& opponents,
                                                 uint64_t seed, bool save) {
  std::vector<TrajectoryLog> logs;
  Rng rng(seed);
  const fs::path log_dir = fs::path(cfg.run.out_dir) / "logs";
  if (save) fs::create_directories(log_dir);
  for (int ep = 0; ep < episodes; ++ep) {
    const std::string& opp = opponents[ep % opponents.size()];
    const uint64_t ep_seed = rng.next_u64();
    TrajectoryLog log =
        policy ? play_policy_episode(*policy, *npmp, opp, steps, ep_seed, cfg)
               : play_scripted_episode(scripted_kind, opp, steps, ep_seed, cfg);
    if (save) write_log((log_dir / ("episode_" + std::to_string(ep) + ".jsonl")).string(), log);
    logs.push_back(std::move(log));
  }
  return logs;
}

std::vector<TrajectoryLog> load_logs_dir(const std::string& dir) {
  std::vector<TrajectoryLog> logs;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) logs.push_back(read_log(f.string()));
  if (logs.empty()) throw std::runtime_error("no .jsonl logs in '" + dir + "'");
  return logs;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string opt_cell(const std::optional<double>& v) {
  return v ? std::to_string(*v) : std::string();
}

// ---------- subcommand bodies ----------

int cmd_train_npmp(const CommonOpts& common) {
  RunConfig cfg = resolve_config(common);
  Rng rng(cfg.seed);
  SkillDataset data = generate_expert_dataset(rng, cfg.npmp.dataset_episodes, cfg);
  NpmpParams npmp = make_npmp(cfg, rng);
  NpmpTrainReport report = train_npmp(npmp, data, cfg, rng);
  save_npmp(npmp_prefix(cfg), npmp);
  json out = {{"command", "train npmp"},
              {"dataset_pairs", data.pair_count()},
              {"heldout_before", report.heldout_before},
              {"heldout_after", report.heldout_after},
              {"decoder_hash", npmp.decoder_hash()},
              {"checkpoint", npmp_prefix(cfg)}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_train_drill(const CommonOpts& common, const std::string& kind, double env_steps) {
  RunConfig cfg = resolve_config(common);
  const TaskId task = task_from_name(kind);
  if (task == TaskId::football) throw std::runtime_error("use `train football` for football");
  NpmpParams npmp = require_npmp(cfg);
  Orchestrator orch(cfg, task, npmp, std::nullopt, cfg.seed);
  RoundMetrics metrics = orch.run_training_round(env_steps);
  int best = orch.top_agent();
  save_policy_net(expert_prefix(cfg, kind), "expert_" + kind,
                  orch.population()[best].learner->policy);
  json out = {{"command", "train drill"},
              {"drill", kind},
              {"env_steps", metrics.env_steps},
              {"episodes", metrics.episodes},
              {"learner_updates", metrics.learner_updates},
              {"best_agent", best},
              {"fitness", metrics.fitness},
              {"expert_checkpoint", expert_prefix(cfg, kind)}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_distill_prior(const CommonOpts& common, const std::string& kind) {
  RunConfig cfg = resolve_config(common);
  const TaskId task = task_from_name(kind);
  NpmpParams npmp = require_npmp(cfg);
  if (!fs::exists(expert_prefix(cfg, kind) + ".manifest.txt"))
    throw std::runtime_error("no expert checkpoint for drill '" + kind + "'");
  PolicyNet expert = load_policy_net(expert_prefix(cfg, kind));
  Rng rng(cfg.seed ^ 0xd15711ull);
  PriorPolicy prior = distill_prior_best_of(expert, task, npmp, cfg, rng);
  save_prior(prior_prefix(cfg, kind), prior);
  json out = {{"command", "distill-prior"},
              {"drill", kind},
              {"distill_loss", prior.distill_loss},
              {"schema", prior.schema},
              {"prior_checkpoint", prior_prefix(cfg, kind)}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_train_football(const CommonOpts& common, double env_steps) {
  RunConfig cfg = resolve_config(common);
  NpmpParams npmp = require_npmp(cfg);
  std::optional<MixturePrior> mix = try_load_priors(cfg);
  Orchestrator orch(cfg, TaskId::football, npmp, mix, cfg.seed);
  RoundMetrics metrics = orch.run_training_round(env_steps);
  json out = {{"command", "train football"},
              {"env_steps", metrics.env_steps},
              {"episodes", metrics.episodes},
              {"learner_updates", metrics.learner_updates},
              {"evolution_events", metrics.evolution_events},
              {"fitness", metrics.fitness},
              {"with_priors", mix.has_value()},
              {"checkpoint_dir", cfg.run.out_dir + "/pop"}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_evaluate(const CommonOpts& common, int matches, int only_agent,
                 std::vector<std::string> evaluators) {
  RunConfig cfg = resolve_config(common);
  NpmpParams npmp = require_npmp(cfg);
  if (matches <= 0) matches = cfg.eval.matches;  // paper default: 64
  if (evaluators.empty()) evaluators = {"random", "chaser", "striker"};
  Orchestrator orch(cfg, TaskId::football, npmp, std::nullopt, cfg.seed);
  for (int i = 0; i < cfg.pbt.population; ++i)
    orch.load_agent(i, latest_params_prefix(cfg, i));
  EvalOutcome out = orch.evaluate(evaluators, matches, cfg.seed ^ 0xe7a1ull, only_agent);

  std::string csv = "entity,kind,rating\n";
  for (int i = 0; i < out.n_agents; ++i)
    csv += std::to_string(i) + ",agent," + std::to_string(out.elo.ratings[i]) + "\n";
  for (int e = 0; e < out.n_evaluators; ++e)
    csv += std::to_string(out.n_agents + e) + "," + evaluators[e] + "," +
           std::to_string(out.elo.ratings[out.n_agents + e]) + "\n";
  write_text(cfg.run.out_dir + "/eval.csv", csv);

  json j = {{"command", "evaluate"},
            {"matches", static_cast<int>(out.matches.size())},
            {"degenerate", out.elo.degenerate},
            {"csv", cfg.run.out_dir + "/eval.csv"}};
  std::vector<double> ratings(out.elo.ratings.data(),
                              out.elo.ratings.data() + out.elo.ratings.size());
  j["ratings"] = ratings;
  std::cout << j.dump(2) << "\n";
  return 0;
}

struct AnalyzeSource {
  int agent = 0;
  std::string scripted;           // non-empty: scripted stand-in
  std::string logs_dir;           // non-empty: consume existing logs
  int episodes = 20;
  std::vector<std::string> opponents = {"random", "chaser", "striker"};
  bool save_logs = false;
};

std::vector<TrajectoryLog> analyze_logs(const RunConfig& cfg, const AnalyzeSource& src,
                                        const NpmpParams* npmp, const PolicyNet* policy) {
  if (!src.logs_dir.empty()) return load_logs_dir(src.logs_dir);
  return generate_episode_logs(cfg, policy, npmp, src.scripted, src.episodes,
                               cfg.analytics.episode_steps, src.opponents,
                               cfg.seed ^ 0xa9a1ull, src.save_logs);
}

int cmd_analyze_stats(const CommonOpts& common, const AnalyzeSource& src) {
  RunConfig cfg = resolve_config(common);
  std::optional<NpmpParams> npmp;
  std::optional<LoadedAgent> agent;
  if (src.scripted.empty() && src.logs_dir.empty()) {
    npmp = require_npmp(cfg);
    agent = load_pop_agent(cfg, src.agent);
  }
  auto logs = analyze_logs(cfg, src, npmp ? &*npmp : nullptr, agent ? &agent->policy : nullptr);
  BehaviourStats stats = compute_behaviour_stats(logs, cfg, 0);
  ObsoModel model = fit_obso(logs, cfg);
  stats.receiver_obso = receiver_obso_stat(logs, model, cfg, 0);

  std::string csv =
      "speed,getting_up,ball_control,possession,pass_frequency,pass_range,"
      "division_of_labour,territory,receiver_obso,close_to_ball,ball_crowding,"
      "teammates_spread,passes_10m_per_episode,net_interceptions_per_episode,touches,passes,"
      "episodes\n";
  csv += std::to_string(stats.speed) + "," + opt_cell(stats.getting_up) + "," +
         std::to_string(stats.ball_control) + "," + std::to_string(stats.possession) + "," +
         std::to_string(stats.pass_frequency) + "," + std::to_string(stats.pass_range) + "," +
         opt_cell(stats.division_of_labour) + "," + std::to_string(stats.territory) + "," +
         opt_cell(stats.receiver_obso) + "," + std::to_string(stats.close_to_ball) + "," +
         std::to_string(stats.ball_crowding) + "," + std::to_string(stats.teammates_spread) +
         "," + std::to_string(stats.passes_10m_per_episode) + "," +
         std::to_string(stats.net_interceptions_per_episode) + "," +
         std::to_string(stats.touches) + "," + std::to_string(stats.passes) + "," +
         std::to_string(stats.episodes) + "\n";
  write_text(cfg.run.out_dir + "/stats.csv", csv);
  json j = {{"command", "analyze stats"},
            {"episodes", stats.episodes},
            {"ball_control", stats.ball_control},
            {"possession", stats.possession},
            {"passes", stats.passes},
            {"csv", cfg.run.out_dir + "/stats.csv"}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_obso(const CommonOpts& common, const AnalyzeSource& src) {
  RunConfig cfg = resolve_config(common);
  std::optional<NpmpParams> npmp;
  std::optional<LoadedAgent> agent;
  if (src.scripted.empty() && src.logs_dir.empty()) {
    npmp = require_npmp(cfg);
    agent = load_pop_agent(cfg, src.agent);
  }
  auto logs = analyze_logs(cfg, src, npmp ? &*npmp : nullptr, agent ? &agent->policy : nullptr);
  ObsoModel model = fit_obso(logs, cfg);
  auto stat = receiver_obso_stat(logs, model, cfg, 0);

  std::string csv = "v_p,v_b,t_r,cov_xx,cov_xy,cov_yy,score_fallback,receiver_obso\n";
  csv += std::to_string(model.v_p) + "," + std::to_string(model.v_b) + "," +
         std::to_string(model.t_r) + "," + std::to_string(model.transition_cov(0, 0)) + "," +
         std::to_string(model.transition_cov(0, 1)) + "," +
         std::to_string(model.transition_cov(1, 1)) + "," +
         std::to_string(model.score_fallback ? 1 : 0) + "," + opt_cell(stat) + "\n";
  write_text(cfg.run.out_dir + "/obso_model.csv", csv);

  // dump the OBSO field of the first qualifying pass, when one exists
  for (const auto& log : logs) {
    auto passes = detect_passes(log, cfg.analytics.receiver_obso_min_range);
    if (passes.empty()) continue;
    GameState snap = state_from_log(log, passes[0].step_kick, cfg);
    ObsoField field = compute_obso(snap, model, passes[0].receiver, cfg);
    write_text(cfg.run.out_dir + "/obso_field.txt", field_to_text(field.obso));
    break;
  }
  json j = {{"command", "analyze obso"},
            {"v_p", model.v_p},
            {"v_b", model.v_b},
            {"score_fallback", model.score_fallback},
            {"csv", cfg.run.out_dir + "/obso_model.csv"}};
  if (stat) j["receiver_obso"] = *stat;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_cpd(const CommonOpts& common, const AnalyzeSource& src) {
  RunConfig cfg = resolve_config(common);
  LoadedAgent agent = load_pop_agent(cfg, src.agent);
  Rng rng(cfg.seed ^ 0xc9d);
  std::string csv = "object,cpd\n";
  json j = {{"command", "analyze cpd"}};
  for (auto [name, obj] : {std::pair<const char*, CpdObject>{"ball", CpdObject::ball},
                           {"teammate", CpdObject::teammate},
                           {"opponent1", CpdObject::opponent1},
                           {"opponent2", CpdObject::opponent2}}) {
    const double v = cpd(agent.policy, obj, cfg.analytics.cpd_states,
                         cfg.analytics.cpd_resamples, cfg, rng);
    csv += std::string(name) + "," + std::to_string(v) + "\n";
    j[name] = v;
  }
  write_text(cfg.run.out_dir + "/cpd.csv", csv);
  j["csv"] = cfg.run.out_dir + "/cpd.csv";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_probe(const CommonOpts& common, const AnalyzeSource& src, int episodes) {
  RunConfig cfg = resolve_config(common);
  NpmpParams npmp = require_npmp(cfg);
  ProbeActors actors;
  std::optional<LoadedAgent> agent;
  std::unique_ptr<ScriptedController> scripted;
  if (!src.scripted.empty()) {
    scripted = make_scripted(src.scripted);
    actors.attacker = scripted.get();
  } else {
    agent = load_pop_agent(cfg, src.agent);
    actors.policy = &agent->policy;
    actors.q = &agent->q;
  }
  Rng rng(cfg.seed ^ 0x9806ull);
  ProbeResult res = run_probe(actors, src.opponents, episodes, &npmp, cfg, rng);
  std::string csv = "probe_score,pvc_passer,pvc_receiver,episodes\n";
  csv += std::to_string(res.probe_score) + "," + opt_cell(res.pvc_passer) + "," +
         opt_cell(res.pvc_receiver) + "," + std::to_string(res.episodes) + "\n";
  write_text(cfg.run.out_dir + "/probe.csv", csv);
  json j = {{"command", "analyze probe"},
            {"probe_score", res.probe_score},
            {"episodes", res.episodes},
            {"csv", cfg.run.out_dir + "/probe.csv"}};
  if (res.pvc_passer) j["pvc_passer"] = *res.pvc_passer;
  if (res.pvc_receiver) j["pvc_receiver"] = *res.pvc_receiver;
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_knowledge(const CommonOpts& common, const AnalyzeSource& src) {
  RunConfig cfg = resolve_config(common);
  NpmpParams npmp = require_npmp(cfg);
  LoadedAgent agent = load_pop_agent(cfg, src.agent);

  // roll episodes; capture penultimate activations, 5-step raw windows, and
  // binary game features for player 0
  const auto& layout = obs_layout(TaskId::football, cfg);
  const ObsBlock* proprio = layout.find("proprio");
  std::vector<VectorXd> internals, raws;
  std::vector<int> lbl_closest, lbl_mate_closest, lbl_ball_away_half;
  Rng rng(cfg.seed ^ 0x1209ull);
  for (int ep = 0; ep < src.episodes; ++ep) {
    Rng reset_rng(rng.next_u64());
    GameState s = reset(TaskId::football, reset_rng, cfg);
    Rng act(rng.next_u64());
    auto opp = make_scripted(src.opponents[ep % src.opponents.size()]);
    opp->reset(s, act);
    std::deque<VectorXd> window;
    for (int t = 0; t < cfg.analytics.episode_steps && !s.terminal; ++t) {
      std::vector<ActionCommand> actions(4);
      std::vector<VectorXd> hidden;
      for (int p = 0; p < 4; ++p) {
        if (p < 2) {
          ObservationVector obs = observe(s, p, cfg);
          std::vector<VectorXd> acts;
          const GaussianParams head = agent.policy.forward_with_hidden(obs.values, &acts);
          const VectorXd z = gaussian_sample(head, act);
          const VectorXd x = obs.values.segment(proprio->offset, proprio->size);
          const VectorXd a = gaussian_sample(decode(npmp, x, z), act);
          actions[p] = ActionCommand{a[0], a[1], a[2]};
          if (p == 0) {
            hidden = acts;
            window.push_back(obs.values);
            if (window.size() > 5) window.pop_front();
          }
        } else {
          actions[p] = opp->act(s, p, act);
        }
      }
      // subsample steps to keep the probe dataset modest
      if (t % 7 == 0 && window.size() == 5 && !hidden.empty()) {
        internals.push_back(hidden.back());
        VectorXd raw(window[0].size() * 5);
        for (int w = 0; w < 5; ++w) raw.segment(w * window[0].size(), window[0].size()) = window[w];
        raws.push_back(raw);
        double best = 1e18;
        int closest = 0;
        for (int p = 0; p < 4; ++p) {
          const double d = (s.players[p].position - s.ball.position).norm();
          if (d < best) {
            best = d;
            closest = p;
          }
        }
        lbl_closest.push_back(closest == 0 ? 1 : 0);
        lbl_mate_closest.push_back(closest == 1 ? 1 : 0);
        lbl_ball_away_half.push_back(s.ball.position.x() > 0 ? 1 : 0);
      }
      step(s, actions, cfg);
    }
  }
  if (internals.size() < 60) throw std::runtime_error("probe dataset too small");

  auto pack = [](const std::vector<VectorXd>& cols) {
    Mat m(cols[0].size(), cols.size());
    for (size_t i = 0; i < cols.size(); ++i) m.col(i) = cols[i];
    return m;
  };
  const Mat internal = pack(internals);
  const Mat raw = pack(raws);

  std::string csv = "feature,internal_acc,internal_sd,raw_acc,raw_sd,n\n";
  json j = {{"command", "analyze probe-knowledge"}};
  Rng probe_rng(cfg.seed ^ 0x88ull);
  for (auto& [name, labels] :
       std::vector<std::pair<std::string, std::vector<int>*>>{
           {"agent_closest_to_ball", &lbl_closest},
           {"teammate_closest_to_ball", &lbl_mate_closest},
           {"ball_in_away_half", &lbl_ball_away_half}}) {
    int pos = 0;
    for (int v : *labels) pos += v;
    if (pos == 0 || pos == static_cast<int>(labels->size())) {
      csv += name + ",,,,," + std::to_string(labels->size()) + "\n";
      continue;
    }
    LinearProbeReport on_internal = fit_linear_probe(internal, *labels, 3, 5, probe_rng);
    LinearProbeReport on_raw = fit_linear_probe(raw, *labels, 3, 5, probe_rng);
    csv += name + "," + std::to_string(on_internal.balanced_accuracy) + "," +
           std::to_string(on_internal.accuracy_sd) + "," +
           std::to_string(on_raw.balanced_accuracy) + "," +
           std::to_string(on_raw.accuracy_sd) + "," + std::to_string(labels->size()) + "\n";
    j[name] = {{"internal", on_internal.balanced_accuracy},
               {"raw", on_raw.balanced_accuracy}};
  }
  write_text(cfg.run.out_dir + "/knowledge.csv", csv);
  j["csv"] = cfg.run.out_dir + "/knowledge.csv";
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_analyze_event_kl(const CommonOpts& common, const AnalyzeSource& src, int window) {
  RunConfig cfg = resolve_config(common);
  NpmpParams npmp = require_npmp(cfg);
  LoadedAgent agent = load_pop_agent(cfg, src.agent);
  std::vector<PriorPolicy> priors;
  for (TaskId t : {TaskId::follow, TaskId::dribble, TaskId::shoot, TaskId::kick_to_target}) {
    const std::string prefix = prior_prefix(cfg, task_name(t));
    if (!fs::exists(prefix + ".manifest.txt"))
      throw std::runtime_error("missing drill prior '" + prefix + "'");
    priors.push_back(load_prior(prefix));
  }
  auto logs = analyze_logs(cfg, src, &npmp, &agent.policy);
  EventKlCurves curves = event_kl(agent.policy, priors, logs, window, cfg);

  std::string csv = "offset";
  for (const auto& n : curves.names) csv += "," + n;
  csv += "\n";
  for (int d = 0; d < 2 * window + 1; ++d) {
    csv += std::to_string(d - window);
    for (size_t i = 0; i < curves.mean_kl.size(); ++i)
      csv += "," + std::to_string(curves.mean_kl[i][d]);
    csv += "\n";
  }
  write_text(cfg.run.out_dir + "/eventkl.csv", csv);
  json j = {{"command", "analyze event-kl"},
            {"events", curves.events},
            {"csv", cfg.run.out_dir + "/eventkl.csv"}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_replay(const CommonOpts& common, const std::string& log_path) {
  RunConfig cfg = resolve_config(common);
  TrajectoryLog log = read_log(log_path);
  if (log.header.config_hash != config_hash(cfg))
    throw std::runtime_error("config hash mismatch: the log was produced under a different "
                             "configuration");
  TrajectoryLog replayed = replay_log(log, cfg);
  const uint64_t h0 = log_hash(log), h1 = log_hash(replayed);
  json j = {{"command", "replay"},
            {"log", log_path},
            {"steps", log.steps.size()},
            {"hash_original", h0},
            {"hash_replayed", h1},
            {"match", h0 == h1}};
  std::cout << j.dump(2) << "\n";
  return h0 == h1 ? 0 : 2;
}

int cmd_describe_config() {
  for (const auto& k : describe_config())
    std::cout << k.key << " [" << k.type << ", " << k.provenance << "] " << k.doc << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale 2v2 point-mass soccer: training, evaluation, analytics"};
  app.require_subcommand(1);

  CommonOpts common;
  std::string drill_kind, log_path;
  double env_steps = 1e5;
  int matches = -1;  // resolved from eval.matches (64) unless given
  int only_agent = -1;
  int probe_episodes = 64;
  int kl_window = 15;
  std::vector<std::string> evaluators;
  AnalyzeSource src;

  auto* train = app.add_subcommand("train", "training stages");
  train->require_subcommand(1);
  auto* t_npmp = train->add_subcommand("npmp", "stage 1: latent motor module");
  add_common(t_npmp, common);
  auto* t_drill = train->add_subcommand("drill", "stage 2: drill experts by PBT-RL");
  t_drill->add_option("kind", drill_kind, "follow|dribble|shoot|kick_to_target")->required();
  t_drill->add_option("--env-steps", env_steps, "environment step budget");
  add_common(t_drill, common);
  auto* t_foot = train->add_subcommand("football", "stage 3: 2v2 football by PBT-MARL");
  t_foot->add_option("--env-steps", env_steps, "environment step budget");
  add_common(t_foot, common);

  auto* distill = app.add_subcommand("distill-prior", "stage 2: expert -> drill prior");
  distill->add_option("--drill", drill_kind, "follow|dribble|shoot|kick_to_target")->required();
  add_common(distill, common);

  auto* eval = app.add_subcommand("evaluate", "Elo against scripted evaluators");
  eval->add_option("--matches", matches, "matches per agent (default 64)");
  eval->add_option("--agent", only_agent, "restrict to one agent id");
  eval->add_option("--evaluators", evaluators, "scripted evaluator kinds");
  add_common(eval, common);

  auto* analyze = app.add_subcommand("analyze", "post-hoc analyses");
  analyze->require_subcommand(1);
  auto add_source = [&](CLI::App* cmd, bool episodes_3000 = true) {
    cmd->add_option("--agent", src.agent, "population agent id (default 0)");
    cmd->add_option("--scripted", src.scripted, "scripted stand-in instead of a checkpoint");
    cmd->add_option("--logs-dir", src.logs_dir, "consume existing .jsonl logs");
    cmd->add_option("--episodes", src.episodes, "episodes to generate");
    cmd->add_option("--vs", src.opponents, "opponent evaluator kinds");
    cmd->add_flag("--save-logs", src.save_logs, "write generated logs to <out>/logs");
    (void)episodes_3000;
    add_common(cmd, common);
  };
  auto* a_stats = analyze->add_subcommand("stats", "behaviour statistics");
  add_source(a_stats);
  auto* a_obso = analyze->add_subcommand("obso", "fit the OBSO model and field");
  add_source(a_obso);
  auto* a_cpd = analyze->add_subcommand("cpd", "counterfactual policy divergence");
  add_source(a_cpd);
  auto* a_probe = analyze->add_subcommand("probe", "pass probe task");
  a_probe->add_option("--probe-episodes", probe_episodes, "probe episodes");
  add_source(a_probe);
  auto* a_knowledge = analyze->add_subcommand("probe-knowledge", "linear knowledge probes");
  add_source(a_knowledge);
  auto* a_eventkl = analyze->add_subcommand("event-kl", "KL to drill priors around kicks");
  a_eventkl->add_option("--window", kl_window, "steps either side of the kick");
  add_source(a_eventkl);

  auto* replay_cmd = app.add_subcommand("replay", "re-simulate a log deterministically");
  replay_cmd->add_option("log", log_path, "trajectory log path")->required();
  add_common(replay_cmd, common);

  auto* describe = app.add_subcommand("describe-config", "list every config key");
  (void)describe;

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (int i = 1; i < argc; ++i) command += std::string(i > 1 ? " " : "") + argv[i];

  try {
    if (t_npmp->parsed()) return cmd_train_npmp(common);
    if (t_drill->parsed()) return cmd_train_drill(common, drill_kind, env_steps);
    if (t_foot->parsed()) return cmd_train_football(common, env_steps);
    if (distill->parsed()) return cmd_distill_prior(common, drill_kind);
    if (eval->parsed()) return cmd_evaluate(common, matches, only_agent, evaluators);
    if (a_stats->parsed()) return cmd_analyze_stats(common, src);
    if (a_obso->parsed()) return cmd_analyze_obso(common, src);
    if (a_cpd->parsed()) return cmd_analyze_cpd(common, src);
    if (a_probe->parsed()) return cmd_analyze_probe(common, src, probe_episodes);
    if (a_knowledge->parsed()) return cmd_analyze_knowledge(common, src);
    if (a_eventkl->parsed()) return cmd_analyze_event_kl(common, src, kl_window);
    if (replay_cmd->parsed()) return cmd_replay(common, log_path);
    if (describe->parsed()) return cmd_describe_config();
  } catch (const std::exception& e) {
    json err = {{"error", e.what()}, {"command", command}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
