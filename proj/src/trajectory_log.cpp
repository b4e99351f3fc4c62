#include "pitchlab/io/trajectory_log.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "pitchlab/rng.hpp"

namespace pitchlab {

using nlohmann::json;

namespace {

std::array<double, 2> q2(const Vec2& v) { return {quantize9(v.x()), quantize9(v.y())}; }

json events_to_json(const std::vector<EventRecord>& events) {
  json out = json::array();
  for (const auto& e : events)
    out.push_back({{"kind", event_kind_name(e.kind)}, {"actor", e.actor}});
  return out;
}

std::vector<EventRecord> events_from_json(const json& j, int step) {
  std::vector<EventRecord> out;
  for (const auto& e : j)
    out.push_back({step, event_kind_from_name(e.at("kind").get<std::string>()),
                   e.at("actor").get<int>()});
  return out;
}

}  // namespace

void TrajectoryLog::append(const GameState& state, std::span<const ActionCommand> actions,
                           const StepResult& result) {
  LogStep rec;
  rec.t = static_cast<int>(steps.size());
  rec.ball_position = q2(state.ball.position);
  rec.ball_velocity = q2(state.ball.velocity);
  rec.players.resize(state.players.size());
  for (size_t i = 0; i < state.players.size(); ++i) {
    const auto& p = state.players[i];
    auto& lp = rec.players[i];
    lp.position = q2(p.position);
    lp.velocity = q2(p.velocity);
    lp.heading = quantize9(p.heading);
    lp.team = p.team == Team::home ? 0 : 1;
    lp.touch = false;
  }
  for (const auto& e : result.events)
    if ((e.kind == EventKind::touch || e.kind == EventKind::kick) && e.actor >= 0 &&
        e.actor < static_cast<int>(rec.players.size()))
      rec.players[e.actor].touch = true;
  rec.actions.reserve(actions.size());
  for (const auto& a : actions) {
    const ActionCommand c = a.quantized();
    rec.actions.push_back({c.forward, c.turn, c.kick});
  }
  rec.rewards.reserve(result.rewards.size());
  for (const auto& r : result.rewards) {
    std::vector<double> qr(r.size());
    for (size_t i = 0; i < r.size(); ++i) qr[i] = quantize9(r[i]);
    rec.rewards.push_back(std::move(qr));
  }
  rec.events = result.events;
  for (auto& e : rec.events) e.step = rec.t;
  if (state.task == TaskId::follow || state.task == TaskId::dribble)
    rec.target = q2(state.context.track.at(state.step));
  else if (state.task == TaskId::kick_to_target)
    rec.target = q2(state.context.static_target);
  steps.push_back(std::move(rec));
}

LogHeader make_log_header(const GameState& state, uint64_t seed, uint64_t config_hash) {
  LogHeader h;
  h.task = task_name(state.task);
  h.seed = seed;
  h.config_hash = config_hash;
  h.pitch_length = quantize9(state.pitch.length);
  h.pitch_width = quantize9(state.pitch.width);
  h.goal_width = quantize9(state.pitch.goal_width);
  std::vector<int> home, away;
  for (const auto& p : state.players)
    (p.team == Team::home ? home : away).push_back(p.index);
  h.teams = {home, away};
  return h;
}

std::string serialize_log(const TrajectoryLog& log) {
  std::ostringstream out;
  json h = {{"format_version", log.header.format_version},
            {"task", log.header.task},
            {"seed", log.header.seed},
            {"config_hash", log.header.config_hash},
            {"pitch", {{"length", log.header.pitch_length},
                       {"width", log.header.pitch_width},
                       {"goal_width", log.header.goal_width}}},
            {"teams", log.header.teams}};
  out << h.dump() << "\n";
  for (const auto& s : log.steps) {
    json players = json::array();
    for (const auto& p : s.players)
      players.push_back({{"p", p.position},
                         {"v", p.velocity},
                         {"h", p.heading},
                         {"team", p.team},
                         {"touch", p.touch}});
    json rec = {{"t", s.t},
                {"ball", {{"p", s.ball_position}, {"v", s.ball_velocity}}},
                {"players", players},
                {"actions", s.actions},
                {"rewards", s.rewards},
                {"events", events_to_json(s.events)}};
    if (s.target) rec["target"] = *s.target;
    out << rec.dump() << "\n";
  }
  return out.str();
}

TrajectoryLog parse_log(const std::string& text) {
  TrajectoryLog log;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw LogError("line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      if (!have_header) {
        log.header.format_version = j.at("format_version").get<int>();
        if (log.header.format_version != 1)
          throw LogError("line 1: unsupported format_version " +
                         std::to_string(log.header.format_version));
        log.header.task = j.at("task").get<std::string>();
        log.header.seed = j.at("seed").get<uint64_t>();
        log.header.config_hash = j.at("config_hash").get<uint64_t>();
        const auto& pitch = j.at("pitch");
        log.header.pitch_length = pitch.at("length").get<double>();
        log.header.pitch_width = pitch.at("width").get<double>();
        log.header.goal_width = pitch.at("goal_width").get<double>();
        log.header.teams = j.at("teams").get<std::vector<std::vector<int>>>();
        have_header = true;
        continue;
      }
      LogStep s;
      s.t = j.at("t").get<int>();
      if (s.t != static_cast<int>(log.steps.size()))
        throw LogError("line " + std::to_string(lineno) + ": non-monotone step index");
      const auto& ball = j.at("ball");
      s.ball_position = ball.at("p").get<std::array<double, 2>>();
      s.ball_velocity = ball.at("v").get<std::array<double, 2>>();
      for (const auto& pj : j.at("players")) {
        LogPlayer p;
        p.position = pj.at("p").get<std::array<double, 2>>();
        p.velocity = pj.at("v").get<std::array<double, 2>>();
        p.heading = pj.at("h").get<double>();
        p.team = pj.at("team").get<int>();
        p.touch = pj.at("touch").get<bool>();
        s.players.push_back(p);
      }
      s.actions = j.at("actions").get<std::vector<std::array<double, 3>>>();
      s.rewards = j.at("rewards").get<std::vector<std::vector<double>>>();
      s.events = events_from_json(j.at("events"), s.t);
      if (j.contains("target")) s.target = j.at("target").get<std::array<double, 2>>();
      log.steps.push_back(std::move(s));
    } catch (const LogError&) {
      throw;
    } catch (const std::exception& e) {
      throw LogError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw LogError("empty log: missing header line");
  return log;
}

void write_log(const std::string& path, const TrajectoryLog& log) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LogError("cannot open '" + path + "' for writing");
  out << serialize_log(log);
  if (!out) throw LogError("short write to '" + path + "'");
}

TrajectoryLog read_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_log(ss.str());
}

uint64_t log_hash(const TrajectoryLog& log) {
  const std::string s = serialize_log(log);
  return fnv1a64(s.data(), s.size());
}

TrajectoryLog replay_log(const TrajectoryLog& log, const RunConfig& cfg,
                         const std::function<void(const GameState&, int)>& visit) {
  Rng rng(log.header.seed);
  GameState state = reset(task_from_name(log.header.task), rng, cfg);

  TrajectoryLog out;
  out.header = make_log_header(state, log.header.seed, log.header.config_hash);

  for (size_t t = 0; t < log.steps.size(); ++t) {
    if (visit) visit(state, static_cast<int>(t));
    const auto& rec = log.steps[t];
    if (rec.actions.size() != state.players.size())
      throw LogError("step " + std::to_string(t) + ": action count mismatch");
    std::vector<ActionCommand> actions(rec.actions.size());
    for (size_t i = 0; i < rec.actions.size(); ++i)
      actions[i] = {rec.actions[i][0], rec.actions[i][1], rec.actions[i][2]};
    StepResult result = step(state, actions, cfg);
    out.append(state, actions, result);
    if (state.terminal) break;
  }
  return out;
}

}  // namespace pitchlab
