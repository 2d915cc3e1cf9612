#ifndef BTOM_HARNESS_HPP
#define BTOM_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "btom/bpr.hpp"
#include "btom/core.hpp"
#include "btom/detect_learn.hpp"
#include "btom/games.hpp"
#include "btom/opponents.hpp"
#include "btom/policies.hpp"
#include "btom/store.hpp"
#include "btom/tomop.hpp"

namespace btom {

inline constexpr const char* kOutputDirEnv = "BTOM_OUTPUT_DIR";

enum class AgentKind { ToMoP0, ToMoP1 };

inline const char* to_string(AgentKind a) { return a == AgentKind::ToMoP0 ? "tomop0" : "tomop1"; }

inline AgentKind parse_agent_kind(std::string_view s) {
  if (s == "tomop0") return AgentKind::ToMoP0;
  if (s == "tomop1") return AgentKind::ToMoP1;
  throw Error("unknown agent kind '" + std::string(s) + "'");
}

/// Default belief floor for a game. The floor caps any single belief at
/// 1/(1+(n-1)*floor), so the 24-strategy library needs a smaller one.
inline double default_belief_floor(GameId game) {
  return game == GameId::ThievesHunters ? 0.001 : kDefaultBeliefFloor;
}

struct ExperimentConfig {
  GameSpec spec = rps_spec();
  AgentKind agent = AgentKind::ToMoP1;
  OpponentConfig opponent;
  int episodes = 1000;
  int runs = 100;
  std::uint64_t seed = 1;
  ToMoPParams params;
  int h = 10;
  bool detect = false;
  RmaxParams learning;
  int regen_episodes = 50;
  int threads = 0;  // 0: hardware concurrency
  std::string output = "out";
  std::string store = "store";

  void validate() const {
    spec.validate();
    opponent.validate();
    params.validate();
    learning.validate();
    if (episodes < 1) throw Error("config: episodes must be >= 1");
    if (runs < 1) throw Error("config: runs must be >= 1");
    if (h < 1) throw Error("config: h must be >= 1");
    if (regen_episodes < 2) throw Error("config: regen_episodes must be >= 2");
    if (threads < 0) throw Error("config: threads must be >= 0");
  }
};

namespace detail {

inline bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("expected boolean, got '" + v + "'");
}

inline double parse_real(const std::string& v) { return parse_double(trim(v)); }

}  // namespace detail

/// Parse the sectioned key=value config format. Unknown sections and keys are
/// errors, reported with their line number.
inline ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::optional<GameId> game;
  std::optional<double> floor;
  std::vector<std::pair<std::string, std::string>> layout;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    const auto t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw Error(where + "malformed section header");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      if (section != "experiment" && section != "agent" && section != "opponent" && section != "learning" &&
          section != "game")
        throw Error(where + "unknown section '" + section + "'");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw Error(where + "expected key=value");
    const auto key = detail::trim(std::string_view(t).substr(0, eq));
    const auto value = detail::trim(std::string_view(t).substr(eq + 1));
    if (section.empty()) throw Error(where + "key '" + key + "' outside a section");
    try {
      bool ok = true;
      if (section == "experiment") {
        if (key == "game") game = parse_game_id(value);
        else if (key == "agent") cfg.agent = parse_agent_kind(value);
        else if (key == "episodes") cfg.episodes = detail::parse_int(value);
        else if (key == "runs") cfg.runs = detail::parse_int(value);
        else if (key == "seed") cfg.seed = std::stoull(value);
        else if (key == "threads") cfg.threads = detail::parse_int(value);
        else if (key == "output") cfg.output = value;
        else if (key == "store") cfg.store = value;
        else ok = false;
      } else if (section == "agent") {
        if (key == "c1") cfg.params.c1 = detail::parse_real(value);
        else if (key == "lambda") cfg.params.lambda = detail::parse_real(value);
        else if (key == "delta") cfg.params.delta = detail::parse_real(value);
        else if (key == "l") cfg.params.l = detail::parse_int(value);
        else if (key == "h") cfg.h = detail::parse_int(value);
        else if (key == "belief_floor") floor = detail::parse_real(value);
        else if (key == "detect") cfg.detect = detail::parse_bool(value);
        else ok = false;
      } else if (section == "opponent") {
        if (key == "kind") cfg.opponent.kind = parse_opponent_kind(value);
        else if (key == "strategy") cfg.opponent.strategy = detail::parse_int(value);
        else if (key == "period") cfg.opponent.period = detail::parse_int(value);
        else if (key == "activation") cfg.opponent.activation = detail::parse_int(value);
        else if (key == "revisit") cfg.opponent.novel_revisit = detail::parse_bool(value);
        else if (key == "order") {
          if (value == "tom-first") cfg.opponent.mixed_tom_first = true;
          else if (value == "stationary-first") cfg.opponent.mixed_tom_first = false;
          else throw Error("expected tom-first or stationary-first");
        } else ok = false;
      } else if (section == "learning") {
        if (key == "n") cfg.learning.n = detail::parse_int(value);
        else if (key == "gamma") cfg.learning.gamma = detail::parse_real(value);
        else if (key == "epsilon") cfg.learning.epsilon = detail::parse_real(value);
        else if (key == "u_opt") cfg.learning.u_opt = detail::parse_real(value);
        else if (key == "cap") cfg.learning.cap = detail::parse_int(value);
        else if (key == "window") cfg.learning.window = detail::parse_int(value);
        else if (key == "regen_episodes") cfg.regen_episodes = detail::parse_int(value);
        else ok = false;
      } else {
        layout.emplace_back(key, value);
      }
      if (!ok) throw Error("unknown key '" + key + "' in [" + section + "]");
    } catch (const Error& e) {
      throw Error(where + e.what());
    } catch (const std::exception&) {
      throw Error(where + "bad value '" + value + "' for '" + key + "'");
    }
  }
  if (!game) throw Error("config: [experiment] game is required");
  cfg.spec = default_spec(*game);
  for (const auto& [k, v] : layout)
    if (!apply_layout_key(cfg.spec, k, v)) throw Error("config: unknown key '" + k + "' in [game]");
  cfg.params.belief_floor = floor.value_or(default_belief_floor(*game));
  if (const char* dir = std::getenv(kOutputDirEnv); dir && *dir) cfg.output = dir;
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// -- Training -------------------------------------------------------------------

struct TrainParams {
  QLearningParams q;
  int q_episodes = 0;  // 0: default_q_episodes for the game
  int perf_episodes = 100;
  int closure_retries = 8;
};

/// Scripted library, Q-learned responses and performance models for one game.
/// Responses that tie or beat another strategy's designated response are
/// retrained with fresh streams until the library is closed or retries run out.
inline int default_q_episodes(GameId game) { return game == GameId::Soccer ? 150000 : 50000; }

inline Store train(const GameSpec& spec, std::uint64_t seed, const TrainParams& params = {}) {
  spec.validate();
  TrainParams tp = params;
  tp.q.episodes = tp.q_episodes > 0 ? tp.q_episodes : default_q_episodes(spec.id);
  tp.q.validate();
  if (tp.perf_episodes < 2) throw Error("train: perf_episodes must be >= 2");
  Rng root(seed);
  Store st;
  st.spec = spec;
  st.seed = seed;
  st.opponents = scripted_library(spec);
  Rng br_rng = root.fork("responses");
  st.responses = build_response_library(spec, st.opponents, tp.q, br_rng);
  Rng perf_rng = root.fork("perf");
  st.perf = estimate_perf_models(spec, st.responses, st.opponents, tp.perf_episodes, perf_rng, kDefaultSigmaFloor,
                                 &st.win_rate);
  for (int attempt = 0; attempt < tp.closure_retries; ++attempt) {
    const auto bad = closure_violations(st.perf);
    if (bad.empty()) break;
    for (std::size_t i : bad) {
      Rng retry = root.fork("retrain", static_cast<std::uint64_t>(attempt) * 100003u + i);
      st.responses.entries[i] = q_learn_best_response(spec, st.opponents[i], tp.q, retry);
    }
    st.perf = estimate_perf_models(spec, st.responses, st.opponents, tp.perf_episodes, perf_rng, kDefaultSigmaFloor,
                                   &st.win_rate);
  }
  return st;
}

inline Store load_store_for(const ExperimentConfig& cfg) {
  const auto path = store_path(cfg.store, cfg.spec.id);
  if (!std::filesystem::exists(path))
    throw Error("store '" + path.string() + "' not found; run 'btom train --game " + to_string(cfg.spec.id) +
                " --seed N --store " + cfg.store + "' first");
  Store st = load_store(path);
  if (format_layout(st.spec) != format_layout(cfg.spec))
    throw Error("store '" + path.string() + "' was trained on a different layout; retrain it");
  return st;
}

// -- Running --------------------------------------------------------------------

struct EpisodeRow {
  int run = 0;
  int episode = 0;
  double r_self = 0.0;
  Result result = Result::Draw;
  double c1 = std::nan("");
  int flag = -1;
  double upsilon = std::nan("");
  double theta = std::nan("");
  int jhat = -1;
  int pi = 0;
  std::string opponent_strategy;
  bool detected = false;
};

struct LearnRow {
  int run = 0;
  int episode = 0;  // experiment episode that triggered learning
  LearnTraceRow trace;
};

struct RunResult {
  std::vector<EpisodeRow> rows;
  std::vector<LearnRow> learning;
};

/// One run of `cfg` against a loaded store. Deterministic in (cfg.seed, run).
inline RunResult run_single(const ExperimentConfig& cfg, const Store& store, int run) {
  Rng run_rng = Rng(cfg.seed).fork("run", static_cast<std::uint64_t>(run));
  StrategyLibrary own = store.responses;
  StrategyLibrary known = store.opponents;
  BprContext ctx = make_context(store.perf);
  const double floor = cfg.params.belief_floor;

  ToMoP0Agent zero(ctx.perf_self, floor);
  ToMoP1Agent first;
  if (cfg.agent == AgentKind::ToMoP1) first = ToMoP1Agent(ctx, cfg.params);

  std::optional<TabularPolicy> novel;
  if (cfg.opponent.kind == OpponentKind::Novel) novel = novel_strategy(cfg.spec);
  OpponentController opp(cfg.opponent, store.opponents, ctx.perf_oppo, novel, run_rng.fork("opponent"), floor);

  Rng env = run_rng.fork("env");
  Rng act_rng = run_rng.fork("agent-act");
  DetectionState det(cfg.h, cfg.params.delta);
  RunResult out;
  out.rows.reserve(static_cast<std::size_t>(cfg.episodes));

  for (int ep = 0; ep < cfg.episodes; ++ep) {
    opp.begin_episode(ep);
    ToMoP1Choice choice;
    if (cfg.agent == AgentKind::ToMoP1) choice = first.select();
    else choice.pi = zero.select();
    const TabularPolicy& mine = own[choice.pi];
    ActMemory mem;
    const auto outcome = play_episode(
        cfg.spec, [&](const GameState& s) { return act(mine, cfg.spec, s, act_rng, mem); },
        [&](const GameState& s) { return opp.act(cfg.spec, s); }, env);
    opp.end_episode(outcome);

    EpisodeRow row;
    row.run = run;
    row.episode = ep;
    row.r_self = outcome.r_self;
    row.result = outcome.result;
    row.pi = static_cast<int>(choice.pi);
    row.opponent_strategy = opp.active_label();
    if (cfg.agent == AgentKind::ToMoP1) {
      first.observe(choice, outcome);
      row.c1 = first.confidence().c1;
      row.flag = first.confidence().flag;
      row.upsilon = first.upsilon();
      row.jhat = static_cast<int>(choice.jhat);
    } else {
      zero.observe(choice.pi, outcome.r_self);
    }
    if (cfg.detect) {
      row.detected = detect_new_strategy(det, outcome);
      row.theta = det.theta;
    }
    out.rows.push_back(std::move(row));

    if (cfg.detect && det.triggered) {
      const TabularPolicy pinned = opp.policy();
      Rng learn_rng = run_rng.fork("learn", static_cast<std::uint64_t>(ep));
      auto learned = learn_new_response(cfg.spec, pinned, cfg.learning, cfg.params.delta, learn_rng);
      for (const auto& t : learned.trace) out.learning.push_back({run, ep, t});
      auto j_est = estimate_opponent_policy(cfg.spec, learned.observations, "est-" + std::to_string(known.size()));
      Rng regen_rng = run_rng.fork("regen", static_cast<std::uint64_t>(ep));
      ctx = regenerate_models(ctx, own, known, std::move(learned.policy), std::move(j_est), cfg.spec,
                              cfg.regen_episodes, regen_rng);
      zero = ToMoP0Agent(ctx.perf_self, floor);
      if (cfg.agent == AgentKind::ToMoP1) first = ToMoP1Agent(ctx, cfg.params);
      det.clear();
    }
  }
  return out;
}

/// Run every configured run, in parallel when allowed; results are ordered by run.
inline std::vector<RunResult> run_all(const ExperimentConfig& cfg, const Store& store) {
  std::vector<RunResult> results(static_cast<std::size_t>(cfg.runs));
  unsigned workers = cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(cfg.runs)));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto work = [&] {
    for (int r = next++; r < cfg.runs; r = next++) {
      try {
        results[static_cast<std::size_t>(r)] = run_single(cfg, store, r);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return results;
}

// -- CSV ------------------------------------------------------------------------

inline constexpr const char* kEpisodeHeader =
    "agent,opponent,run,episode,r_self,result,c1,flag,upsilon,theta,jhat,pi,opponent_strategy,detected";

namespace detail {
inline std::string fmt_field(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}
}  // namespace detail

inline void write_episode_csv(std::ostream& out, const ExperimentConfig& cfg, const RunResult& res) {
  out << kEpisodeHeader << '\n';
  const char* agent = to_string(cfg.agent);
  const char* opp = to_string(cfg.opponent.kind);
  for (const auto& r : res.rows) {
    out << agent << ',' << opp << ',' << r.run << ',' << r.episode << ',' << detail::fmt_field(r.r_self) << ','
        << to_string(r.result) << ',' << detail::fmt_field(r.c1) << ',' << (r.flag < 0 ? "" : std::to_string(r.flag))
        << ',' << detail::fmt_field(r.upsilon) << ',' << detail::fmt_field(r.theta) << ','
        << (r.jhat < 0 ? "" : std::to_string(r.jhat)) << ',' << r.pi << ',' << r.opponent_strategy << ','
        << (r.detected ? 1 : 0) << '\n';
  }
}

inline void write_learning_csv(std::ostream& out, const RunResult& res) {
  out << "run,trigger_episode,learn_episode,window_win_rate,known_pairs\n";
  for (const auto& l : res.learning)
    out << l.run << ',' << l.episode << ',' << l.trace.episode << ',' << detail::fmt_field(l.trace.window_win_rate)
        << ',' << l.trace.known_pairs << '\n';
}

struct SummaryCell {
  std::string agent;
  std::string opponent;
  int runs = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

/// Mean and sample standard deviation of per-run win rates.
inline SummaryCell summarize_rates(std::string agent, std::string opponent, const std::vector<double>& rates) {
  SummaryCell c{std::move(agent), std::move(opponent), static_cast<int>(rates.size()), 0.0, 0.0};
  if (rates.empty()) return c;
  for (double r : rates) c.mean += r;
  c.mean /= static_cast<double>(rates.size());
  if (rates.size() > 1) {
    double ss = 0.0;
    for (double r : rates) ss += (r - c.mean) * (r - c.mean);
    c.stddev = std::sqrt(ss / static_cast<double>(rates.size() - 1));
  }
  return c;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryCell>& cells) {
  out << "agent,opponent,runs,mean_win_rate,std_win_rate\n";
  for (const auto& c : cells)
    out << c.agent << ',' << c.opponent << ',' << c.runs << ',' << detail::fmt_field(c.mean) << ','
        << detail::fmt_field(c.stddev) << '\n';
}

inline double win_fraction(const std::vector<EpisodeRow>& rows, std::size_t from = 0) {
  if (from >= rows.size()) return 0.0;
  std::size_t wins = 0;
  for (std::size_t i = from; i < rows.size(); ++i) wins += rows[i].result == Result::Win;
  return static_cast<double>(wins) / static_cast<double>(rows.size() - from);
}

inline std::filesystem::path run_file(const std::filesystem::path& dir, int run) {
  char name[32];
  std::snprintf(name, sizeof name, "run_%04d.csv", run);
  return dir / name;
}

/// Write one CSV per run plus summary.csv (and learning.csv when learning ran).
inline SummaryCell write_outputs(const ExperimentConfig& cfg, const std::vector<RunResult>& results) {
  const std::filesystem::path dir = cfg.output;
  std::filesystem::create_directories(dir);
  std::vector<double> rates;
  bool any_learning = false;
  for (std::size_t r = 0; r < results.size(); ++r) {
    std::ofstream f(run_file(dir, static_cast<int>(r)), std::ios::binary);
    if (!f) throw Error("cannot write to output directory '" + dir.string() + "'");
    write_episode_csv(f, cfg, results[r]);
    rates.push_back(win_fraction(results[r].rows));
    any_learning |= !results[r].learning.empty();
  }
  if (any_learning) {
    std::ofstream f(dir / "learning.csv", std::ios::binary);
    bool first = true;
    for (const auto& res : results) {
      std::ostringstream ss;
      write_learning_csv(ss, res);
      std::string text = ss.str();
      if (!first) text = text.substr(text.find('\n') + 1);
      f << text;
      first = false;
    }
  }
  auto cell = summarize_rates(to_string(cfg.agent), to_string(cfg.opponent.kind), rates);
  std::ofstream s(dir / "summary.csv", std::ios::binary);
  write_summary_csv(s, {cell});
  return cell;
}

inline SummaryCell run_experiment(const ExperimentConfig& cfg) {
  const Store store = load_store_for(cfg);
  return write_outputs(cfg, run_all(cfg, store));
}

// -- Summaries of existing output -------------------------------------------------

/// Recompute per-cell summaries from every run_*.csv under `dir`.
inline std::vector<SummaryCell> summarize(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("summarize: '" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("run_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  if (files.empty()) throw Error("summarize: no run_*.csv files in '" + dir.string() + "'");
  std::sort(files.begin(), files.end());

  // (agent, opponent) -> run key -> (wins, episodes)
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::pair<long, long>>> cells;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
    const auto header = detail::split(line, ',');
    auto col = [&](const char* name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw Error(path.string() + ": missing column '" + name + "'");
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_agent = col("agent"), c_opp = col("opponent"), c_run = col("run"), c_result = col("result");
    const std::size_t width = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
    int rowno = 1;
    while (std::getline(in, line)) {
      ++rowno;
      if (line.empty()) continue;
      std::vector<std::string> f;
      std::string field;
      std::istringstream ls(line);
      while (std::getline(ls, field, ',')) f.push_back(field);
      if (!line.empty() && line.back() == ',') f.emplace_back();
      if (f.size() != width) throw Error(path.string() + " row " + std::to_string(rowno) + ": expected " +
                                         std::to_string(width) + " fields, got " + std::to_string(f.size()));
      const auto& res = f[c_result];
      if (res != "win" && res != "lose" && res != "draw")
        throw Error(path.string() + " row " + std::to_string(rowno) + ": bad result '" + res + "'");
      auto& tally = cells[{f[c_agent], f[c_opp]}][path.filename().string() + "#" + f[c_run]];
      tally.first += res == "win";
      tally.second += 1;
    }
  }
  std::vector<SummaryCell> out;
  for (const auto& [key, runs] : cells) {
    std::vector<double> rates;
    for (const auto& [_, t] : runs) rates.push_back(static_cast<double>(t.first) / static_cast<double>(t.second));
    out.push_back(summarize_rates(key.first, key.second, rates));
  }
  return out;
}

// -- Parameter sweeps ---------------------------------------------------------------

struct Adjustment {
  int changes = 0;
  int latency = 0;
};

/// Count of changes in the selected policy inside [begin, end) before the
/// rolling win rate over `window` episodes reaches delta and stays there until
/// `end`. The latency is that recovery offset, or the segment length.
inline Adjustment adjustment_count(const std::vector<EpisodeRow>& rows, std::size_t begin, std::size_t end,
                                   double delta, int window = 50) {
  end = std::min(end, rows.size());
  if (begin >= end) return {};
  const std::size_t n = end - begin;
  std::vector<double> rolling(n);
  int wins = 0;
  for (std::size_t i = 0; i < n; ++i) {
    wins += rows[begin + i].result == Result::Win;
    if (i >= static_cast<std::size_t>(window)) wins -= rows[begin + i - window].result == Result::Win;
    const auto len = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    rolling[i] = static_cast<double>(wins) / static_cast<double>(len);
  }
  // Last stretch where the rolling rate stays >= delta.
  std::size_t sustained = n;
  while (sustained > 0 && rolling[sustained - 1] >= delta) --sustained;
  Adjustment a;
  a.latency = static_cast<int>(sustained);
  for (std::size_t i = 1; i < sustained && i < n; ++i)
    a.changes += rows[begin + i].pi != rows[begin + i - 1].pi;
  return a;
}

struct SweepRow {
  std::string param;
  double value = 0.0;
  int runs = 0;
  double mean_changes = 0.0;
  double std_changes = 0.0;
  double mean_latency = 0.0;
};

/// Run `cfg` once per value of `param` and report adjustment statistics. The
/// l study plays ToMoP1 against a ToMoP0 opponent; the delta and h studies play
/// against the periodic switcher and average over its stationary segments.
inline std::vector<SweepRow> sweep(ExperimentConfig cfg, const std::string& param, const std::vector<double>& values) {
  if (values.empty()) throw Error("sweep: no values given");
  if (param != "l" && param != "delta" && param != "h") throw Error("sweep: parameter '" + param + "' is not sweepable");
  cfg.agent = AgentKind::ToMoP1;
  cfg.opponent.kind = param == "l" ? OpponentKind::ToMoP0 : OpponentKind::NonStationary;
  const Store store = load_store_for(cfg);
  const double target = cfg.params.delta;
  std::vector<SweepRow> out;
  for (double v : values) {
    ExperimentConfig c = cfg;
    if (param == "l") c.params.l = static_cast<int>(std::lround(v));
    else if (param == "delta") c.params.delta = v;
    else c.h = static_cast<int>(std::lround(v));
    c.validate();
    const auto results = run_all(c, store);
    std::vector<double> changes, latencies;
    for (const auto& res : results) {
      const std::size_t seg = c.opponent.kind == OpponentKind::NonStationary
                                  ? static_cast<std::size_t>(c.opponent.period)
                                  : res.rows.size();
      double ch = 0.0, lat = 0.0;
      int segments = 0;
      for (std::size_t b = 0; b < res.rows.size(); b += seg, ++segments) {
        const auto a = adjustment_count(res.rows, b, b + seg, target);
        ch += a.changes;
        lat += a.latency;
      }
      changes.push_back(ch / segments);
      latencies.push_back(lat / segments);
    }
    const auto cell = summarize_rates("", "", changes);
    double mean_lat = 0.0;
    for (double l : latencies) mean_lat += l;
    out.push_back({param, v, c.runs, cell.mean, cell.stddev, mean_lat / static_cast<double>(latencies.size())});
  }
  return out;
}

inline bool non_increasing(const std::vector<SweepRow>& rows, double slack = 0.0) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].mean_changes > rows[i - 1].mean_changes + slack) return false;
  return true;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param,value,runs,mean_adjustments,std_adjustments,mean_latency\n";
  for (const auto& r : rows)
    out << r.param << ',' << detail::fmt_field(r.value) << ',' << r.runs << ',' << detail::fmt_field(r.mean_changes)
        << ',' << detail::fmt_field(r.std_changes) << ',' << detail::fmt_field(r.mean_latency) << '\n';
}

}  // namespace btom

#endif  // BTOM_HARNESS_HPP
