// Acceptance suite. `--setup` trains the policy stores into the work directory;
// `--criterion N` checks one criterion; with no criterion every one runs.
// Each check prints "criterion N: PASS|FAIL <details>".
#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "btom/harness.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace btom;

namespace {

fs::path g_work;

struct Verdict {
  bool pass = true;
  std::string details;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!details.empty()) details += "; ";
    details += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path store_dir() { return g_work / "store"; }

ExperimentConfig config(GameId game, AgentKind agent, OpponentKind opp, int runs, int episodes) {
  ExperimentConfig cfg;
  cfg.spec = default_spec(game);
  cfg.agent = agent;
  cfg.opponent.kind = opp;
  cfg.runs = runs;
  cfg.episodes = episodes;
  cfg.seed = 11;
  cfg.threads = 0;
  cfg.params.belief_floor = default_belief_floor(game);
  cfg.store = store_dir().string();
  cfg.output = (g_work / "out").string();
  cfg.validate();
  return cfg;
}

std::map<GameId, Store> g_stores;

const Store& store(GameId game) {
  auto it = g_stores.find(game);
  if (it == g_stores.end()) it = g_stores.emplace(game, load_store(store_path(store_dir(), game))).first;
  return it->second;
}

std::vector<RunResult> run(const ExperimentConfig& cfg) { return run_all(cfg, store(cfg.spec.id)); }

double mean_rate(const std::vector<RunResult>& rs, std::size_t from = 0) {
  double s = 0.0;
  for (const auto& r : rs) s += win_fraction(r.rows, from);
  return s / static_cast<double>(rs.size());
}

// Trailing win rate over the last `window` episodes ending at t (fewer at the start).
std::vector<double> rolling(const std::vector<EpisodeRow>& rows, int window) {
  std::vector<double> out(rows.size());
  int wins = 0;
  for (std::size_t t = 0; t < rows.size(); ++t) {
    wins += rows[t].result == Result::Win;
    if (t >= static_cast<std::size_t>(window)) wins -= rows[t - window].result == Result::Win;
    out[t] = static_cast<double>(wins) / static_cast<double>(std::min<std::size_t>(t + 1, window));
  }
  return out;
}

const char* game_name(GameId g) { return to_string(g); }

// -- 1 ---------------------------------------------------------------------------

Verdict criterion1() {
  Verdict v;
  const int runs = 200, episodes = 50;
  for (auto game : {GameId::RPS, GameId::Soccer, GameId::ThievesHunters}) {
    const auto& st = store(game);
    const auto spec = st.spec;
    const double floor = default_belief_floor(game);
    int worst_hits = runs;
    for (std::size_t j = 0; j < st.opponents.size(); ++j) {
      int hits = 0;
      for (int r = 0; r < runs; ++r) {
        Rng rng = Rng(1000 + r).fork("belief", j);
        Rng act_rng = rng.fork("act");
        ToMoP0Agent agent(st.perf, floor);
        bool reached = false;
        for (int e = 0; e < episodes && !reached; ++e) {
          const auto pi = agent.select();
          const auto out = play_policies(spec, st.responses[pi], st.opponents[j], act_rng);
          agent.observe(pi, out.r_self);
          reached = agent.belief()[j] > 0.95;
        }
        hits += reached;
      }
      worst_hits = std::min(worst_hits, hits);
    }
    v.check(worst_hits >= 198, std::string(game_name(game)) + " worst strategy " + std::to_string(worst_hits) + "/" +
                                   std::to_string(runs));
  }
  return v;
}

// -- 2 ---------------------------------------------------------------------------

Verdict criterion2() {
  Verdict v;
  const auto rs = run(config(GameId::RPS, AgentKind::ToMoP0, OpponentKind::ToMoP0, 100, 1000));
  const double m = mean_rate(rs);
  v.check(std::abs(m - 0.5) <= 0.05, "rps tomop0 vs tomop0 " + fmt("%.4f", m));
  return v;
}

// -- 3 ---------------------------------------------------------------------------

Verdict criterion3() {
  Verdict v;
  for (auto game : {GameId::RPS, GameId::Soccer}) {
    const auto rs = run(config(game, AgentKind::ToMoP1, OpponentKind::ToMoP0, 100, 1000));
    const double m = mean_rate(rs, 500);
    v.check(m >= 0.9, std::string(game_name(game)) + " last-500 " + fmt("%.4f", m));
  }
  return v;
}

// -- 4 ---------------------------------------------------------------------------

// Episodes after switch s until the trailing 50-episode rate is back at 0.9
// (0 when it never drops), or -1 when it does not recover before the next switch.
int recovery(const std::vector<double>& rate, std::size_t s, std::size_t end) {
  std::size_t t = s;
  while (t < end && rate[t] >= 0.9) ++t;
  if (t == end) return 0;
  while (t < end && rate[t] < 0.9) ++t;
  return t == end ? -1 : static_cast<int>(t - s);
}

Verdict criterion4() {
  Verdict v;
  for (auto game : {GameId::RPS, GameId::Soccer}) {
    std::map<AgentKind, double> overall;
    for (auto agent : {AgentKind::ToMoP0, AgentKind::ToMoP1}) {
      const auto cfg = config(game, agent, OpponentKind::NonStationary, 100, 1000);
      const auto rs = run(cfg);
      const int bound = 2 * cfg.params.l;
      int late = 0, switches = 0, worst = 0;
      for (const auto& r : rs) {
        const auto rate = rolling(r.rows, 50);
        for (std::size_t s = cfg.opponent.period; s < r.rows.size(); s += cfg.opponent.period) {
          const int lat = recovery(rate, s, std::min(r.rows.size(), s + cfg.opponent.period));
          ++switches;
          if (lat < 0 || lat > bound) ++late;
          worst = std::max(worst, lat < 0 ? 1 << 20 : lat);
        }
      }
      overall[agent] = mean_rate(rs);
      v.check(late == 0, std::string(game_name(game)) + " " + to_string(agent) + " late recoveries " +
                             std::to_string(late) + "/" + std::to_string(switches) +
                             (worst >= (1 << 20) ? " (some never)" : " worst " + std::to_string(worst)));
    }
    v.check(overall[AgentKind::ToMoP1] >= 0.95,
            std::string(game_name(game)) + " tomop1 overall " + fmt("%.4f", overall[AgentKind::ToMoP1]));
    v.check(overall[AgentKind::ToMoP1] >= overall[AgentKind::ToMoP0] - 0.03,
            std::string(game_name(game)) + " tomop0 overall " + fmt("%.4f", overall[AgentKind::ToMoP0]));
  }
  return v;
}

// -- 5 ---------------------------------------------------------------------------

Verdict criterion5() {
  Verdict v;
  for (auto game : {GameId::RPS, GameId::Soccer}) {
    const double one = mean_rate(run(config(game, AgentKind::ToMoP1, OpponentKind::Mixed, 100, 1000)));
    const double zero = mean_rate(run(config(game, AgentKind::ToMoP0, OpponentKind::Mixed, 100, 1000)));
    v.check(one >= 0.9, std::string(game_name(game)) + " tomop1 " + fmt("%.4f", one));
    v.check(zero <= 0.7, std::string(game_name(game)) + " tomop0 " + fmt("%.4f", zero));
  }
  return v;
}

// -- 6 ---------------------------------------------------------------------------

// The held-out strategy plays 200-399, a known one 400-599, the held-out one
// again 600-799.
Verdict criterion6() {
  Verdict v;
  auto cfg = config(GameId::Soccer, AgentKind::ToMoP0, OpponentKind::Novel, 20, 800);
  cfg.detect = true;
  cfg.opponent.novel_revisit = true;
  const auto rs = run(cfg);
  const int runs = static_cast<int>(rs.size());
  int prompt = 0, recovered = 0, quiet = 0;
  for (const auto& r : rs) {
    int first = -1;
    bool again = false;
    for (const auto& row : r.rows) {
      if (row.detected && row.episode >= 200 && first < 0) first = row.episode;
      if (row.detected && row.episode >= 600) again = true;
    }
    prompt += first >= 0 && first - 200 <= 2 * cfg.h;
    if (first >= 0) {
      const auto rate = rolling(r.rows, 50);
      bool ok = false;
      for (int t = first + 50; t < 400; ++t) ok = ok || rate[static_cast<std::size_t>(t)] >= cfg.params.delta;
      recovered += ok;
    }
    quiet += !again;
  }
  v.check(prompt == runs, "detected within 2h " + std::to_string(prompt) + "/" + std::to_string(runs));
  v.check(recovered == runs, "rolling rate >= delta after learning " + std::to_string(recovered) + "/" +
                                 std::to_string(runs));
  v.check(quiet >= 0.95 * runs, "no re-trigger on revisit " + std::to_string(quiet) + "/" + std::to_string(runs));
  return v;
}

// -- 7 ---------------------------------------------------------------------------

Verdict criterion7() {
  Verdict v;
  const auto& table = oracle::confidence_table();
  int mismatches = 0;
  bool rising = false, falling = false, below = false;
  for (const auto& c : table) {
    Confidence conf{c.c1, c.flag, c.upsilon_prev};
    update_confidence(conf, c.upsilon, c.lambda, c.delta);
    mismatches += std::abs(conf.c1 - c.expected) > 1e-12;
    rising |= c.upsilon >= c.upsilon_prev;
    falling |= c.upsilon < c.upsilon_prev && c.upsilon > c.delta;
    below |= c.upsilon < c.upsilon_prev && c.upsilon <= c.delta;
  }
  v.check(table.size() >= 20 && rising && falling && below,
          std::to_string(table.size()) + " confidence cases covering all branches");
  v.check(mismatches == 0, "confidence mismatches " + std::to_string(mismatches));

  int flag_bad = 0;
  bool up = false, down = false;
  for (int f : {0, 1})
    for (double u : {0.0, 0.35, 0.7, 0.70001, 0.95}) {
      Confidence c{0.5, f, 1.0};
      update_flag(c, u, 0.7);
      flag_bad += c.flag != oracle::next_flag(f, u, 0.7);
      up |= f == 0 && c.flag == 1;
      down |= f == 1 && c.flag == 0;
    }
  v.check(flag_bad == 0 && up && down, "flag cases, both flips");

  Rng rng(17);
  int integrate_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<double> w(n);
    for (auto& x : w) x = rng.uniform() + 1e-3;
    const auto b0 = normalize(w, 0.0);
    const std::size_t jhat = rng.index(n);
    const double c1 = rng.uniform();
    const auto merged = integrate(b0, jhat, c1);
    for (std::size_t j = 0; j < n; ++j)
      integrate_bad += std::abs(merged[j] - ((1.0 - c1) * b0[j] + (j == jhat ? c1 : 0.0))) > 1e-15;
  }
  v.check(integrate_bad == 0, "integrate mismatches " + std::to_string(integrate_bad));

  Confidence c{0.3, 1, 1.0};
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double lambda = 0.01 + 0.98 * rng.uniform();
    const double delta = 0.01 + 0.98 * rng.uniform();
    const double u = rng.bernoulli(0.1) ? (rng.bernoulli(0.5) ? 1.0 : 0.0) : rng.uniform();
    update_flag(c, u, delta);
    update_confidence(c, u, lambda, delta);
    lo = std::min(lo, c.c1);
    hi = std::max(hi, c.c1);
  }
  v.check(lo >= 0.0 && hi <= 1.0, "fuzz c1 range [" + fmt("%.3g", lo) + ", " + fmt("%.3g", hi) + "]");
  return v;
}

// -- 8 ---------------------------------------------------------------------------

Verdict criterion8() {
  Verdict v;
  Rng rng(2718);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.index(6), cols = 1 + rng.index(6);
    PerfMatrix m(rows, cols);
    std::vector<std::vector<oracle::Normal>> models(rows, std::vector<oracle::Normal>(cols));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        models[r][c] = {rng.uniform() * 2.0 - 1.0, 0.05 + rng.uniform()};
        m.set(r, c, {models[r][c].mean, models[r][c].sd});
      }
    std::vector<double> w(rows);
    for (auto& x : w) x = rng.uniform() + 1e-3;
    const auto belief = normalize(w, 0.0);
    const std::vector<double> b(belief.weights().begin(), belief.weights().end());
    const double u_bar = oracle::best_expected(b, models);
    worst = std::max(worst, std::abs(u_bar - expected_best(b, m)));
    for (std::size_t c = 0; c < cols; ++c)
      worst = std::max(worst, std::abs(ei_mass(b, m, c, u_bar) - oracle::improvement_mass(b, models, c, u_bar)));
  }
  v.check(worst <= 1e-6, "1000 matrices, max deviation " + fmt("%.3g", worst));
  return v;
}

// -- 9 ---------------------------------------------------------------------------

// Random experience fed to the planner and to a dense model in which unknown
// pairs lead to an absorbing state worth the optimistic value.
double rmax_error(Rng& rng) {
  const int S = 2 + static_cast<int>(rng.index(19));
  const int A = 1 + static_cast<int>(rng.index(5));
  RmaxParams p;
  p.n = 1 + static_cast<int>(rng.index(5));
  p.gamma = 0.5 + 0.45 * rng.uniform();
  p.tol = 1e-9;
  RmaxModel model(A, p);
  std::vector<std::vector<int>> visits(S, std::vector<int>(A, 0));
  std::vector<std::vector<double>> reward_sum(S, std::vector<double>(A, 0.0));
  std::vector<std::vector<std::vector<int>>> counts(S, std::vector<std::vector<int>>(A, std::vector<int>(S + 1, 0)));
  const int recorded = 1 + static_cast<int>(rng.index(S));
  for (int i = 0; i < S * A * 4; ++i) {
    const int s = static_cast<int>(rng.index(recorded));
    const int a = static_cast<int>(rng.index(A));
    const bool exit = rng.bernoulli(0.25);
    const int t = exit ? S : static_cast<int>(rng.index(S));
    const double r = exit ? rng.uniform() * 2.0 - 1.0 : 0.0;
    model.update(s, a, exit ? RmaxModel::kTerminal : static_cast<std::size_t>(t), r);
    ++visits[s][a];
    reward_sum[s][a] += r;
    ++counts[s][a][t];
  }
  model.plan();

  oracle::DenseMdp mdp;
  mdp.states = S + 1;
  mdp.actions = A;
  mdp.next.assign(S + 1, std::vector<std::vector<double>>(A, std::vector<double>(S + 1, 0.0)));
  mdp.exit_prob.assign(S + 1, std::vector<double>(A, 0.0));
  mdp.reward.assign(S + 1, std::vector<double>(A, 0.0));
  for (int s = 0; s <= S; ++s)
    for (int a = 0; a < A; ++a) {
      if (s == S || visits[s][a] < p.n) {
        mdp.reward[s][a] = p.u_opt;
        mdp.next[s][a][S] = 1.0;
        continue;
      }
      mdp.reward[s][a] = reward_sum[s][a] / visits[s][a];
      mdp.exit_prob[s][a] = static_cast<double>(counts[s][a][S]) / visits[s][a];
      for (int t = 0; t < S; ++t) {
        bool seen = false;
        for (int b = 0; b < A; ++b) seen |= visits[t][b] > 0;
        mdp.next[s][a][seen ? t : S] += static_cast<double>(counts[s][a][t]) / visits[s][a];
      }
    }
  const auto q = oracle::value_iteration(mdp, p.gamma);
  double worst = 0.0;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) worst = std::max(worst, std::abs(model.q(s, a) - q[s][a]));
  return worst;
}

Verdict criterion9() {
  Verdict v;
  Rng rng(1618);
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) worst = std::max(worst, rmax_error(rng));
  v.check(worst <= 1e-5, "500 MDPs, max deviation " + fmt("%.3g", worst));
  return v;
}

// -- 10 --------------------------------------------------------------------------

std::string series(const std::vector<SweepRow>& rows, bool latency) {
  std::string s;
  for (const auto& r : rows)
    s += (s.empty() ? "" : " ") + fmt("%g", r.value) + ":" + fmt("%.2f", latency ? r.mean_latency : r.mean_changes);
  return s;
}

Verdict criterion10() {
  Verdict v;
  // Noise allowance for "non-increasing" and "flat", relative to the largest value.
  const double slack = 0.05;
  {
    const auto cfg = config(GameId::RPS, AgentKind::ToMoP1, OpponentKind::ToMoP0, 30, 1000);
    const auto rows = sweep(cfg, "l", {5, 15, 25, 35, 45});
    double top = 0.0;
    for (const auto& r : rows) top = std::max(top, r.mean_changes);
    const double tol = slack * std::max(top, 1.0);
    v.check(non_increasing(rows, tol), "l adjustments " + series(rows, false));
    v.check(std::abs(rows[4].mean_changes - rows[3].mean_changes) <= tol, "flat past l=35");
  }
  {
    const auto cfg = config(GameId::RPS, AgentKind::ToMoP1, OpponentKind::NonStationary, 30, 1000);
    const auto rows = sweep(cfg, "delta", {0.5, 0.6, 0.7, 0.8, 0.9});
    double top = 0.0;
    for (const auto& r : rows) top = std::max(top, r.mean_latency);
    const double tol = slack * std::max(top, 1.0);
    bool down = true;
    for (std::size_t i = 1; i < rows.size(); ++i) down = down && rows[i].mean_latency <= rows[i - 1].mean_latency + tol;
    v.check(down, "delta latencies " + series(rows, true));
    double spread = 0.0;
    for (std::size_t i = 2; i < rows.size(); ++i)
      spread = std::max(spread, std::abs(rows[i].mean_latency - rows[2].mean_latency));
    v.check(spread <= tol, "flat past delta=0.7");
  }
  return v;
}

// -- 11 --------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict criterion11() {
  Verdict v;
  std::vector<ExperimentConfig> cases;
  cases.push_back(config(GameId::RPS, AgentKind::ToMoP1, OpponentKind::NonStationary, 8, 600));
  cases.push_back(config(GameId::Soccer, AgentKind::ToMoP1, OpponentKind::Mixed, 4, 400));
  auto learning = config(GameId::Soccer, AgentKind::ToMoP0, OpponentKind::Novel, 2, 300);
  learning.detect = true;
  cases.push_back(learning);
  cases.push_back(config(GameId::ThievesHunters, AgentKind::ToMoP0, OpponentKind::ToMoP0, 4, 300));
  int index = 0;
  for (auto cfg : cases) {
    std::vector<std::map<std::string, std::string>> outputs;
    for (int rep = 0; rep < 2; ++rep) {
      cfg.output = (g_work / ("det_" + std::to_string(index) + "_" + std::to_string(rep))).string();
      fs::remove_all(cfg.output);
      cfg.threads = rep == 0 ? 1 : 3;
      write_outputs(cfg, run(cfg));
      std::map<std::string, std::string> files;
      for (const auto& e : fs::directory_iterator(cfg.output)) files[e.path().filename().string()] = slurp(e.path());
      outputs.push_back(std::move(files));
    }
    v.check(outputs[0] == outputs[1] && !outputs[0].empty(),
            std::string(game_name(cfg.spec.id)) + "/" + to_string(cfg.opponent.kind) + " " +
                std::to_string(outputs[0].size()) + " files identical");
    ++index;
  }
  return v;
}

int setup() {
  for (auto game : {GameId::RPS, GameId::Soccer, GameId::ThievesHunters}) {
    const auto path = store_path(store_dir(), game);
    save_store(path, train(default_spec(game), 7));
    std::cout << "trained " << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  bool do_setup = false;
  int only = 0;
  std::string work = "acceptance_work";
  app.add_flag("--setup", do_setup, "Train the stores used by the checks");
  app.add_option("--criterion", only, "Run a single criterion (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--work", work, "Work directory")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  g_work = work;

  try {
    if (do_setup) return setup();
    const std::vector<std::function<Verdict()>> checks = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8,
                                                          criterion9, criterion10, criterion11};
    bool all = true;
    for (int n = 1; n <= 11; ++n) {
      if (only && n != only) continue;
      const auto v = checks[static_cast<std::size_t>(n - 1)]();
      std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.details << std::endl;
      all = all && v.pass;
    }
    return all ? 0 : 1;
  } catch (const std::exception& e) {
    std::cout << "criterion " << (only ? std::to_string(only) : std::string("?")) << ": FAIL error " << e.what()
              << std::endl;
    return 1;
  }
}
