#ifndef BTOM_DETECT_LEARN_HPP
#define BTOM_DETECT_LEARN_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <cstdint>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "btom/bpr.hpp"
#include "btom/core.hpp"
#include "btom/games.hpp"
#include "btom/policies.hpp"

namespace btom {

// -- Detection ------------------------------------------------------------------

struct DetectionState {
  int h = 10;
  double delta = 0.7;
  std::deque<bool> memory;
  bool triggered = false;
  double theta = std::numeric_limits<double>::quiet_NaN();

  DetectionState() = default;
  DetectionState(int h_, double delta_) : h(h_), delta(delta_) {
    if (h < 1) throw Error("detection: h must be >= 1");
  }

  void clear() {
    memory.clear();
    triggered = false;
    theta = std::numeric_limits<double>::quiet_NaN();
  }
};

/// Push the episode's win indicator; true once the last h episodes have a win
/// rate strictly below delta.
inline bool detect_new_strategy(DetectionState& det, const EpisodeOutcome& outcome) {
  det.memory.push_back(outcome.won());
  while (det.memory.size() > static_cast<std::size_t>(det.h)) det.memory.pop_front();
  if (det.memory.size() < static_cast<std::size_t>(det.h)) {
    det.theta = std::numeric_limits<double>::quiet_NaN();
    det.triggered = false;
    return false;
  }
  det.theta = static_cast<double>(std::count(det.memory.begin(), det.memory.end(), true)) / det.h;
  det.triggered = det.theta < det.delta;
  return det.triggered;
}

/// min over policies of the best win rate that policy reaches against any
/// strategy. `theta[j][pi]` is the win rate of policy pi against strategy j.
inline double delta_upper_bound(const std::vector<std::vector<double>>& theta) {
  if (theta.empty() || theta.front().empty()) throw Error("delta_upper_bound: empty matrix");
  const std::size_t cols = theta.front().size();
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < cols; ++p) {
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& row : theta) {
      if (row.size() != cols) throw Error("delta_upper_bound: ragged matrix");
      hi = std::max(hi, row[p]);
    }
    lo = std::min(lo, hi);
  }
  return lo;
}

// -- R-max ----------------------------------------------------------------------

struct RmaxParams {
  int n = 5;
  double gamma = 0.9;
  double epsilon = 0.1;
  double u_opt = 1.0;
  int cap = 50000;
  int window = 100;
  double tol = 1e-6;
  int max_iters = 100000;

  void validate() const {
    if (n < 1) throw Error("rmax: n must be >= 1");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("rmax: gamma must be in [0,1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error("rmax: epsilon must be in [0,1]");
    if (cap < 1) throw Error("rmax: cap must be >= 1");
    if (window < 1) throw Error("rmax: window must be >= 1");
    if (!(tol > 0.0)) throw Error("rmax: tol must be positive");
    if (max_iters < 1) throw Error("rmax: max_iters must be >= 1");
  }
};

/// Sparse R-max model over visited states. Unknown pairs keep the optimistic
/// value u_opt / (1 - gamma).
class RmaxModel {
 public:
  static constexpr std::size_t kTerminal = std::numeric_limits<std::size_t>::max();

  RmaxModel(int num_actions, const RmaxParams& params) : num_actions_(num_actions), params_(params) {
    params_.validate();
    if (num_actions < 1) throw Error("rmax: need at least one action");
  }

  double optimistic() const { return params_.u_opt / (1.0 - params_.gamma); }
  int num_actions() const { return num_actions_; }
  std::size_t known_pairs() const { return known_pairs_; }

  /// Returns true when this transition made (s, a) known.
  bool update(std::size_t s, int a, std::size_t s_next, double r) {
    if (a < 0 || a >= num_actions_) throw Error("rmax: action out of range");
    auto& pair = records_[record(s)].pairs[static_cast<std::size_t>(a)];
    auto it = std::find_if(pair.next.begin(), pair.next.end(), [&](const Successor& x) { return x.state == s_next; });
    if (it == pair.next.end()) pair.next.push_back({s_next, 1, kUnresolved});
    else ++it->count;
    pair.reward += r;
    pair.visits += 1;
    if (pair.visits == params_.n) {
      ++known_pairs_;
      return true;
    }
    return false;
  }

  bool known(std::size_t s, int a) const {
    const auto* rec = find(s);
    return rec && rec->pairs[static_cast<std::size_t>(a)].visits >= params_.n;
  }

  /// T-hat row for a known pair: successor -> probability.
  std::map<std::size_t, double> transition(std::size_t s, int a) const {
    std::map<std::size_t, double> out;
    if (!known(s, a)) return out;
    const auto& pair = find(s)->pairs[static_cast<std::size_t>(a)];
    for (const auto& x : pair.next) out[x.state] = static_cast<double>(x.count) / pair.visits;
    return out;
  }

  double reward(std::size_t s, int a) const {
    if (!known(s, a)) return params_.u_opt;
    const auto& pair = find(s)->pairs[static_cast<std::size_t>(a)];
    return pair.reward / pair.visits;
  }

  double q(std::size_t s, int a) const {
    const auto* rec = find(s);
    return rec ? rec->q[static_cast<std::size_t>(a)] : optimistic();
  }

  double value(std::size_t s) const {
    if (s == kTerminal) return 0.0;
    const auto* rec = find(s);
    return rec ? rec->best : optimistic();
  }

  int greedy_action(std::size_t s) const {
    const auto* rec = find(s);
    return rec ? static_cast<int>(argmax_lowest(rec->q)) : 0;
  }

  /// Value iteration on the estimated model, warm-started from the current
  /// values. Returns the number of sweeps.
  int plan() {
    resolve_successors();
    for (int it = 1; it <= params_.max_iters; ++it) {
      double change = 0.0;
      for (auto& rec : records_) {
        for (int a = 0; a < num_actions_; ++a) {
          const auto& pair = rec.pairs[static_cast<std::size_t>(a)];
          if (pair.visits < params_.n) continue;
          double future = 0.0;
          for (const auto& x : pair.next) {
            const double v = x.slot == kTerminalSlot ? 0.0
                             : x.slot == kUnresolved ? optimistic()
                                                     : records_[static_cast<std::size_t>(x.slot)].best;
            future += static_cast<double>(x.count) * v;
          }
          const double v = pair.reward / pair.visits + params_.gamma * future / pair.visits;
          double& slot = rec.q[static_cast<std::size_t>(a)];
          change = std::max(change, std::abs(v - slot));
          slot = v;
        }
        rec.best = *std::max_element(rec.q.begin(), rec.q.end());
      }
      if (change < params_.tol) return it;
    }
    throw Error("rmax: value iteration did not converge");
  }

  /// Dense greedy policy over every state of the game.
  TabularPolicy greedy_policy(std::size_t num_states, std::string id) const {
    TabularPolicy out;
    out.id = std::move(id);
    out.kind = PolicyKind::Greedy;
    out.num_actions = num_actions_;
    out.q.assign(num_states * static_cast<std::size_t>(num_actions_), optimistic());
    for (const auto& rec : records_) {
      if (rec.state >= num_states) continue;
      std::copy(rec.q.begin(), rec.q.end(), out.q.begin() + static_cast<std::ptrdiff_t>(rec.state * num_actions_));
    }
    return out;
  }

 private:
  static constexpr std::int64_t kUnresolved = -1;
  static constexpr std::int64_t kTerminalSlot = -2;

  struct Successor {
    std::size_t state;
    int count;
    std::int64_t slot;
  };
  struct Pair {
    std::vector<Successor> next;
    double reward = 0.0;
    int visits = 0;
  };
  struct Record {
    std::size_t state = 0;
    std::vector<Pair> pairs;
    std::vector<double> q;
    double best = 0.0;
  };

  const Record* find(std::size_t s) const {
    auto it = slot_.find(s);
    return it == slot_.end() ? nullptr : &records_[it->second];
  }

  std::size_t record(std::size_t s) {
    auto it = slot_.find(s);
    if (it != slot_.end()) return it->second;
    Record rec;
    rec.state = s;
    rec.pairs.resize(static_cast<std::size_t>(num_actions_));
    rec.q.assign(static_cast<std::size_t>(num_actions_), optimistic());
    rec.best = optimistic();
    records_.push_back(std::move(rec));
    slot_.emplace(s, records_.size() - 1);
    return records_.size() - 1;
  }

  void resolve_successors() {
    for (auto& rec : records_)
      for (auto& pair : rec.pairs)
        for (auto& x : pair.next) {
          if (x.slot != kUnresolved) continue;
          if (x.state == kTerminal) {
            x.slot = kTerminalSlot;
            continue;
          }
          auto it = slot_.find(x.state);
          if (it != slot_.end()) x.slot = static_cast<std::int64_t>(it->second);
        }
  }

  int num_actions_;
  RmaxParams params_;
  std::vector<Record> records_;
  std::unordered_map<std::size_t, std::size_t> slot_;
  std::size_t known_pairs_ = 0;
};

struct LearnTraceRow {
  int episode = 0;
  double window_win_rate = 0.0;
  std::size_t known_pairs = 0;
};

struct LearnResult {
  TabularPolicy policy;
  int episodes = 0;
  std::vector<std::pair<std::size_t, int>> observations;  // (state, opponent action)
  std::vector<LearnTraceRow> trace;
};

class LearningError : public Error {
 public:
  LearningError(const std::string& what, TabularPolicy best) : Error(what), best_so_far(std::move(best)) {}
  TabularPolicy best_so_far;
};

/// R-max against a fixed opponent until the win rate over the last `window`
/// episodes reaches `target`.
inline LearnResult learn_new_response(const GameSpec& spec, const TabularPolicy& opponent, const RmaxParams& params,
                                      double target, Rng& rng) {
  params.validate();
  RmaxModel model(spec.num_actions(), params);
  Rng env_rng = rng.fork("env");
  Rng explore = rng.fork("explore");
  Rng opp_rng = rng.fork("opponent");
  LearnResult out;
  std::deque<bool> window;
  int wins_in_window = 0;

  for (int ep = 1; ep <= params.cap; ++ep) {
    ActMemory mem;
    GameState state = reset(spec, env_rng);
    bool learned_pair = false;
    while (true) {
      const std::size_t s = state_index(spec, state);
      int a = model.greedy_action(s);
      if (explore.bernoulli(params.epsilon)) a = static_cast<int>(explore.index(static_cast<std::size_t>(model.num_actions())));
      const int b = act(opponent, spec, state, opp_rng, mem);
      out.observations.emplace_back(s, b);
      const auto res = step(spec, state, a, b);
      if (res.terminal) {
        learned_pair |= model.update(s, a, RmaxModel::kTerminal, res.outcome->r_self);
        break;
      }
      learned_pair |= model.update(s, a, state_index(spec, res.next), 0.0);
      state = res.next;
    }
    if (learned_pair) model.plan();

    // Evaluation episodes are greedy and leave the model alone.
    const auto greedy_win = [&] {
      ActMemory eval_mem;
      return play_episode(
                 spec, [&](const GameState& g) { return model.greedy_action(state_index(spec, g)); },
                 [&](const GameState& g) { return act(opponent, spec, g, opp_rng, eval_mem); }, env_rng)
          .won();
    };
    const bool won = greedy_win();
    window.push_back(won);
    wins_in_window += won ? 1 : 0;
    if (window.size() > static_cast<std::size_t>(params.window)) {
      wins_in_window -= window.front() ? 1 : 0;
      window.pop_front();
    }
    const double rate = static_cast<double>(wins_in_window) / static_cast<double>(window.size());
    out.trace.push_back({ep, rate, model.known_pairs()});
    if (window.size() == static_cast<std::size_t>(params.window) && rate >= target) {
      // Confirm on the policy as it stands now.
      int wins = 0;
      for (int i = 0; i < params.window; ++i) wins += greedy_win() ? 1 : 0;
      if (static_cast<double>(wins) / params.window >= target) {
        out.episodes = ep;
        out.policy = model.greedy_policy(spec.num_states(), "rmax-" + opponent.id);
        return out;
      }
      window.clear();
      wins_in_window = 0;
    }
  }
  throw LearningError("rmax: episode cap reached without reaching target win rate",
                      model.greedy_policy(spec.num_states(), "rmax-" + opponent.id));
}

/// Per-state empirical action frequencies; unvisited states stay uniform.
inline TabularPolicy estimate_opponent_policy(const GameSpec& spec,
                                              const std::vector<std::pair<std::size_t, int>>& observations,
                                              std::string id = "estimated") {
  if (observations.empty()) throw Error("estimate_opponent_policy: no observations");
  const int nA = spec.num_actions();
  TabularPolicy out;
  out.id = std::move(id);
  out.kind = PolicyKind::Stochastic;
  out.num_actions = nA;
  for (const auto& [s, a] : observations) {
    if (a < 0 || a >= nA) throw Error("estimate_opponent_policy: action out of range");
    auto& row = out.dist[s];
    if (row.empty()) row.assign(static_cast<std::size_t>(nA), 0.0);
    row[static_cast<std::size_t>(a)] += 1.0;
  }
  for (auto& [s, row] : out.dist) {
    double total = 0.0;
    for (double c : row) total += c;
    for (double& c : row) c /= total;
  }
  return out;
}

/// Append pi_new to `own` and j_est to `opponents`, simulate only the new
/// pairs and return the enlarged context.
inline BprContext regenerate_models(const BprContext& ctx, StrategyLibrary& own, StrategyLibrary& opponents,
                                    TabularPolicy pi_new, TabularPolicy j_est, const GameSpec& spec,
                                    int episodes_per_pair, Rng& rng, double sigma_floor = kDefaultSigmaFloor) {
  if (ctx.perf_self.rows() != opponents.size() || ctx.perf_self.cols() != own.size())
    throw Error("regenerate_models: context does not match libraries");
  if (episodes_per_pair < 2) throw Error("regenerate_models: need at least 2 episodes per pair");
  own.entries.push_back(std::move(pi_new));
  opponents.entries.push_back(std::move(j_est));
  PerfMatrix perf = ctx.perf_self.grown(1, 1);
  const std::size_t nj = opponents.size();
  const std::size_t np = own.size();
  std::vector<double> returns(static_cast<std::size_t>(episodes_per_pair));
  auto fill = [&](std::size_t j, std::size_t p) {
    Rng pair_rng = rng.fork("regen", j * 1000003u + p);
    for (auto& r : returns) r = play_policies(spec, own[p], opponents[j], pair_rng).r_self;
    perf.set(j, p, fit_gaussian(returns, sigma_floor));
  };
  for (std::size_t p = 0; p < np; ++p) fill(nj - 1, p);
  for (std::size_t j = 0; j + 1 < nj; ++j) fill(j, np - 1);
  return make_context(std::move(perf));
}

}  // namespace btom

#endif  // BTOM_DETECT_LEARN_HPP
