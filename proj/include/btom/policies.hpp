#ifndef BTOM_POLICIES_HPP
#define BTOM_POLICIES_HPP

#include <algorithm>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "btom/core.hpp"
#include "btom/games.hpp"

namespace btom {

// -- Policy representation ----------------------------------------------------

enum class PolicyKind { Greedy, Scripted, Stochastic };

enum class RuleFamily {
  RpsConstant,  // params: {action}
  SoccerRoute,  // params: {route}
  ThiefTour,    // params: goal permutation
  ThiefWaitTour,  // params: wait steps, then goal order
};

struct ScriptedRule {
  RuleFamily family = RuleFamily::RpsConstant;
  std::vector<int> params;
};

/// Per-episode scratch state owned by whoever drives a scripted policy.
struct ActMemory {
  int waypoint = 0;
  int last_action = kStay;
  Cell last_pos{-1, -1};
  int best_dist = std::numeric_limits<int>::max();
  int stalled = 0;
};

struct TabularPolicy {
  std::string id;
  PolicyKind kind = PolicyKind::Greedy;
  int num_actions = 0;
  // Greedy: row-major num_states x num_actions.
  std::vector<double> q;
  ScriptedRule rule;
  // Stochastic: action distribution per visited state; other states uniform.
  std::map<std::size_t, std::vector<double>> dist;

  std::size_t num_states() const {
    return num_actions ? q.size() / static_cast<std::size_t>(num_actions) : 0;
  }
  std::span<const double> q_row(std::size_t s) const {
    return std::span<const double>(q).subspan(s * num_actions, num_actions);
  }
};

struct StrategyLibrary {
  GameId game = GameId::RPS;
  std::vector<TabularPolicy> entries;

  std::size_t size() const { return entries.size(); }
  const TabularPolicy& operator[](std::size_t i) const { return entries[i]; }
};

inline std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// -- Scripted rules -----------------------------------------------------------

namespace detail {

inline int step_toward(Cell from, Cell to, bool horizontal_first) {
  const int dx = to.x - from.x;
  const int dy = to.y - from.y;
  const auto horiz = [&] { return dx < 0 ? kLeft : kRight; };
  const auto vert = [&] { return dy < 0 ? kUp : kDown; };
  if (dx == 0 && dy == 0) return kStay;
  if (horizontal_first) return dx != 0 ? horiz() : vert();
  return dy != 0 ? vert() : horiz();
}

/// Path lengths to `to`, avoiding blocked cells and every other goal cell; -1 when unreachable.
inline std::vector<int> distances_to(const GameSpec& spec, Cell to) {
  std::vector<int> dist(static_cast<std::size_t>(spec.num_cells()), -1);
  const auto id = [&](Cell c) { return static_cast<std::size_t>(c.y * spec.width + c.x); };
  std::deque<Cell> frontier{to};
  dist[id(to)] = 0;
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop_front();
    for (int a = 0; a < 4; ++a) {
      const Cell n{c.x + kDx[a], c.y + kDy[a]};
      if (!spec.is_free(n) || dist[id(n)] >= 0) continue;
      if (spec.is_goal_cell(n) && !(n == to)) continue;
      dist[id(n)] = dist[id(c)] + 1;
      frontier.push_back(n);
    }
  }
  return dist;
}

/// First action of a shortest path from `from` to `to`, preferring moves other
/// than `avoid`. Stay when unreachable.
inline int shortest_path_action(const GameSpec& spec, Cell from, Cell to, int avoid = -1) {
  if (from == to) return kStay;
  const auto dist = distances_to(spec, to);
  const auto id = [&](Cell c) { return static_cast<std::size_t>(c.y * spec.width + c.x); };
  if (dist[id(from)] < 0) return kStay;
  int fallback = kStay;
  for (int a = 0; a < 4; ++a) {
    const Cell n{from.x + kDx[a], from.y + kDy[a]};
    if (!spec.is_free(n) || dist[id(n)] != dist[id(from)] - 1) continue;
    if (a != avoid) return a;
    fallback = a;
  }
  if (avoid < 0) return fallback;
  // Only the avoided move is on a shortest path: step sideways instead.
  for (int a = 0; a < 4; ++a) {
    if (a == avoid || (a ^ 1) == avoid) continue;
    const Cell n{from.x + kDx[a], from.y + kDy[a]};
    if (spec.is_free(n) && dist[id(n)] >= 0) return a;
  }
  return fallback;
}

struct Waypoint {
  Cell cell;
  bool horizontal_first = true;
};

/// B's attacking waypoints for each soccer route. The last waypoint is the
/// goal-line cell B shoots from.
inline std::vector<Waypoint> soccer_waypoints(const GameSpec& spec, int route) {
  const int top = 0;
  const int bottom = spec.height - 1;
  const int hi = spec.goal_rows.front();
  const int lo = spec.goal_rows.back();
  const int mid = spec.goal_rows[spec.goal_rows.size() / 2];
  const int far = spec.width - 2;
  const int half = spec.width / 2;
  switch (route) {
    case 0:  // top wing
      return {{{far, top}, false}, {{0, top}, true}, {{0, hi}, false}};
    case 1:  // bottom wing
      return {{{far, bottom}, false}, {{0, bottom}, true}, {{0, lo}, false}};
    case 2:  // straight through the middle
      return {{{0, mid}, false}};
    case 3:  // high diagonal
      return {{{half, hi - 1}, true}, {{0, hi}, false}};
    case 4:  // low diagonal
      return {{{half, lo + 1}, true}, {{0, lo}, false}};
    case 5:  // cut from high to low
      return {{{half, top + 1}, false}, {{1, lo + 1}, true}, {{0, lo}, false}};
    case 6:  // held out: cut from low to high along the back line
      return {{{spec.width - 1, bottom}, false}, {{half, bottom - 1}, true}, {{1, top + 1}, true}, {{0, hi}, false}};
  }
  throw Error("soccer route out of range");
}

inline constexpr int kSoccerLibraryRoutes = 6;
inline constexpr int kSoccerHeldOutRoute = 6;

inline const char* soccer_route_name(int route) {
  static const char* names[] = {"top-wing", "bottom-wing", "middle", "high-diag", "low-diag", "high-to-low",
                                "low-to-high"};
  return names[route];
}

inline int soccer_route_action(const GameSpec& spec, const GameState& s, int route, ActMemory& mem) {
  const Cell me = s.pos_oppo;
  if (s.ball != Owner::Oppo) {
    // The held-out route presses the carrier; the others fall back to their goal mouth.
    if (route == kSoccerHeldOutRoute) return step_toward(me, s.pos_self, true);
    const Cell home{spec.width - 1, spec.goal_rows[spec.goal_rows.size() / 2]};
    return step_toward(me, home, false);
  }
  const auto wps = soccer_waypoints(spec, route);
  const int last = static_cast<int>(wps.size()) - 1;
  while (mem.waypoint < last && me == wps[mem.waypoint].cell) ++mem.waypoint;
  const auto& wp = wps[std::min(mem.waypoint, last)];
  if (me == wp.cell) return kLeft;
  return step_toward(me, wp.cell, wp.horizontal_first);
}

inline constexpr int kThiefGuardRadius = 3;
inline constexpr int kThiefStallLimit = 4;

/// The thief tours its goals in order. At the door of each goal it breaks in
/// unless the hunter is within kThiefGuardRadius of that goal, in which case it
/// moves on to the next one. At the last goal of its order it always goes in.
/// After a collision it takes a different move, and after kThiefStallLimit
/// steps without getting closer it heads for the next goal, wrapping around.
inline int thief_tour_action(const GameSpec& spec, const GameState& s, const std::vector<int>& perm,
                             ActMemory& mem) {
  const int n = static_cast<int>(perm.size());
  const Cell me = s.pos_oppo;
  const Cell hunter = s.pos_self;
  const auto goal_of = [&](int k) { return spec.goal_cells[static_cast<std::size_t>(perm[k % n])]; };
  Cell goal = goal_of(mem.waypoint);
  const int d = manhattan(me, goal);
  bool advance = d <= 1 && mem.waypoint < n - 1 && manhattan(hunter, goal) <= kThiefGuardRadius;
  if (d < mem.best_dist) {
    mem.best_dist = d;
    mem.stalled = 0;
  } else if (++mem.stalled >= kThiefStallLimit) {
    advance = true;
  }
  if (advance) {
    ++mem.waypoint;
    goal = goal_of(mem.waypoint);
    mem.best_dist = manhattan(me, goal);
    mem.stalled = 0;
  }
  const bool bounced = mem.last_action != kStay && me == mem.last_pos;
  const int a = shortest_path_action(spec, me, goal, bounced ? mem.last_action : -1);
  mem.last_action = a;
  mem.last_pos = me;
  return a;
}

}  // namespace detail

// -- Acting -------------------------------------------------------------------

/// Choose an action. Scripted soccer and thief rules play seat B; the others
/// play whichever seat they are trained for.
inline int act(const TabularPolicy& policy, const GameSpec& spec, const GameState& state, Rng& rng,
               ActMemory& mem) {
  switch (policy.kind) {
    case PolicyKind::Greedy: {
      const std::size_t s = state_index(spec, state);
      if (s >= policy.num_states()) throw Error("act: unknown state index for policy '" + policy.id + "'");
      return static_cast<int>(argmax_lowest(policy.q_row(s)));
    }
    case PolicyKind::Stochastic: {
      const std::size_t s = state_index(spec, state);
      if (s >= spec.num_states()) throw Error("act: unknown state index");
      const auto it = policy.dist.find(s);
      if (it == policy.dist.end()) return static_cast<int>(rng.index(static_cast<std::size_t>(policy.num_actions)));
      return static_cast<int>(rng.categorical(it->second));
    }
    case PolicyKind::Scripted: {
      const auto& p = policy.rule.params;
      switch (policy.rule.family) {
        case RuleFamily::RpsConstant: return p.at(0);
        case RuleFamily::SoccerRoute: return detail::soccer_route_action(spec, state, p.at(0), mem);
        case RuleFamily::ThiefTour: return detail::thief_tour_action(spec, state, p, mem);
        case RuleFamily::ThiefWaitTour:
          if (state.step < p.at(0)) return kStay;
          return detail::thief_tour_action(spec, state, std::vector<int>(p.begin() + 1, p.end()), mem);
      }
    }
  }
  throw Error("act: bad policy");
}

inline int act(const TabularPolicy& policy, const GameSpec& spec, const GameState& state, Rng& rng) {
  ActMemory mem;
  return act(policy, spec, state, rng, mem);
}

// -- Scripted libraries -------------------------------------------------------

inline TabularPolicy scripted_policy(std::string id, RuleFamily family, std::vector<int> params,
                                     int num_actions) {
  TabularPolicy p;
  p.id = std::move(id);
  p.kind = PolicyKind::Scripted;
  p.num_actions = num_actions;
  p.rule = {family, std::move(params)};
  return p;
}

inline TabularPolicy soccer_route(const GameSpec& spec, int route) {
  return scripted_policy(std::string("route-") + detail::soccer_route_name(route), RuleFamily::SoccerRoute, {route},
                         spec.num_actions());
}

inline TabularPolicy thief_tour(const std::vector<int>& perm) {
  std::string id = "tour-";
  for (int g : perm) id += std::to_string(g);
  return scripted_policy(std::move(id), RuleFamily::ThiefTour, perm, 5);
}

inline StrategyLibrary scripted_library(const GameSpec& spec) {
  StrategyLibrary lib;
  lib.game = spec.id;
  switch (spec.id) {
    case GameId::RPS:
      lib.entries = {scripted_policy("always-R", RuleFamily::RpsConstant, {kRock}, 3),
                     scripted_policy("always-P", RuleFamily::RpsConstant, {kPaper}, 3),
                     scripted_policy("always-S", RuleFamily::RpsConstant, {kScissors}, 3)};
      break;
    case GameId::Soccer:
      for (int route = 0; route < detail::kSoccerLibraryRoutes; ++route)
        lib.entries.push_back(soccer_route(spec, route));
      break;
    case GameId::ThievesHunters: {
      std::vector<int> perm(spec.goal_cells.size());
      std::iota(perm.begin(), perm.end(), 0);
      do {
        lib.entries.push_back(thief_tour(perm));
      } while (std::next_permutation(perm.begin(), perm.end()));
      break;
    }
  }
  return lib;
}

/// A strategy outside the scripted library, used for the unseen-opponent
/// scenario.
inline TabularPolicy novel_strategy(const GameSpec& spec) {
  switch (spec.id) {
    case GameId::RPS: {
      // 80% rock, 20% paper.
      TabularPolicy p;
      p.id = "mixed-R80-P20";
      p.kind = PolicyKind::Stochastic;
      p.num_actions = 3;
      p.dist[0] = {0.8, 0.2, 0.0};
      return p;
    }
    case GameId::Soccer:
      return soccer_route(spec, detail::kSoccerHeldOutRoute);
    case GameId::ThievesHunters:
      // Waits before touring, so every hunter arrives too early.
      return scripted_policy("wait3-tour-2013", RuleFamily::ThiefWaitTour, {3, 2, 0, 1, 3}, 5);
  }
  throw Error("novel_strategy: bad game");
}

// -- Episodes -----------------------------------------------------------------

using Actor = std::function<int(const GameState&)>;

/// Play one episode. Actors own any per-episode memory they need.
inline EpisodeOutcome play_episode(const GameSpec& spec, const Actor& self, const Actor& oppo, Rng& rng,
                                   bool record_trajectory = false) {
  GameState state = reset(spec, rng);
  std::vector<TrajectoryStep> traj;
  while (true) {
    const int a = self(state);
    const int b = oppo(state);
    if (record_trajectory) traj.push_back({state_index(spec, state), a, b});
    auto res = step(spec, state, a, b);
    if (res.terminal) {
      res.outcome->trajectory = std::move(traj);
      return *res.outcome;
    }
    state = res.next;
  }
}

/// Play `policy_self` (seat A) against `policy_oppo` (seat B).
inline EpisodeOutcome play_policies(const GameSpec& spec, const TabularPolicy& policy_self,
                                    const TabularPolicy& policy_oppo, Rng& rng, bool record_trajectory = false) {
  ActMemory mem_self, mem_oppo;
  Rng act_rng = rng.fork("act", rng.index(1u << 30));
  return play_episode(
      spec, [&](const GameState& s) { return act(policy_self, spec, s, act_rng, mem_self); },
      [&](const GameState& s) { return act(policy_oppo, spec, s, act_rng, mem_oppo); }, rng, record_trajectory);
}

// -- Q-learning ---------------------------------------------------------------

struct QLearningParams {
  double alpha = 0.1;
  double gamma = 0.9;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  int episodes = 50000;
  double q_init = 1.0;  // optimistic; the best achievable return

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("q-learning: gamma must be in (0,1]");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("q-learning: alpha must be in (0,1]");
    if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0)
      throw Error("q-learning: epsilon must be in [0,1]");
    if (episodes < 1) throw Error("q-learning: episodes must be >= 1");
  }
};

/// Tabular Q-learning of seat A against a fixed seat-B opponent.
inline TabularPolicy q_learn_best_response(const GameSpec& spec, const TabularPolicy& opponent,
                                           const QLearningParams& params, Rng& rng) {
  params.validate();
  const std::size_t nS = spec.num_states();
  const int nA = spec.num_actions();
  TabularPolicy out;
  out.id = "br(" + opponent.id + ")";
  out.kind = PolicyKind::Greedy;
  out.num_actions = nA;
  out.q.assign(nS * static_cast<std::size_t>(nA), params.q_init);

  Rng env_rng = rng.fork("env");
  Rng explore = rng.fork("explore");
  Rng opp_rng = rng.fork("opponent");
  std::vector<std::size_t> ties;

  for (int ep = 0; ep < params.episodes; ++ep) {
    const double frac = params.episodes > 1 ? static_cast<double>(ep) / (params.episodes - 1) : 1.0;
    const double eps = params.epsilon_start + (params.epsilon_end - params.epsilon_start) * frac;
    ActMemory mem;
    GameState state = reset(spec, env_rng);
    while (true) {
      const std::size_t s = state_index(spec, state);
      auto row = std::span<double>(out.q).subspan(s * nA, nA);
      int a;
      if (explore.bernoulli(eps)) {
        a = static_cast<int>(explore.index(static_cast<std::size_t>(nA)));
      } else {
        const double best = *std::max_element(row.begin(), row.end());
        ties.clear();
        for (int i = 0; i < nA; ++i)
          if (row[i] == best) ties.push_back(static_cast<std::size_t>(i));
        a = static_cast<int>(ties[explore.index(ties.size())]);
      }
      const int b = act(opponent, spec, state, opp_rng, mem);
      const auto res = step(spec, state, a, b);
      double target;
      if (res.terminal) {
        target = res.outcome->r_self;
      } else {
        const auto next = std::span<const double>(out.q).subspan(state_index(spec, res.next) * nA, nA);
        target = params.gamma * *std::max_element(next.begin(), next.end());
      }
      row[a] += params.alpha * (target - row[a]);
      if (res.terminal) break;
      state = res.next;
    }
  }
  return out;
}

inline StrategyLibrary build_response_library(const GameSpec& spec, const StrategyLibrary& opponents,
                                              const QLearningParams& params, Rng& rng) {
  if (opponents.entries.empty()) throw Error("build_response_library: empty opponent library");
  StrategyLibrary lib;
  lib.game = spec.id;
  lib.entries.reserve(opponents.size());
  for (std::size_t i = 0; i < opponents.size(); ++i) {
    Rng job = rng.fork("br", i);
    lib.entries.push_back(q_learn_best_response(spec, opponents[i], params, job));
  }
  return lib;
}

}  // namespace btom

#endif  // BTOM_POLICIES_HPP
