#ifndef BTOM_OPPONENTS_HPP
#define BTOM_OPPONENTS_HPP

#include <optional>
#include <string>
#include <string_view>

#include "btom/bpr.hpp"
#include "btom/core.hpp"
#include "btom/games.hpp"
#include "btom/policies.hpp"
#include "btom/tomop.hpp"

namespace btom {

enum class OpponentKind { Stationary, NonStationary, ToMoP0, Mixed, Novel };

inline const char* to_string(OpponentKind k) {
  switch (k) {
    case OpponentKind::Stationary: return "stationary";
    case OpponentKind::NonStationary: return "ns";
    case OpponentKind::ToMoP0: return "tomop0";
    case OpponentKind::Mixed: return "mixed";
    case OpponentKind::Novel: return "novel";
  }
  return "?";
}

inline OpponentKind parse_opponent_kind(std::string_view s) {
  if (s == "stationary") return OpponentKind::Stationary;
  if (s == "ns" || s == "nonstationary") return OpponentKind::NonStationary;
  if (s == "tomop0") return OpponentKind::ToMoP0;
  if (s == "mixed") return OpponentKind::Mixed;
  if (s == "novel") return OpponentKind::Novel;
  throw Error("unknown opponent kind '" + std::string(s) + "'");
}

struct OpponentConfig {
  OpponentKind kind = OpponentKind::Stationary;
  int strategy = -1;  // stationary / pre-activation strategy; -1 draws one
  int period = 200;
  int activation = 200;
  bool mixed_tom_first = true;
  bool novel_revisit = false;  // novel and pre-novel strategies alternate every period after activation

  void validate() const {
    if (period < 1) throw Error("opponent: period must be >= 1");
    if (activation < 0) throw Error("opponent: activation must be >= 0");
  }
};

/// Seat-B controller. Call begin_episode, act for each step, then end_episode.
class OpponentController {
 public:
  OpponentController(OpponentConfig cfg, const StrategyLibrary& library, const PerfMatrix& perf_oppo,
                     std::optional<TabularPolicy> novel, Rng rng, double belief_floor = kDefaultBeliefFloor)
      : cfg_(cfg), library_(library), novel_(std::move(novel)), rng_(rng.fork("schedule")),
        act_rng_(rng.fork("act")) {
    cfg_.validate();
    if (library_.entries.empty()) throw Error("opponent: empty strategy library");
    if (cfg_.strategy >= static_cast<int>(library_.size())) throw Error("opponent: strategy index out of range");
    if (cfg_.kind == OpponentKind::Novel && !novel_) throw Error("opponent: novel kind needs a novel policy");
    if (cfg_.kind == OpponentKind::ToMoP0 || cfg_.kind == OpponentKind::Mixed) {
      if (perf_oppo.cols() != library_.size()) throw Error("opponent: model/library size mismatch");
      tom_ = ToMoP0Agent(perf_oppo, belief_floor);
    }
  }

  void begin_episode(int episode) {
    mem_ = ActMemory{};
    switch (cfg_.kind) {
      case OpponentKind::Stationary:
        if (!active_) active_ = initial();
        break;
      case OpponentKind::NonStationary:
        if (!active_) active_ = initial();
        else if (episode > 0 && episode % cfg_.period == 0) active_ = redraw(*active_);
        break;
      case OpponentKind::ToMoP0:
        active_ = static_cast<int>(tom_.select());
        break;
      case OpponentKind::Mixed: {
        const bool tom_phase = ((episode / cfg_.period) % 2 == 0) == cfg_.mixed_tom_first;
        tom_phase_ = tom_phase;
        if (tom_phase) {
          active_ = static_cast<int>(tom_.select());
        } else if (episode % cfg_.period == 0 || stationary_pick_ < 0) {
          stationary_pick_ = static_cast<int>(rng_.index(library_.size()));
          active_ = stationary_pick_;
        } else {
          active_ = stationary_pick_;
        }
        break;
      }
      case OpponentKind::Novel:
        if (!pre_novel_) pre_novel_ = initial();
        novel_active_ = episode >= cfg_.activation &&
                        (!cfg_.novel_revisit || ((episode - cfg_.activation) / cfg_.period) % 2 == 0);
        active_ = *pre_novel_;
        break;
    }
  }

  int act(const GameSpec& spec, const GameState& state) { return btom::act(policy(), spec, state, act_rng_, mem_); }

  void end_episode(const EpisodeOutcome& outcome) {
    const bool tom_watches = cfg_.kind == OpponentKind::ToMoP0 || cfg_.kind == OpponentKind::Mixed;
    if (tom_watches) tom_.observe(static_cast<std::size_t>(*active_), outcome.r_oppo);
  }

  const TabularPolicy& policy() const {
    if (novel_active_) return *novel_;
    if (!active_) throw Error("opponent: act before begin_episode");
    return library_[static_cast<std::size_t>(*active_)];
  }

  /// Library index of the active strategy, or -1 for the novel one.
  int active_index() const { return novel_active_ ? -1 : active_.value_or(-1); }
  std::string active_label() const { return policy().id; }
  bool novel_active() const { return novel_active_; }
  bool tom_phase() const { return cfg_.kind == OpponentKind::ToMoP0 || (cfg_.kind == OpponentKind::Mixed && tom_phase_); }
  const OpponentConfig& config() const { return cfg_; }
  const ToMoP0Agent& tom() const { return tom_; }

 private:
  int initial() {
    if (cfg_.strategy >= 0) return cfg_.strategy;
    return static_cast<int>(rng_.index(library_.size()));
  }
  int redraw(int current) {
    if (library_.size() < 2) return current;
    auto pick = static_cast<int>(rng_.index(library_.size() - 1));
    return pick >= current ? pick + 1 : pick;
  }

  OpponentConfig cfg_;
  StrategyLibrary library_;
  std::optional<TabularPolicy> novel_;
  Rng rng_;
  Rng act_rng_;
  ActMemory mem_;
  ToMoP0Agent tom_;
  std::optional<int> active_;
  std::optional<int> pre_novel_;
  int stationary_pick_ = -1;
  bool tom_phase_ = false;
  bool novel_active_ = false;
};

}  // namespace btom

#endif  // BTOM_OPPONENTS_HPP
