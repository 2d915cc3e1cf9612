#ifndef BTOM_TOMOP_HPP
#define BTOM_TOMOP_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <vector>

#include "btom/bpr.hpp"
#include "btom/core.hpp"

namespace btom {

struct ToMoPParams {
  double c1 = 0.3;
  double lambda = 0.7;
  double delta = 0.7;
  int l = 35;
  double belief_floor = kDefaultBeliefFloor;

  void validate() const {
    if (!(c1 >= 0.0 && c1 <= 1.0)) throw Error("tomop: c1 must be in [0,1]");
    if (!(lambda > 0.0 && lambda < 1.0)) throw Error("tomop: lambda must be in (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw Error("tomop: delta must be in (0,1)");
    if (l < 1) throw Error("tomop: l must be >= 1");
    if (!(belief_floor >= 0.0 && belief_floor < 1.0)) throw Error("tomop: belief floor must be in [0,1)");
  }
};

// -- Zero-order agent -----------------------------------------------------------

/// Zero-order agent over a single performance matrix. The same class drives
/// the agent's own zero-order reasoning and the scripted ToMoP0 opponent, which
/// uses the mirrored matrix.
class ToMoP0Agent {
 public:
  ToMoP0Agent() = default;
  explicit ToMoP0Agent(PerfMatrix perf, double floor = kDefaultBeliefFloor)
      : perf_(std::move(perf)), floor_(floor), belief_(Belief::uniform(perf_.rows())) {}

  std::size_t select() const { return bpr_ei_select(belief_, perf_); }

  void observe(std::size_t played, double own_return) {
    belief_ = belief_update(belief_, perf_, played, own_return, floor_);
  }

  const Belief& belief() const { return belief_; }
  void set_belief(Belief b) {
    if (b.size() != perf_.rows()) throw Error("ToMoP0Agent: belief size mismatch");
    belief_ = std::move(b);
  }
  const PerfMatrix& perf() const { return perf_; }

 private:
  PerfMatrix perf_;
  double floor_ = kDefaultBeliefFloor;
  Belief belief_;
};

inline std::size_t tomop0_select(const Belief& belief0, const BprContext& ctx) {
  return bpr_ei_select(belief0, ctx.perf_self);
}

// -- First-order pieces ---------------------------------------------------------

/// Blend the zero-order belief with a point prediction. Not renormalized.
inline std::vector<double> integrate(const Belief& belief0, std::size_t jhat, double c1) {
  if (!(c1 >= 0.0 && c1 <= 1.0)) throw Error("integrate: c1 must be in [0,1]");
  if (jhat >= belief0.size()) throw Error("integrate: prediction index out of range");
  std::vector<double> merged(belief0.size());
  for (std::size_t j = 0; j < merged.size(); ++j) merged[j] = (1.0 - c1) * belief0[j];
  merged[jhat] += c1;
  return merged;
}

/// Fraction of wins among the last `l` outcomes; 1.0 until `l` have been seen.
inline double win_rate(const std::deque<bool>& window, int l) {
  if (l < 1) throw Error("win_rate: l must be >= 1");
  const auto need = static_cast<std::size_t>(l);
  if (window.size() < need) return 1.0;
  const auto wins = std::count(window.end() - static_cast<std::ptrdiff_t>(need), window.end(), true);
  return static_cast<double>(wins) / static_cast<double>(l);
}

struct Confidence {
  double c1 = 0.3;
  int flag = 1;
  double upsilon_prev = 1.0;
};

inline void update_flag(Confidence& c, double upsilon, double delta) {
  if (upsilon <= delta) c.flag = 1 - c.flag;
}

inline void update_confidence(Confidence& c, double upsilon, double lambda, double delta) {
  const double f = static_cast<double>(c.flag);
  double next;
  if (upsilon >= c.upsilon_prev) {
    next = ((1.0 - lambda) * c.c1 + lambda) * f;
  } else if (upsilon > delta) {
    double factor = 0.0;
    const double gap = upsilon - delta;
    if (upsilon < 1.0 && gap > 0.0) factor = std::log10(upsilon) / std::log10(gap);
    if (!std::isfinite(factor)) factor = 0.0;
    factor = std::clamp(factor, 0.0, 1.0);
    next = factor * c.c1 * f;
  } else {
    next = lambda * f;
  }
  c.c1 = std::clamp(next, 0.0, 1.0);
  c.upsilon_prev = upsilon;
}

// -- First-order agent ----------------------------------------------------------

struct ToMoP1Choice {
  std::size_t pi = 0;
  std::size_t jhat = 0;
};

class ToMoP1Agent {
 public:
  ToMoP1Agent() = default;
  ToMoP1Agent(BprContext ctx, ToMoPParams params) : ctx_(std::move(ctx)), params_(params) {
    params_.validate();
    if (ctx_.perf_self.rows() != ctx_.perf_oppo.cols() || ctx_.perf_self.cols() != ctx_.perf_oppo.rows())
      throw Error("ToMoP1Agent: performance matrices disagree");
    reset();
  }

  /// Fresh uniform beliefs and initial confidence; keeps the models.
  void reset() {
    belief0_ = Belief::uniform(ctx_.perf_self.rows());
    belief1_ = Belief::uniform(ctx_.perf_oppo.rows());
    conf_ = Confidence{params_.c1, 1, 1.0};
    window_.clear();
    upsilon_ = 1.0;
  }

  std::size_t predict_opponent() const { return bpr_ei_select(belief1_, ctx_.perf_oppo); }

  ToMoP1Choice select() const {
    ToMoP1Choice out;
    out.jhat = predict_opponent();
    const auto merged = integrate(belief0_, out.jhat, conf_.c1);
    out.pi = bpr_ei_select(merged, ctx_.perf_self);
    return out;
  }

  void update_first_order(std::size_t jhat, double r_oppo) {
    belief1_ = belief_update(belief1_, ctx_.perf_oppo, jhat, r_oppo, params_.belief_floor);
  }

  void update_zero_order(std::size_t pi, double r_self) {
    belief0_ = belief_update(belief0_, ctx_.perf_self, pi, r_self, params_.belief_floor);
  }

  /// Record the outcome, then flip the flag and adjust confidence. A flip
  /// empties the window, so the new mode starts from the warm-up value.
  void update_confidence_from(bool won) {
    window_.push_back(won);
    while (window_.size() > static_cast<std::size_t>(params_.l) + 1) window_.pop_front();
    upsilon_ = win_rate(window_, params_.l);
    const int before = conf_.flag;
    update_flag(conf_, upsilon_, params_.delta);
    update_confidence(conf_, upsilon_, params_.lambda, params_.delta);
    if (conf_.flag != before) window_.clear();
  }

  void observe(const ToMoP1Choice& choice, const EpisodeOutcome& outcome) {
    update_first_order(choice.jhat, outcome.r_oppo);
    update_zero_order(choice.pi, outcome.r_self);
    update_confidence_from(outcome.won());
  }

  const Belief& belief0() const { return belief0_; }
  const Belief& belief1() const { return belief1_; }
  void set_beliefs(Belief b0, Belief b1) {
    if (b0.size() != belief0_.size() || b1.size() != belief1_.size())
      throw Error("ToMoP1Agent: belief size mismatch");
    belief0_ = std::move(b0);
    belief1_ = std::move(b1);
  }
  const Confidence& confidence() const { return conf_; }
  void set_confidence(Confidence c) { conf_ = c; }
  double upsilon() const { return upsilon_; }
  const std::deque<bool>& window() const { return window_; }
  const BprContext& context() const { return ctx_; }
  const ToMoPParams& params() const { return params_; }

 private:
  BprContext ctx_;
  ToMoPParams params_;
  Belief belief0_;
  Belief belief1_;
  Confidence conf_;
  std::deque<bool> window_;
  double upsilon_ = 1.0;
};

}  // namespace btom

#endif  // BTOM_TOMOP_HPP
