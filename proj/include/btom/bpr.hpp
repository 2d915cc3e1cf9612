#ifndef BTOM_BPR_HPP
#define BTOM_BPR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "btom/core.hpp"
#include "btom/games.hpp"
#include "btom/policies.hpp"

namespace btom {

/// Gaussian performance models over episodic return. Rows index the library
/// the belief ranges over (the other player's entries); columns index the
/// owner's own choices. The improvement integral runs up to u_max, which is
/// unbounded by default: with a finite bound equal to the best achievable
/// return, a certain belief gives every policy zero improvement mass.
class PerfMatrix {
 public:
  static constexpr double kUnbounded = std::numeric_limits<double>::infinity();

  PerfMatrix() = default;
  PerfMatrix(std::size_t rows, std::size_t cols, double u_max = kUnbounded)
      : rows_(rows), cols_(cols), u_max_(u_max), models_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double u_max() const { return u_max_; }

  const GaussianPerfModel& at(std::size_t row, std::size_t col) const {
    if (row >= rows_ || col >= cols_) throw Error("PerfMatrix: index out of range");
    return models_[row * cols_ + col];
  }
  void set(std::size_t row, std::size_t col, GaussianPerfModel m) {
    if (row >= rows_ || col >= cols_) throw Error("PerfMatrix: index out of range");
    if (!(m.stddev > 0.0)) throw Error("PerfMatrix: stddev must be positive");
    models_[row * cols_ + col] = m;
    u_max_ = std::max(u_max_, m.mean);
  }

  /// Copy with one extra row and column; existing entries keep their models.
  PerfMatrix grown(std::size_t extra_rows, std::size_t extra_cols) const {
    PerfMatrix out(rows_ + extra_rows, cols_ + extra_cols, u_max_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out.models_[r * out.cols_ + c] = at(r, c);
    return out;
  }

  friend bool operator==(const PerfMatrix& a, const PerfMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_ || a.u_max_ != b.u_max_) return false;
    for (std::size_t i = 0; i < a.models_.size(); ++i)
      if (a.models_[i].mean != b.models_[i].mean || a.models_[i].stddev != b.models_[i].stddev) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double u_max_ = kUnbounded;
  std::vector<GaussianPerfModel> models_;
};

struct BprContext {
  PerfMatrix perf_self;  // rows: opponent strategies J, cols: own policies Pi
  PerfMatrix perf_oppo;  // rows: own policies Pi, cols: opponent strategies J
};

/// Fit one Gaussian per (opponent strategy, own policy) from simulated returns.
/// Optionally also reports the empirical win rate of each pair as [j][pi].
inline PerfMatrix estimate_perf_models(const GameSpec& spec, const StrategyLibrary& own,
                                       const StrategyLibrary& opponents, int episodes_per_pair, Rng& rng,
                                       double sigma_floor = kDefaultSigmaFloor,
                                       std::vector<std::vector<double>>* win_rate = nullptr) {
  if (own.entries.empty() || opponents.entries.empty()) throw Error("estimate_perf_models: empty library");
  if (episodes_per_pair < 2) throw Error("estimate_perf_models: need at least 2 episodes per pair");
  PerfMatrix perf(opponents.size(), own.size());
  std::vector<double> returns(static_cast<std::size_t>(episodes_per_pair));
  if (win_rate) win_rate->assign(opponents.size(), std::vector<double>(own.size(), 0.0));
  for (std::size_t j = 0; j < opponents.size(); ++j) {
    for (std::size_t p = 0; p < own.size(); ++p) {
      Rng pair_rng = rng.fork("perf", j * 1000003u + p);
      int wins = 0;
      for (auto& r : returns) {
        const auto out = play_policies(spec, own[p], opponents[j], pair_rng);
        r = out.r_self;
        wins += out.won() ? 1 : 0;
      }
      perf.set(j, p, fit_gaussian(returns, sigma_floor));
      if (win_rate) (*win_rate)[j][p] = static_cast<double>(wins) / episodes_per_pair;
    }
  }
  return perf;
}

/// Zero-sum mirror: the opponent's model of playing column j against our
/// policy p is our model negated and transposed.
inline PerfMatrix derive_opponent_models(const PerfMatrix& perf_self, bool zero_sum = true) {
  if (!zero_sum) throw Error("derive_opponent_models: game is not zero-sum");
  double u_max = perf_self.u_max();
  PerfMatrix out(perf_self.cols(), perf_self.rows(), u_max);
  for (std::size_t j = 0; j < perf_self.rows(); ++j)
    for (std::size_t p = 0; p < perf_self.cols(); ++p) {
      const auto& m = perf_self.at(j, p);
      out.set(p, j, {-m.mean, m.stddev});
    }
  return out;
}

inline BprContext make_context(PerfMatrix perf_self) {
  BprContext ctx;
  ctx.perf_oppo = derive_opponent_models(perf_self);
  ctx.perf_self = std::move(perf_self);
  return ctx;
}

/// Responses to retrain so that each strategy has a uniquely best response.
/// Assumes own policy i was trained against opponent strategy i. A response
/// whose mean return against its own strategy is below `win_level` is listed
/// itself; otherwise the responses that tie or beat it there are listed.
inline std::vector<std::size_t> closure_violations(const PerfMatrix& perf, double win_level = 0.5,
                                                   double tol = 1e-9) {
  std::vector<std::size_t> bad;
  const std::size_t n = std::min(perf.rows(), perf.cols());
  for (std::size_t j = 0; j < n; ++j) {
    const double own = perf.at(j, j).mean;
    std::vector<std::size_t> rivals;
    for (std::size_t k = 0; k < perf.cols(); ++k)
      if (k != j && perf.at(j, k).mean >= own - tol) rivals.push_back(k);
    if (rivals.empty()) continue;
    if (own < win_level) bad.push_back(j);
    else
      for (std::size_t k : rivals) bad.push_back(k < n ? k : j);
  }
  std::sort(bad.begin(), bad.end());
  bad.erase(std::unique(bad.begin(), bad.end()), bad.end());
  return bad;
}

/// Current best estimate: the best column under the belief-weighted means.
inline double expected_best(std::span<const double> weights, const PerfMatrix& perf) {
  if (weights.size() != perf.rows()) throw Error("expected_best: belief/model dimension mismatch");
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < perf.cols(); ++c) {
    double v = 0.0;
    for (std::size_t r = 0; r < perf.rows(); ++r) v += weights[r] * perf.at(r, c).mean;
    best = std::max(best, v);
  }
  return best;
}

inline double expected_best(const Belief& belief, const PerfMatrix& perf) {
  return expected_best(belief.weights(), perf);
}

/// Probability mass column `col` places on improving on `u_bar`, i.e. the
/// integral of the belief-weighted densities over [u_bar, u_max].
inline double ei_mass(std::span<const double> weights, const PerfMatrix& perf, std::size_t col, double u_bar) {
  double mass = 0.0;
  for (std::size_t r = 0; r < perf.rows(); ++r) {
    const auto& m = perf.at(r, col);
    mass += weights[r] * (gaussian_cdf(perf.u_max(), m) - gaussian_cdf(u_bar, m));
  }
  return mass;
}

/// BPR-EI: the column with the largest improvement mass; lowest index wins ties.
inline std::size_t bpr_ei_select(std::span<const double> weights, const PerfMatrix& perf) {
  if (weights.size() != perf.rows()) throw Error("bpr_ei_select: belief/model dimension mismatch");
  if (perf.cols() == 0) throw Error("bpr_ei_select: empty policy library");
  const double u_bar = expected_best(weights, perf);
  std::size_t best = 0;
  double best_mass = ei_mass(weights, perf, 0, u_bar);
  for (std::size_t c = 1; c < perf.cols(); ++c) {
    const double mass = ei_mass(weights, perf, c, u_bar);
    if (mass > best_mass + 1e-12) {
      best = c;
      best_mass = mass;
    }
  }
  return best;
}

inline std::size_t bpr_ei_select(const Belief& belief, const PerfMatrix& perf) {
  return bpr_ei_select(belief.weights(), perf);
}

/// Bayes' rule with Gaussian likelihoods of the observed return under column
/// `played`. Computed in log space so that far-off signals do not underflow.
inline Belief belief_update(const Belief& belief, const PerfMatrix& perf, std::size_t played, double signal,
                            double floor = kDefaultBeliefFloor) {
  if (belief.size() != perf.rows()) throw Error("belief_update: belief/model dimension mismatch");
  if (played >= perf.cols()) throw Error("belief_update: policy index out of range");
  std::vector<double> log_post(belief.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < belief.size(); ++r) {
    const auto& m = perf.at(r, played);
    const double z = (signal - m.mean) / m.stddev;
    log_post[r] = std::log(belief[r]) - 0.5 * z * z - std::log(m.stddev);
    top = std::max(top, log_post[r]);
  }
  for (auto& v : log_post) v = std::exp(v - top);
  return normalize(log_post, floor);
}

}  // namespace btom

#endif  // BTOM_BPR_HPP
