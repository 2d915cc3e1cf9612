#ifndef BTOM_CORE_HPP
#define BTOM_CORE_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace btom {

/// Thrown for contract violations and malformed inputs throughout the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultBeliefFloor = 0.01;
inline constexpr double kDefaultSigmaFloor = 0.05;

// -- Rng ----------------------------------------------------------------------

namespace detail {
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace detail

/// Seeded random stream. Child streams are derived by label so that adding a
/// consumer somewhere does not perturb the draws seen by another.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(detail::splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng fork(std::string_view label) const {
    return Rng(detail::splitmix64(seed_ ^ detail::fnv1a(label)));
  }
  Rng fork(std::string_view label, std::uint64_t index) const {
    return Rng(detail::splitmix64(detail::splitmix64(seed_ ^ detail::fnv1a(label)) + index));
  }

  /// Uniform double in [0, 1). Implemented by hand so streams agree across
  /// standard library vendors.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    if (n == 0) throw Error("Rng::index: empty range");
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Draw an index from unnormalized nonnegative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw Error("Rng::categorical: weights sum to zero");
    double u = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

// -- Belief -------------------------------------------------------------------

/// Probability distribution over the entries of a policy or strategy library.
class Belief {
 public:
  Belief() = default;

  static Belief uniform(std::size_t n) {
    if (n == 0) throw Error("Belief::uniform: empty library");
    return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static Belief point(std::size_t n, std::size_t at, double floor = kDefaultBeliefFloor);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }

  std::size_t argmax() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < weights_.size(); ++i)
      if (weights_[i] > weights_[best]) best = i;
    return best;
  }

  double entropy() const {
    double h = 0.0;
    for (double w : weights_)
      if (w > 0.0) h -= w * std::log(w);
    return h;
  }

 private:
  explicit Belief(std::vector<double> w) : weights_(std::move(w)) {}
  friend Belief normalize(std::span<const double> weights, double floor);

  std::vector<double> weights_;
};

/// Clamp each weight to at least `floor` times the total mass, then rescale to
/// sum to one.
inline Belief normalize(std::span<const double> weights, double floor = kDefaultBeliefFloor) {
  if (weights.empty()) throw Error("normalize: degenerate belief (empty)");
  if (floor < 0.0 || floor * static_cast<double>(weights.size()) >= 1.0)
    throw Error("normalize: belief floor out of range");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("normalize: negative or non-finite weight");
    total += w;
  }
  if (!(total > 0.0)) throw Error("normalize: degenerate belief");

  std::vector<double> out(weights.begin(), weights.end());
  const double min_mass = floor * total;
  double z = 0.0;
  for (double& w : out) {
    w = std::max(w, min_mass);
    z += w;
  }
  for (double& w : out) w /= z;
  return Belief(std::move(out));
}

inline Belief Belief::point(std::size_t n, std::size_t at, double floor) {
  if (at >= n) throw Error("Belief::point: index out of range");
  std::vector<double> w(n, 0.0);
  w[at] = 1.0;
  return normalize(w, floor);
}

// -- Gaussian performance models ---------------------------------------------

struct GaussianPerfModel {
  double mean = 0.0;
  double stddev = 1.0;
};

inline double gaussian_pdf(double u, const GaussianPerfModel& m) {
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  const double z = (u - m.mean) / m.stddev;
  return kInvSqrt2Pi / m.stddev * std::exp(-0.5 * z * z);
}

inline double gaussian_cdf(double u, const GaussianPerfModel& m) {
  if (u == -INFINITY) return 0.0;
  if (u == INFINITY) return 1.0;
  return 0.5 * std::erfc(-(u - m.mean) / (m.stddev * std::sqrt(2.0)));
}

/// Sample mean and (n-1) standard deviation, with the deviation floored.
inline GaussianPerfModel fit_gaussian(std::span<const double> samples,
                                      double sigma_floor = kDefaultSigmaFloor) {
  if (samples.size() < 2) throw Error("fit_gaussian: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, std::max(std::sqrt(ss / (n - 1.0)), sigma_floor)};
}

// -- Episodes -----------------------------------------------------------------

enum class Result { Win, Lose, Draw };

inline Result classify(double r_self, double r_oppo) {
  if (r_self > r_oppo) return Result::Win;
  if (r_self < r_oppo) return Result::Lose;
  return Result::Draw;
}

inline const char* to_string(Result r) {
  switch (r) {
    case Result::Win: return "win";
    case Result::Lose: return "lose";
    case Result::Draw: return "draw";
  }
  return "?";
}

struct TrajectoryStep {
  std::size_t state = 0;
  int a_self = 0;
  int a_oppo = 0;
};

struct EpisodeOutcome {
  double r_self = 0.0;
  double r_oppo = 0.0;
  Result result = Result::Draw;
  int steps = 0;
  std::vector<TrajectoryStep> trajectory;

  bool won() const { return result == Result::Win; }
};

inline EpisodeOutcome make_outcome(double r_self, double r_oppo, int steps) {
  EpisodeOutcome out;
  out.r_self = r_self;
  out.r_oppo = r_oppo;
  out.result = classify(r_self, r_oppo);
  out.steps = steps;
  return out;
}

}  // namespace btom

#endif  // BTOM_CORE_HPP
