#pragma once

// Consumer-side domain model: target-time intervals, piecewise-linear
// utilities, linear demand, completion-time histograms, and contracts.
//
// Units are minutes for time and cents for money throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cmarket/error.hpp"

namespace cmarket {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Tolerance used when checking that probability masses sum to one.
inline constexpr double kMassTolerance = 1e-9;

/// Ordered interval boundaries 0 = τ_0 < τ_1 < ... < τ_n = +∞.
/// Interval i (zero-based) is [τ_i, τ_{i+1}).
class Targets {
 public:
  /// A single interval [0, ∞).
  Targets() : bounds_{0.0, kInfinity} {}

  /// Builds from the full boundary list, including the leading 0 and trailing ∞.
  explicit Targets(std::vector<double> bounds) : bounds_(std::move(bounds)) {
    detail::require(bounds_.size() >= 2, "targets need at least two boundaries");
    detail::require(bounds_.front() == 0.0, "first target time must be 0");
    detail::require(bounds_.back() == kInfinity, "last target time must be +inf");
    for (std::size_t i = 1; i < bounds_.size(); ++i) {
      detail::require(bounds_[i] > bounds_[i - 1], "target times must be strictly increasing");
    }
  }

  /// Builds (0, d_1, ..., d_k, ∞) from the finite interior deadlines.
  static Targets from_deadlines(std::span<const double> deadlines) {
    std::vector<double> b;
    b.reserve(deadlines.size() + 2);
    b.push_back(0.0);
    b.insert(b.end(), deadlines.begin(), deadlines.end());
    b.push_back(kInfinity);
    return Targets(std::move(b));
  }

  std::size_t size() const { return bounds_.size() - 1; }
  double lower(std::size_t i) const { return bounds_.at(i); }
  double upper(std::size_t i) const { return bounds_.at(i + 1); }
  const std::vector<double>& bounds() const { return bounds_; }

  std::vector<double> deadlines() const {
    return {bounds_.begin() + 1, bounds_.end() - 1};
  }

  /// Index of the interval containing t (t ≥ 0).
  std::size_t interval_of(double t) const {
    detail::require(t >= 0.0, "time must be nonnegative");
    auto it = std::upper_bound(bounds_.begin(), bounds_.end(), t);
    return static_cast<std::size_t>(std::distance(bounds_.begin(), it)) - 1;
  }

  friend bool operator==(const Targets&, const Targets&) = default;

 private:
  std::vector<double> bounds_;
};

/// u(t, π) = κ − a·t − b·π on one target interval.
struct LinearPiece {
  double kappa = 0.0;
  double a = 0.0;  // utility lost per minute
  double b = 0.0;  // utility lost per cent

  double operator()(double t, double price) const { return kappa - a * t - b * price; }

  friend bool operator==(const LinearPiece&, const LinearPiece&) = default;
};

class PiecewiseUtility {
 public:
  PiecewiseUtility(Targets targets, std::vector<LinearPiece> pieces)
      : targets_(std::move(targets)), pieces_(std::move(pieces)) {
    detail::require(pieces_.size() == targets_.size(),
                    "utility needs exactly one piece per target interval");
    for (const auto& p : pieces_) {
      detail::require(p.a >= 0.0 && p.b >= 0.0,
                      "utility pieces must be non-increasing in time and price");
    }
  }

  /// U = −α·t − β·π replicated over every interval of `targets`.
  static PiecewiseUtility linear(double alpha, double beta, Targets targets = Targets()) {
    std::vector<LinearPiece> pieces(targets.size(), LinearPiece{0.0, alpha, beta});
    return PiecewiseUtility(std::move(targets), std::move(pieces));
  }

  const Targets& targets() const { return targets_; }
  const std::vector<LinearPiece>& pieces() const { return pieces_; }
  const LinearPiece& piece(std::size_t i) const { return pieces_.at(i); }

  double operator()(double t, double price) const {
    return pieces_[targets_.interval_of(t)](t, price);
  }

  /// The common piece when every interval uses the same linear function.
  std::optional<LinearPiece> uniform_piece() const {
    for (const auto& p : pieces_) {
      if (!(p == pieces_.front())) return std::nullopt;
    }
    return pieces_.front();
  }

  /// True for the global-linear case U = −α·t − β·π with α, β > 0.
  bool is_linear() const {
    auto p = uniform_piece();
    return p && p->kappa == 0.0 && p->a > 0.0 && p->b > 0.0;
  }

  /// Same pieces re-anchored on other targets; requires a uniform piece.
  PiecewiseUtility retargeted(Targets targets) const {
    auto p = uniform_piece();
    detail::require(p.has_value(), "only uniform utilities can be retargeted");
    std::vector<LinearPiece> pieces(targets.size(), *p);
    return PiecewiseUtility(std::move(targets), std::move(pieces));
  }

 private:
  Targets targets_;
  std::vector<LinearPiece> pieces_;
};

/// M(U) = max(0, γ + λ·U).
struct DemandCurve {
  double gamma = 0.0;
  double lambda = 0.0;

  DemandCurve() = default;
  DemandCurve(double g, double l) : gamma(g), lambda(l) {
    detail::require(gamma > 0.0, "demand base gamma must be positive");
    detail::require(lambda > 0.0, "demand slope lambda must be positive");
  }

  double operator()(double utility) const { return std::max(0.0, gamma + lambda * utility); }

  friend bool operator==(const DemandCurve&, const DemandCurve&) = default;
};

/// Probability mass on [lo, hi), spread uniformly; lo == hi is a point mass.
struct Bin {
  double lo = 0.0;
  double hi = 0.0;
  double mass = 0.0;

  bool is_point() const { return hi == lo; }
  double mid() const { return 0.5 * (lo + hi); }

  friend bool operator==(const Bin&, const Bin&) = default;
};

/// Discrete approximation of a completion-time density.
class CompletionHistogram {
 public:
  CompletionHistogram() = default;

  explicit CompletionHistogram(std::vector<Bin> bins) : bins_(std::move(bins)) {
    detail::require(!bins_.empty(), "histogram needs at least one bin");
    double total = 0.0;
    for (std::size_t i = 0; i < bins_.size(); ++i) {
      const Bin& b = bins_[i];
      detail::require(b.lo >= 0.0 && b.hi >= b.lo, "histogram bin times must be nonnegative");
      detail::require(b.mass >= 0.0, "histogram masses must be nonnegative");
      if (i > 0) detail::require(b.lo >= bins_[i - 1].lo, "histogram bins must be sorted");
      total += b.mass;
    }
    detail::require(std::abs(total - 1.0) <= kMassTolerance, "histogram masses must sum to 1");
  }

  /// Point masses at (time, mass) pairs; sorted on construction.
  static CompletionHistogram points(std::vector<std::pair<double, double>> masses) {
    std::sort(masses.begin(), masses.end());
    std::vector<Bin> bins;
    bins.reserve(masses.size());
    for (auto [t, m] : masses) bins.push_back({t, t, m});
    return CompletionHistogram(std::move(bins));
  }

  static CompletionHistogram point(double t) { return points({{t, 1.0}}); }

  static CompletionHistogram uniform(double lo, double hi) {
    return CompletionHistogram({Bin{lo, hi, 1.0}});
  }

  /// Normal(mean, sd) truncated to t ≥ 0 and materialized on a grid of
  /// `step`-wide cells by differencing the CDF. sd == 0 gives a point mass.
  static CompletionHistogram gaussian(double mean, double sd, double step = 0.1) {
    detail::require(sd >= 0.0, "standard deviation must be nonnegative");
    detail::require(step > 0.0, "grid step must be positive");
    if (sd == 0.0) return point(std::max(0.0, mean));
    auto cdf = [&](double x) { return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0))); };
    const double lo = std::max(0.0, mean - 8.0 * sd);
    const double hi = std::max(lo + step, mean + 8.0 * sd);
    const auto k0 = static_cast<long>(std::floor(lo / step));
    const auto k1 = static_cast<long>(std::ceil(hi / step));
    std::vector<Bin> bins;
    double total = 0.0;
    for (long k = k0; k < k1; ++k) {
      const double a = static_cast<double>(k) * step;
      const double b = static_cast<double>(k + 1) * step;
      const double m = cdf(b) - (k == k0 ? cdf(0.0) : cdf(a));
      if (m <= 0.0) continue;
      bins.push_back({a, b, m});
      total += m;
    }
    if (bins.empty() || total <= 0.0) return point(std::max(0.0, mean));
    for (auto& b : bins) b.mass /= total;
    return CompletionHistogram(std::move(bins));
  }

  const std::vector<Bin>& bins() const { return bins_; }

  double mean() const {
    double s = 0.0;
    for (const auto& b : bins_) s += b.mass * b.mid();
    return s;
  }

  /// Inverse CDF for u in [0, 1).
  double quantile(double u) const {
    double acc = 0.0;
    for (const auto& b : bins_) {
      if (b.mass <= 0.0) continue;
      if (u < acc + b.mass) {
        if (b.is_point()) return b.lo;
        return b.lo + (u - acc) / b.mass * (b.hi - b.lo);
      }
      acc += b.mass;
    }
    const Bin& last = bins_.back();
    return last.is_point() ? last.lo : std::nextafter(last.hi, last.lo);
  }

  /// Masses on cells [k·step, (k+1)·step), k = 0..max.
  std::vector<double> rebinned(double step) const {
    detail::require(step > 0.0, "grid step must be positive");
    auto cell = [step](double t) {
      return static_cast<std::size_t>(std::floor(t / step + 1e-9));
    };
    std::size_t ncells = 0;
    for (const auto& b : bins_) ncells = std::max(ncells, cell(b.hi) + 1);
    std::vector<double> out(ncells, 0.0);
    for (const auto& b : bins_) {
      if (b.is_point()) {
        out[cell(b.lo)] += b.mass;
        continue;
      }
      const double width = b.hi - b.lo;
      for (std::size_t k = cell(b.lo); k <= cell(b.hi) && k < ncells; ++k) {
        const double a = std::max(b.lo, static_cast<double>(k) * step);
        const double z = std::min(b.hi, static_cast<double>(k + 1) * step);
        if (z > a) out[k] += b.mass * (z - a) / width;
      }
    }
    return out;
  }

  friend bool operator==(const CompletionHistogram&, const CompletionHistogram&) = default;

 private:
  std::vector<Bin> bins_;
};

/// A purchasable resource setting: linear cost rate plus the completion-time
/// distribution it induces for one task.
struct Configuration {
  std::string id;
  double rate = 0.0;  // cents per minute
  CompletionHistogram histogram;
  std::map<std::string, std::string> tags;

  Configuration() = default;
  Configuration(std::string id_, double rate_, CompletionHistogram hist,
                std::map<std::string, std::string> tags_ = {})
      : id(std::move(id_)), rate(rate_), histogram(std::move(hist)), tags(std::move(tags_)) {
    detail::require(rate > 0.0, "configuration rate must be positive");
  }
};

/// Per-interval probability, truncated mean time and expected cost.
struct IntervalStats {
  std::vector<double> p;
  std::vector<double> t_hat;
  std::vector<double> c;

  std::size_t size() const { return p.size(); }

  void validate() const {
    detail::require_dims(t_hat.size() == p.size() && c.size() == p.size(),
                         "interval statistics vectors differ in length");
    double total = 0.0;
    for (double x : p) {
      detail::require(x >= 0.0 && x <= 1.0, "interval probabilities must lie in [0,1]");
      total += x;
    }
    detail::require(std::abs(total - 1.0) <= kMassTolerance,
                    "interval probabilities must sum to 1");
  }

  double expected_time() const { return std::inner_product(t_hat.begin(), t_hat.end(), p.begin(), 0.0); }
  double expected_cost() const { return std::inner_product(c.begin(), c.end(), p.begin(), 0.0); }
};

/// π_i(t) = d − e·t on one interval.
struct PricePiece {
  double d = 0.0;
  double e = 0.0;

  double operator()(double t) const { return d - e * t; }

  friend bool operator==(const PricePiece&, const PricePiece&) = default;
};

class PriceSchedule {
 public:
  PriceSchedule() = default;
  PriceSchedule(Targets targets, std::vector<PricePiece> pieces)
      : targets_(std::move(targets)), pieces_(std::move(pieces)) {
    detail::require_dims(pieces_.size() == targets_.size(),
                         "price schedule needs one function per target interval");
  }

  static PriceSchedule constant(Targets targets, std::span<const double> prices) {
    std::vector<PricePiece> pieces;
    pieces.reserve(prices.size());
    for (double x : prices) pieces.push_back({x, 0.0});
    return PriceSchedule(std::move(targets), std::move(pieces));
  }

  const Targets& targets() const { return targets_; }
  const std::vector<PricePiece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }

  /// Price of interval i evaluated at t (no interval lookup).
  double at(std::size_t i, double t) const { return pieces_.at(i)(t); }

  /// Price owed when the task completes at time t.
  double eval(double t) const { return pieces_[targets_.interval_of(t)](t); }

  bool is_constant() const {
    return std::all_of(pieces_.begin(), pieces_.end(), [](const PricePiece& p) { return p.e == 0.0; });
  }

  friend bool operator==(const PriceSchedule&, const PriceSchedule&) = default;

 private:
  Targets targets_;
  std::vector<PricePiece> pieces_;
};

/// The six-tuple (task, data statistics, targets, probabilities, expected
/// times, prices) returned by an agent.
struct Contract {
  std::string task;
  std::map<std::string, std::string> stats;
  Targets targets;
  std::vector<double> probs;
  std::vector<double> expected_times;
  PriceSchedule prices;

  void validate() const {
    const std::size_t n = targets.size();
    detail::require_dims(probs.size() == n && expected_times.size() == n && prices.size() == n,
                         "contract components disagree on the number of intervals");
    detail::require_dims(prices.targets() == targets, "contract prices use different targets");
    double total = 0.0;
    for (double p : probs) total += p;
    detail::require(std::abs(total - 1.0) <= kMassTolerance, "contract probabilities must sum to 1");
  }
};

inline double eval_utility(const PiecewiseUtility& u, double t, double price) {
  detail::require(t >= 0.0, "time must be nonnegative");
  return u(t, price);
}

/// Interval probabilities, truncated means and linear expected costs of
/// `hist` over `targets`. Empty intervals get t̂ = left endpoint.
inline IntervalStats interval_stats(const CompletionHistogram& hist, double rate,
                                    const Targets& targets) {
  const std::size_t n = targets.size();
  std::vector<double> mass(n, 0.0), moment(n, 0.0);
  for (const Bin& b : hist.bins()) {
    if (b.mass <= 0.0) continue;
    if (b.is_point()) {
      const std::size_t i = targets.interval_of(b.lo);
      mass[i] += b.mass;
      moment[i] += b.mass * b.lo;
      continue;
    }
    const double width = b.hi - b.lo;
    for (std::size_t i = targets.interval_of(b.lo); i < n && targets.lower(i) < b.hi; ++i) {
      const double a = std::max(b.lo, targets.lower(i));
      const double z = std::min(b.hi, targets.upper(i));
      if (z <= a) continue;
      const double part = b.mass * (z - a) / width;
      mass[i] += part;
      moment[i] += part * 0.5 * (a + z);
    }
  }
  IntervalStats s;
  s.p.resize(n);
  s.t_hat.resize(n);
  s.c.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.p[i] = std::min(mass[i], 1.0);
    if (mass[i] > 0.0) {
      // Clamp against rounding so t̂ stays inside its interval.
      s.t_hat[i] = std::clamp(moment[i] / mass[i], targets.lower(i),
                              std::nextafter(targets.upper(i), targets.lower(i)));
    } else {
      s.t_hat[i] = targets.lower(i);
    }
    s.c[i] = rate * s.t_hat[i];
  }
  return s;
}

/// Σ p_i · u_i(t̂_i, π_i(t̂_i)).
inline double expected_contract_utility(const Contract& c, const PiecewiseUtility& u) {
  c.validate();
  detail::require_dims(c.targets == u.targets(), "contract and utility use different targets");
  double total = 0.0;
  for (std::size_t i = 0; i < c.probs.size(); ++i) {
    const double t = c.expected_times[i];
    total += c.probs[i] * u.piece(i)(t, c.prices.at(i, t));
  }
  return total;
}

/// Index of the contract with the greatest expected utility; lowest index wins ties.
inline std::size_t select_best_contract(std::span<const Contract> contracts,
                                        const PiecewiseUtility& u) {
  if (contracts.empty()) throw InvalidArgument("no contracts to choose from");
  std::size_t best = 0;
  double best_u = expected_contract_utility(contracts[0], u);
  for (std::size_t i = 1; i < contracts.size(); ++i) {
    const double v = expected_contract_utility(contracts[i], u);
    if (v > best_u) {
      best = i;
      best_u = v;
    }
  }
  return best;
}

/// Cosine of the two mass vectors after rebinning onto a common grid.
inline double cosine_similarity(const CompletionHistogram& a, const CompletionHistogram& b,
                                double step = 0.1) {
  const auto x = a.rebinned(step);
  const auto y = b.rebinned(step);
  double dot = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t k = 0; k < std::max(x.size(), y.size()); ++k) {
    const double xv = k < x.size() ? x[k] : 0.0;
    const double yv = k < y.size() ? y[k] : 0.0;
    dot += xv * yv;
    nx += xv * xv;
    ny += yv * yv;
  }
  if (nx == 0.0 || ny == 0.0) throw InvalidArgument("cosine similarity of a zero vector");
  return std::clamp(dot / std::sqrt(nx * ny), 0.0, 1.0);
}

}  // namespace cmarket
