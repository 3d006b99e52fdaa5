#pragma once

// Risk-aware pricing. The risk of a price schedule is the largest overall
// profit the agent can lose when the true interval statistics (p*, t*, c*)
// deviate from its estimate inside a box around t̂ and c and a
// total-variation ball around p.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "cmarket/core.hpp"
#include "cmarket/error.hpp"
#include "cmarket/pricing.hpp"

namespace cmarket {

/// Per-interval bounds on t*_i − t̂_i (minutes) and c*_i − c_i (cents).
struct RiskBounds {
  std::vector<double> t_lo, t_hi, c_lo, c_hi;

  static RiskBounds zero(std::size_t n) {
    return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
            std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  }

  /// Deviations as fractions of the nominal values, e.g. (−0.1, 0.1).
  static RiskBounds relative(const IntervalStats& stats, double lo_frac, double hi_frac) {
    return relative(stats, lo_frac, hi_frac, lo_frac, hi_frac);
  }

  static RiskBounds relative(const IntervalStats& stats, double t_lo_frac, double t_hi_frac,
                             double c_lo_frac, double c_hi_frac) {
    RiskBounds b = zero(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
      b.t_lo[i] = t_lo_frac * stats.t_hat[i];
      b.t_hi[i] = t_hi_frac * stats.t_hat[i];
      b.c_lo[i] = c_lo_frac * stats.c[i];
      b.c_hi[i] = c_hi_frac * stats.c[i];
    }
    return b;
  }

  void validate(std::size_t n) const {
    detail::require_dims(t_lo.size() == n && t_hi.size() == n && c_lo.size() == n &&
                             c_hi.size() == n,
                         "risk bounds must have one entry per interval");
    for (std::size_t i = 0; i < n; ++i) {
      if (t_lo[i] > t_hi[i] || c_lo[i] > c_hi[i]) {
        throw InvalidArgument("infeasible risk bounds: lower bound exceeds upper bound");
      }
    }
  }
};

struct RiskParams {
  double lambda = 0.0;
  double tv_radius = 0.2;           // total-variation radius for p*
  std::size_t p_samples = 64;       // simplex samples for p*, nominal included
  std::size_t t_steps = 2;          // extra grid points over the t* range
  std::size_t c_steps = 2;          // extra grid points over the c* range
  std::size_t markup_steps = 400;   // outer search resolution
  std::uint64_t seed = 0x5eedULL;

  void validate() const {
    detail::require(lambda >= 0.0, "risk lambda must be nonnegative");
    detail::require(tv_radius >= 0.0 && tv_radius <= 1.0, "tv radius must lie in [0,1]");
    detail::require(p_samples >= 2 && t_steps >= 2 && c_steps >= 2 && markup_steps >= 2,
                    "risk search resolutions must be at least 2");
  }
};

/// The adversarial statistics realizing the worst loss.
struct WorstCase {
  double loss = 0.0;
  std::vector<double> p;
  double expected_time = 0.0;  // t*ᵀp*
  double expected_cost = 0.0;  // c*ᵀp*
};

namespace detail {

struct LinearMarket {
  double gamma, lambda, alpha_m, beta_m, alpha_u, beta_u, epsilon;
};

inline LinearMarket linear_market(const PiecewiseUtility& u, const DemandCurve& m, double eps) {
  require(u.is_linear(), "risk-aware pricing requires a linear utility");
  const auto piece = *u.uniform_piece();
  return {m.gamma, m.lambda, m.lambda * piece.a, m.lambda * piece.b, piece.a, piece.b, eps};
}

// Overall profit of a price schedule with aggregate price `price_dot_p`
// against aggregate true time T and cost C.
inline double profit_of(const LinearMarket& mk, double price_dot_p, double T, double C) {
  const double demand = std::max(0.0, mk.gamma - mk.alpha_m * T - mk.beta_m * price_dot_p);
  return (price_dot_p - C) * demand;
}

inline double optimal_profit_of(const LinearMarket& mk, double T, double C) {
  return linear_optimum(T, C, mk.alpha_u, mk.beta_u, DemandCurve(mk.gamma, mk.lambda), mk.epsilon)
      .profit;
}

// Deterministic p* samples: the nominal vector, one push toward each vertex
// at the full radius, then random directions at random radii.
inline std::vector<std::vector<double>> sample_probabilities(const std::vector<double>& p,
                                                             const RiskParams& params) {
  const std::size_t n = p.size();
  std::vector<std::vector<double>> out;
  out.push_back(p);
  const double r = params.tv_radius;
  if (r == 0.0 || n < 2) return out;
  for (std::size_t j = 0; j < n && out.size() < params.p_samples; ++j) {
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = (1.0 - r) * p[i] + (i == j ? r : 0.0);
    out.push_back(std::move(q));
  }
  std::mt19937_64 rng(params.seed);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (out.size() < params.p_samples) {
    std::vector<double> dir(n);
    double total = 0.0;
    for (auto& x : dir) total += (x = expo(rng));
    const double s = r * unit(rng);
    std::vector<double> q(n);
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += (q[i] = (1.0 - s) * p[i] + s * dir[i] / total);
    for (auto& x : q) x /= norm;
    out.push_back(std::move(q));
  }
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t k) {
  std::vector<double> v(k);
  for (std::size_t i = 0; i < k; ++i) {
    v[i] = k == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(k - 1);
  }
  return v;
}

}  // namespace detail

/// Worst-case loss of a constant price schedule. For each sampled p* the
/// maximum over the (t*, c*) box is exact: the loss depends on t* and c* only
/// through t*ᵀp* and c*ᵀp*, is convex in the cost aggregate, and is convex in
/// the time aggregate on either side of the point where demand vanishes.
inline WorstCase worst_case(const PriceSchedule& prices, const IntervalStats& stats,
                            const RiskBounds& bounds, const RiskParams& params,
                            const PiecewiseUtility& u, const DemandCurve& m,
                            PricingConstants consts = {}) {
  stats.validate();
  params.validate();
  const std::size_t n = stats.size();
  detail::require_dims(prices.size() == n, "price schedule and statistics differ in length");
  bounds.validate(n);
  detail::require(prices.is_constant(), "worst-case loss is defined for constant price schedules");
  const auto mk = detail::linear_market(u, m, consts.epsilon);

  WorstCase worst;
  worst.p = stats.p;
  worst.expected_time = stats.expected_time();
  worst.expected_cost = stats.expected_cost();
  for (const auto& ps : detail::sample_probabilities(stats.p, params)) {
    double t_lo = 0.0, t_hi = 0.0, c_lo = 0.0, c_hi = 0.0, price = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      t_lo += ps[i] * (stats.t_hat[i] + bounds.t_lo[i]);
      t_hi += ps[i] * (stats.t_hat[i] + bounds.t_hi[i]);
      c_lo += ps[i] * (stats.c[i] + bounds.c_lo[i]);
      c_hi += ps[i] * (stats.c[i] + bounds.c_hi[i]);
      price += ps[i] * prices.pieces()[i].d;
    }
    auto ts = detail::linspace(t_lo, t_hi, params.t_steps);
    if (mk.alpha_m > 0.0) {
      const double kink = (mk.gamma - mk.beta_m * price) / mk.alpha_m;
      if (kink > t_lo && kink < t_hi) ts.push_back(kink);
    }
    const auto cs = detail::linspace(c_lo, c_hi, params.c_steps);
    for (double T : ts) {
      for (double C : cs) {
        const double loss = detail::optimal_profit_of(mk, T, C) - detail::profit_of(mk, price, T, C);
        if (loss > worst.loss) {
          worst.loss = loss;
          worst.p = ps;
          worst.expected_time = T;
          worst.expected_cost = C;
        }
      }
    }
  }
  return worst;
}

inline double worst_case_loss(const PriceSchedule& prices, const IntervalStats& stats,
                              const RiskBounds& bounds, const RiskParams& params,
                              const PiecewiseUtility& u, const DemandCurve& m,
                              PricingConstants consts = {}) {
  return worst_case(prices, stats, bounds, params, u, m, consts).loss;
}

/// Maximizes 𝒫(π) − λ·R(π) over uniform markups π_i = c_i + markup, markup ≥ ε.
/// λ = 0 is exactly price_linear.
inline PricingOutcome price_risk_aware(const IntervalStats& stats, const Targets& targets,
                                       const RiskBounds& bounds, const RiskParams& params,
                                       const PiecewiseUtility& u, const DemandCurve& m,
                                       PricingConstants consts = {}) {
  stats.validate();
  params.validate();
  bounds.validate(stats.size());
  const auto mk = detail::linear_market(u, m, consts.epsilon);
  if (params.lambda == 0.0) {
    return price_linear(stats, targets, mk.alpha_u, mk.beta_u, m, consts);
  }

  const double T = stats.expected_time();
  const double C = stats.expected_cost();
  auto objective = [&](double markup) {
    const auto prices = markup_schedule(targets, stats, markup);
    const double nominal = detail::profit_of(mk, C + markup, T, C);
    return nominal - params.lambda * worst_case_loss(prices, stats, bounds, params, u, m, consts);
  };

  // Largest demand intercept any admissible statistics can produce.
  double t_min = T, c_min = C;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    t_min = std::min(t_min, stats.t_hat[i] + bounds.t_lo[i]);
    c_min = std::min(c_min, stats.c[i] + bounds.c_lo[i]);
  }
  const double slack_max = std::max(mk.gamma - mk.alpha_m * t_min - mk.beta_m * c_min,
                                    mk.gamma - mk.alpha_m * T - mk.beta_m * C);
  const double hi = std::max(consts.epsilon, slack_max / mk.beta_m) + consts.epsilon;

  auto grid = detail::linspace(consts.epsilon, hi, params.markup_steps);
  grid.push_back(linear_optimum(T, C, mk.alpha_u, mk.beta_u, m, consts.epsilon).markup);
  std::sort(grid.begin(), grid.end());
  std::size_t best = 0;
  double best_val = -kInfinity;
  std::vector<double> vals(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    vals[k] = objective(grid[k]);
    if (vals[k] > best_val) {
      best_val = vals[k];
      best = k;
    }
  }

  // Golden-section refinement inside the neighbouring grid cells.
  double a = grid[best > 0 ? best - 1 : 0];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  double best_markup = grid[best];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = objective(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = objective(x2);
    }
  }
  for (double cand : {x1, x2}) {
    const double v = cand == x1 ? f1 : f2;
    if (cand >= consts.epsilon && v > best_val) {
      best_val = v;
      best_markup = cand;
    }
  }
  return evaluate_markup(targets, stats, u, m, best_markup);
}

}  // namespace cmarket
