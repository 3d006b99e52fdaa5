#pragma once

// Agent-side contract pricing: expected profit and demand of a price
// schedule, the closed-form optimum for linear utility and demand, a grid
// search used both as oracle and for piecewise utilities, and configuration
// selection by enumeration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "cmarket/core.hpp"
#include "cmarket/error.hpp"

namespace cmarket {

struct PricingConstants {
  double epsilon = 1e-6;  // minimum markup, cents
};

struct PricingOutcome {
  PriceSchedule prices;
  double markup = 0.0;             // uniform markup over expected cost
  double expected_profit = 0.0;    // per contract
  double expected_demand = 0.0;    // contracts
  double overall_profit = 0.0;     // expected_profit × expected_demand
  double consumer_expected_utility = 0.0;
};

namespace detail {

inline void check_stats_match(const PriceSchedule& prices, const IntervalStats& stats) {
  require_dims(stats.t_hat.size() == stats.p.size() && stats.c.size() == stats.p.size(),
               "interval statistics vectors differ in length");
  require_dims(prices.size() == stats.size(), "price schedule and statistics differ in length");
}

}  // namespace detail

/// Σ (π_i(t̂_i) − c_i)·p_i.
inline double expected_profit(const PriceSchedule& prices, const IntervalStats& stats) {
  detail::check_stats_match(prices, stats);
  double total = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    total += (prices.at(i, stats.t_hat[i]) - stats.c[i]) * stats.p[i];
  }
  return total;
}

/// Σ M(u_i(t̂_i, π_i(t̂_i)))·p_i with the clamped demand curve.
inline double expected_demand(const PriceSchedule& prices, const IntervalStats& stats,
                              const PiecewiseUtility& u, const DemandCurve& m) {
  detail::check_stats_match(prices, stats);
  detail::require_dims(u.targets().size() == stats.size(), "utility and statistics differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double t = stats.t_hat[i];
    total += m(u.piece(i)(t, prices.at(i, t))) * stats.p[i];
  }
  return total;
}

/// Σ p_i·u_i(t̂_i, π_i(t̂_i)) as seen by the consumer.
inline double expected_utility(const PriceSchedule& prices, const IntervalStats& stats,
                               const PiecewiseUtility& u) {
  detail::check_stats_match(prices, stats);
  double total = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const double t = stats.t_hat[i];
    total += stats.p[i] * u.piece(i)(t, prices.at(i, t));
  }
  return total;
}

inline double overall_profit(const PriceSchedule& prices, const IntervalStats& stats,
                             const PiecewiseUtility& u, const DemandCurve& m) {
  return expected_profit(prices, stats) * expected_demand(prices, stats, u, m);
}

/// π_i = c_i + markup on every interval.
inline PriceSchedule markup_schedule(const Targets& targets, const IntervalStats& stats,
                                     double markup) {
  detail::require_dims(targets.size() == stats.size(), "targets and statistics differ in length");
  std::vector<double> prices(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) prices[i] = stats.c[i] + markup;
  return PriceSchedule::constant(targets, prices);
}

/// Full outcome record for the uniform-markup schedule.
inline PricingOutcome evaluate_markup(const Targets& targets, const IntervalStats& stats,
                                      const PiecewiseUtility& u, const DemandCurve& m,
                                      double markup) {
  PricingOutcome out;
  out.prices = markup_schedule(targets, stats, markup);
  out.markup = markup;
  out.expected_profit = expected_profit(out.prices, stats);
  out.expected_demand = expected_demand(out.prices, stats, u, m);
  out.overall_profit = out.expected_profit * out.expected_demand;
  out.consumer_expected_utility = expected_utility(out.prices, stats, u);
  return out;
}

/// Scalars of the linear closed form for aggregate time T = t̂ᵀp and cost C = cᵀp.
struct LinearOptimum {
  double slack = 0.0;    // γ_M − α_M·T − β_M·C
  double markup = 0.0;   // πᵀp − cᵀp at the optimum
  double profit = 0.0;   // overall profit at the optimum
};

/// Optimal uniform markup for U = −α_U·t − β_U·π and M = γ + λ·U.
inline LinearOptimum linear_optimum(double expected_time, double expected_cost, double alpha_u,
                                    double beta_u, const DemandCurve& m, double epsilon) {
  const double alpha_m = m.lambda * alpha_u;
  const double beta_m = m.lambda * beta_u;
  LinearOptimum opt;
  opt.slack = m.gamma - alpha_m * expected_time - beta_m * expected_cost;
  opt.markup = std::max(opt.slack / (2.0 * beta_m), epsilon);
  // Aggregate linear demand at the chosen markup, clamped at zero.
  const double demand = std::max(0.0, opt.slack - beta_m * opt.markup);
  opt.profit = opt.markup * demand;
  return opt;
}

/// Closed-form pricing for the one-piece linear utility U = −α_U·t − β_U·π.
/// In the nonnegative-demand branch πᵀp = (γ_M − α_M·t̂ᵀp + β_M·cᵀp)/(2β_M),
/// otherwise π_i = c_i + ε.
inline PricingOutcome price_linear(const IntervalStats& stats, const Targets& targets,
                                   double alpha_u, double beta_u, const DemandCurve& m,
                                   PricingConstants consts = {}) {
  stats.validate();
  detail::require(alpha_u >= 0.0 && beta_u > 0.0, "linear utility needs alpha >= 0 and beta > 0");
  detail::require(consts.epsilon > 0.0, "epsilon must be positive");
  const auto opt = linear_optimum(stats.expected_time(), stats.expected_cost(), alpha_u, beta_u,
                                  m, consts.epsilon);
  return evaluate_markup(targets, stats, PiecewiseUtility::linear(alpha_u, beta_u, targets), m,
                         opt.markup);
}

/// Exhaustive search over uniform markups k·grid_step (k ≥ 1) maximizing
/// overall profit. The search span doubles until expected demand vanishes.
inline PricingOutcome price_oracle_grid(const IntervalStats& stats, const Targets& targets,
                                        const PiecewiseUtility& u, const DemandCurve& m,
                                        double grid_step, PricingConstants consts = {}) {
  stats.validate();
  detail::require(grid_step > 0.0, "grid step must be positive");
  detail::require_dims(targets.size() == stats.size() && u.targets().size() == stats.size(),
                       "targets, utility and statistics differ in length");
  auto demand_at = [&](double markup) {
    double d = 0.0;
    for (std::size_t i = 0; i < stats.size(); ++i) {
      d += stats.p[i] * m(u.piece(i)(stats.t_hat[i], stats.c[i] + markup));
    }
    return d;
  };
  const double mass = std::accumulate(stats.p.begin(), stats.p.end(), 0.0);
  auto profit_at = [&](double markup) { return markup * mass * demand_at(markup); };
  double span = std::max(grid_step, 1.0);
  for (int i = 0; i < 200 && demand_at(span) > 0.0; ++i) span *= 2.0;

  const auto steps = static_cast<long>(std::ceil(span / grid_step));
  double best_markup = consts.epsilon;
  double best_profit = 0.0;
  for (long k = 1; k <= steps; ++k) {
    const double markup = static_cast<double>(k) * grid_step;
    const double p = profit_at(markup);
    if (p > best_profit) {
      best_profit = p;
      best_markup = markup;
    }
  }
  return evaluate_markup(targets, stats, u, m, best_markup);
}

/// Prices one configuration's statistics against any utility: closed form for
/// uniform-piece utilities, grid search over the markup otherwise.
inline PricingOutcome price_contract(const IntervalStats& stats, const Targets& targets,
                                     const PiecewiseUtility& u, const DemandCurve& m,
                                     PricingConstants consts = {}, double grid_step = 1e-3) {
  detail::require_dims(u.targets() == targets, "utility and pricing targets differ");
  if (auto piece = u.uniform_piece(); piece && piece->b > 0.0) {
    if (piece->kappa == 0.0) return price_linear(stats, targets, piece->a, piece->b, m, consts);
    // A constant κ shifts demand: γ + λ(κ − a·t − b·π).
    const double shifted = m.gamma + m.lambda * piece->kappa;
    if (shifted > 0.0) {
      auto out = price_linear(stats, targets, piece->a, piece->b, DemandCurve(shifted, m.lambda),
                              consts);
      return evaluate_markup(targets, stats, u, m, out.markup);
    }
    return evaluate_markup(targets, stats, u, m, consts.epsilon);
  }
  return price_oracle_grid(stats, targets, u, m, grid_step, consts);
}

struct ConfigurationChoice {
  std::size_t index = 0;
  IntervalStats stats;
  PricingOutcome outcome;
};

/// Prices every configuration and keeps the most profitable; ties go to the
/// lowest rate, then the smallest id.
inline ConfigurationChoice select_configuration(std::span<const Configuration> configs,
                                                const Targets& targets,
                                                const PiecewiseUtility& u, const DemandCurve& m,
                                                PricingConstants consts = {}) {
  if (configs.empty()) throw InvalidArgument("no configurations to choose from");
  std::optional<ConfigurationChoice> best;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    auto stats = interval_stats(configs[i].histogram, configs[i].rate, targets);
    auto outcome = price_contract(stats, targets, u, m, consts);
    bool better = !best;
    if (best) {
      const auto& b = *best;
      const double bp = b.outcome.overall_profit;
      if (outcome.overall_profit != bp) {
        better = outcome.overall_profit > bp;
      } else if (configs[i].rate != configs[b.index].rate) {
        better = configs[i].rate < configs[b.index].rate;
      } else {
        better = configs[i].id < configs[b.index].id;
      }
    }
    if (better) best = ConfigurationChoice{i, std::move(stats), std::move(outcome)};
  }
  return *best;
}

}  // namespace cmarket
