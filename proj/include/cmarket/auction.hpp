#pragma once

// VCG-style auction over contracts. The consumer takes the contract with the
// highest expected utility but pays through a schedule that hands the
// consumer exactly the runner-up's utility: ω_k(t) = π_k(t) + Δ/β_U.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cmarket/core.hpp"
#include "cmarket/error.hpp"

namespace cmarket {

struct Bid {
  int agent = 0;
  Contract contract;        // reported prices (truthful: the agent's expected costs)
  IntervalStats true_stats; // private; true_stats.c are the agent's real expected costs
};

struct VcgOutcome {
  int winner = 0;
  double winner_utility = 0.0;
  double runner_up_utility = 0.0;  // U*
  double delta = 0.0;              // U_winner − U*
  PriceSchedule payment;           // Ω
};

/// Winner and payment schedule for a one-piece linear utility U = −α·t − β·π.
/// Ties in utility go to the lowest agent id.
inline VcgOutcome run_vcg(std::span<const Bid> bids, const PiecewiseUtility& u) {
  if (bids.size() < 2) throw InvalidArgument("a VCG auction needs at least two bids");
  detail::require(u.is_linear(), "VCG payments are defined for linear utilities only");
  const double beta = u.piece(0).b;

  std::vector<double> util(bids.size());
  std::size_t win = 0;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    util[i] = expected_contract_utility(bids[i].contract, u);
    if (util[i] > util[win] || (util[i] == util[win] && bids[i].agent < bids[win].agent)) win = i;
  }
  double second = -kInfinity;
  for (std::size_t i = 0; i < bids.size(); ++i) {
    if (i != win) second = std::max(second, util[i]);
  }

  VcgOutcome out;
  out.winner = bids[win].agent;
  out.winner_utility = util[win];
  out.runner_up_utility = second;
  out.delta = util[win] - second;
  const auto& reported = bids[win].contract.prices;
  std::vector<PricePiece> pieces = reported.pieces();
  for (auto& p : pieces) p.d += out.delta / beta;
  out.payment = PriceSchedule(reported.targets(), std::move(pieces));
  return out;
}

/// Σ p_k(ω_k(t̂_k) − c*_k) with ω built from Δ = U_i − U*, whether or not the
/// bid wins. For the winner this is its payoff.
inline double vcg_expected_profit(const Bid& bid, double runner_up_utility,
                                  const PiecewiseUtility& u) {
  detail::require(u.is_linear(), "VCG payments are defined for linear utilities only");
  const auto& c = bid.contract;
  detail::require_dims(bid.true_stats.c.size() == c.probs.size(),
                       "true costs and contract differ in length");
  const double shift = (expected_contract_utility(c, u) - runner_up_utility) / u.piece(0).b;
  double total = 0.0;
  for (std::size_t k = 0; k < c.probs.size(); ++k) {
    total += c.probs[k] * (c.prices.at(k, c.expected_times[k]) + shift - bid.true_stats.c[k]);
  }
  return total;
}

/// Expected payment minus expected true cost for the winner; zero otherwise.
inline double vcg_payoff(const VcgOutcome& outcome, std::span<const Bid> bids, int agent) {
  const Bid* bid = nullptr;
  for (const auto& b : bids) {
    if (b.agent == agent) bid = &b;
  }
  if (!bid) throw InvalidArgument("agent " + std::to_string(agent) + " did not bid");
  if (agent != outcome.winner) return 0.0;
  const auto& c = bid->contract;
  detail::require_dims(bid->true_stats.c.size() == c.probs.size(),
                       "true costs and contract differ in length");
  double total = 0.0;
  for (std::size_t k = 0; k < c.probs.size(); ++k) {
    total += c.probs[k] * (outcome.payment.at(k, c.expected_times[k]) - bid->true_stats.c[k]);
  }
  return total;
}

/// Contract whose prices equal `costs` on each interval (truthful bid).
inline Contract cost_priced_contract(std::string task, const Targets& targets,
                                     const IntervalStats& stats, std::span<const double> costs) {
  Contract c;
  c.task = std::move(task);
  c.targets = targets;
  c.probs = stats.p;
  c.expected_times = stats.t_hat;
  c.prices = PriceSchedule::constant(targets, costs);
  c.validate();
  return c;
}

}  // namespace cmarket
