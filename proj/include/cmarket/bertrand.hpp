#pragma once

// Differentiated Bertrand duopoly with demand M_i = γ_i − α_i·μ_i + β_i·μ_j.
// Prices μ are margins over marginal cost.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cmarket/error.hpp"

namespace cmarket {

struct AgentDemand {
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  double slope() const { return beta / (2.0 * alpha); }     // a_i
  double intercept() const { return gamma / (2.0 * alpha); } // b_i
};

struct DuopolyParams {
  std::array<AgentDemand, 2> agent;

  static DuopolyParams identical(double gamma, double alpha, double beta) {
    return {{AgentDemand{gamma, alpha, beta}, AgentDemand{gamma, alpha, beta}}};
  }

  void validate() const {
    for (const auto& a : agent) {
      detail::require(a.gamma > 0.0 && a.alpha > 0.0 && a.beta > 0.0,
                      "duopoly demand parameters must be positive");
    }
  }

  /// a_1·a_2; best-response iteration contracts iff this is below 1.
  double contraction() const { return agent[0].slope() * agent[1].slope(); }
};

enum class Update { AgentOne, AgentTwo, Both };

/// A finite prefix followed by a cycle repeated forever.
struct UpdateSchedule {
  std::vector<Update> prefix;
  std::vector<Update> cycle;

  static UpdateSchedule synchronized() { return {{}, {Update::Both}}; }
  static UpdateSchedule alternating() { return {{}, {Update::AgentOne, Update::AgentTwo}}; }

  Update at(std::size_t x) const {
    if (x < prefix.size()) return prefix[x];
    return cycle[(x - prefix.size()) % cycle.size()];
  }

  /// Both agents must update infinitely often, i.e. somewhere in the cycle.
  void validate() const {
    bool one = false, two = false;
    for (Update u : cycle) {
      one = one || u != Update::AgentTwo;
      two = two || u != Update::AgentOne;
    }
    detail::require(one && two, "update cycle must let both agents update");
  }
};

struct Prices {
  double mu1 = 0.0;
  double mu2 = 0.0;
};

/// (γ_i + β_i·μ_other) / (2α_i).
inline double best_response(const DuopolyParams& params, std::size_t agent, double mu_other) {
  params.validate();
  detail::require(agent < 2, "agent index must be 0 or 1");
  const auto& a = params.agent[agent];
  return (a.gamma + a.beta * mu_other) / (2.0 * a.alpha);
}

struct Equilibrium {
  Prices prices;
  bool nonnegative() const { return prices.mu1 >= 0.0 && prices.mu2 >= 0.0; }
};

inline Equilibrium nash_equilibrium(const DuopolyParams& params) {
  params.validate();
  const auto& [g1, a1, b1] = params.agent[0];
  const auto& [g2, a2, b2] = params.agent[1];
  const double denom = 4.0 * a1 * a2 - b1 * b2;
  if (denom == 0.0) throw InvalidArgument("degenerate duopoly: 4·α1·α2 = β1·β2");
  return {{(2.0 * a2 * g1 + b1 * g2) / denom, (2.0 * a1 * g2 + b2 * g1) / denom}};
}

/// One application of F_1, F_2 or F_3.
inline Prices apply_update(const DuopolyParams& params, Update u, Prices p) {
  Prices next = p;
  if (u != Update::AgentTwo) next.mu1 = best_response(params, 0, p.mu2);
  if (u != Update::AgentOne) next.mu2 = best_response(params, 1, p.mu1);
  return next;
}

struct IterationResult {
  Prices prices;
  std::size_t steps = 0;
};

/// Applies the schedule until both prices are within `tol` of the equilibrium.
inline IterationResult iterate_to_equilibrium(const DuopolyParams& params,
                                              const UpdateSchedule& schedule, Prices init,
                                              double tol = 1e-9,
                                              std::size_t max_steps = 1'000'000) {
  params.validate();
  schedule.validate();
  if (!(params.contraction() < 1.0)) {
    throw InvalidArgument("best-response iteration needs a1·a2 < 1");
  }
  const auto ne = nash_equilibrium(params).prices;
  auto close = [&](Prices p) {
    return std::abs(p.mu1 - ne.mu1) <= tol && std::abs(p.mu2 - ne.mu2) <= tol;
  };
  IterationResult r{init, 0};
  while (!close(r.prices)) {
    if (r.steps >= max_steps) {
      throw ConvergenceError("best-response iteration did not converge within " +
                             std::to_string(max_steps) + " steps");
    }
    r.prices = apply_update(params, schedule.at(r.steps), r.prices);
    ++r.steps;
  }
  return r;
}

}  // namespace cmarket
