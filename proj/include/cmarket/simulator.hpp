#pragma once

// Seeded market simulation on synthetic workloads. Agents quote contracts
// for each task, demand is realized from the offered utility, accepted
// contracts are executed against the true completion-time histograms, and
// payments are settled from the quoted price schedule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cmarket/core.hpp"
#include "cmarket/error.hpp"
#include "cmarket/pricing.hpp"
#include "cmarket/risk.hpp"
#include "cmarket/taskgraph.hpp"

namespace cmarket {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SimTask {
  std::string id;
  std::vector<Configuration> configs;  // true completion-time histograms
  std::string intensity;               // e.g. "cpu" or "io"; may be empty
  std::optional<std::vector<double>> deadlines;  // interior targets; unset = mean over configs
  std::map<std::string, std::string> stats;

  /// Average expected completion time across the configuration menu.
  double default_deadline() const {
    detail::require(!configs.empty(), "task '" + id + "' has no configurations");
    double s = 0.0;
    for (const auto& c : configs) s += c.histogram.mean();
    return s / static_cast<double>(configs.size());
  }

  Targets targets() const {
    if (deadlines) return Targets::from_deadlines(*deadlines);
    const double d = default_deadline();
    return d > 0.0 ? Targets::from_deadlines(std::vector<double>{d}) : Targets();
  }
};

enum class AgentKind { NaiveFixed, Expert, Heuristic, Estimator, RiskAware };

struct AgentModel {
  std::string name;
  AgentKind kind = AgentKind::Expert;
  std::optional<std::size_t> config;   // fixed menu index (NaiveFixed; optional for estimators)
  std::string tag_key = "best_for";    // Heuristic: configuration tag matched to task intensity
  double k = 1.0;                      // estimator error coefficient on time and cost
  double sigma = 0.05;                 // estimator's assumed standard deviation, minutes
  double lambda = 0.0;                 // RiskAware
  double t_lo_frac = -0.1, t_hi_frac = 0.1;
  double c_lo_frac = -0.1, c_hi_frac = 0.1;
};

struct Scenario {
  std::uint64_t seed = 1;
  std::vector<SimTask> tasks;
  double alpha_u = 1.0;
  double beta_u = 1.0;
  DemandCurve demand{100.0, 1.0};
  std::vector<AgentModel> agents;
  std::size_t trials = 1;      // independent demand realizations per contract
  double grid_step = 0.1;      // histogram grid, minutes
  PricingConstants pricing;
  RiskParams risk;             // search resolution for RiskAware agents

  PiecewiseUtility utility(const Targets& targets) const {
    return PiecewiseUtility::linear(alpha_u, beta_u, targets);
  }
};

/// One (agent, task) record, or an agent summary when task == "ALL".
struct MetricsRow {
  std::string agent;
  std::string task;
  std::string config;
  double accepted = 0.0;          // accepted contracts per realization
  double profit = 0.0;            // realized profit, averaged over realizations
  double expected_profit = 0.0;   // 𝒫 of the quoted prices under the true statistics
  double optimal_profit = 0.0;    // best 𝒫 achievable with true statistics
  double utility = 0.0;           // consumer expected utility of the offered contract
  double relative_loss = kNaN;
  double similarity = kNaN;       // cosine(estimate, truth)
  double payment = kNaN;          // expected payment per contract under true statistics
  double relative_utility = kNaN; // (agent − expert)/|expert|, summaries only
  double crossover = kNaN;        // benchmark break-even repetition count
};

struct Metrics {
  std::vector<MetricsRow> rows;

  const MetricsRow& summary(const std::string& agent) const {
    for (const auto& r : rows) {
      if (r.agent == agent && r.task == "ALL") return r;
    }
    throw InvalidArgument("no summary row for agent '" + agent + "'");
  }

  friend bool operator==(const Metrics& a, const Metrics& b) {
    if (a.rows.size() != b.rows.size()) return false;
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      const auto& x = a.rows[i];
      const auto& y = b.rows[i];
      if (x.agent != y.agent || x.task != y.task || x.config != y.config) return false;
      for (auto [p, q] : {std::pair{x.accepted, y.accepted}, {x.profit, y.profit},
                          {x.expected_profit, y.expected_profit},
                          {x.optimal_profit, y.optimal_profit}, {x.utility, y.utility},
                          {x.relative_loss, y.relative_loss}, {x.similarity, y.similarity},
                          {x.payment, y.payment}, {x.relative_utility, y.relative_utility},
                          {x.crossover, y.crossover}}) {
        if (!same(p, q)) return false;
      }
    }
    return true;
  }
};

/// (optimal − actual) / optimal.
inline double relative_loss(double optimal, double actual) {
  if (!(optimal > 0.0)) throw InvalidArgument("relative loss needs a positive optimal profit");
  return (optimal - actual) / optimal;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ k);
  return h;
}

// Uniform in [0, 1) from the top 53 bits; stable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Payment and execution cost of one contract that completed at time t.
struct Settlement {
  double payment = 0.0;
  double cost = 0.0;
};

inline Settlement settle(const PriceSchedule& prices, double rate, double t) {
  return {prices.eval(t), rate * t};
}

/// A priced contract offered by one agent for one task.
struct Quote {
  std::size_t config = 0;
  CompletionHistogram estimate;  // the agent's belief about the distribution
  IntervalStats claimed;         // statistics derived from the estimate
  PricingOutcome outcome;
};

inline CompletionHistogram estimated_histogram(const AgentModel& agent,
                                               const Configuration& truth, double grid_step) {
  return CompletionHistogram::gaussian(agent.k * truth.histogram.mean(), agent.sigma, grid_step);
}

inline Quote quote(const AgentModel& agent, const SimTask& task, const Scenario& sc) {
  const Targets targets = task.targets();
  const auto u = sc.utility(targets);
  const auto& menu = task.configs;
  detail::require(!menu.empty(), "task '" + task.id + "' has no configurations");

  auto priced_truth = [&](std::size_t idx) {
    Quote q;
    q.config = idx;
    q.estimate = menu[idx].histogram;
    q.claimed = interval_stats(q.estimate, menu[idx].rate, targets);
    q.outcome = price_contract(q.claimed, targets, u, sc.demand, sc.pricing);
    return q;
  };

  switch (agent.kind) {
    case AgentKind::NaiveFixed: {
      detail::require(agent.config.has_value(), "naive agent '" + agent.name + "' needs a config");
      detail::require(*agent.config < menu.size(),
                      "naive agent '" + agent.name + "' config exceeds the menu of " + task.id);
      return priced_truth(*agent.config);
    }
    case AgentKind::Expert: {
      auto choice = select_configuration(menu, targets, u, sc.demand, sc.pricing);
      Quote q;
      q.config = choice.index;
      q.estimate = menu[choice.index].histogram;
      q.claimed = std::move(choice.stats);
      q.outcome = std::move(choice.outcome);
      return q;
    }
    case AgentKind::Heuristic: {
      std::size_t idx = 0;
      for (std::size_t i = 0; i < menu.size(); ++i) {
        auto it = menu[i].tags.find(agent.tag_key);
        if (it != menu[i].tags.end() && it->second == task.intensity) {
          idx = i;
          break;
        }
      }
      return priced_truth(idx);
    }
    case AgentKind::Estimator:
    case AgentKind::RiskAware: {
      detail::require(agent.k > 0.0, "estimator coefficient k must be positive");
      std::vector<Configuration> believed;
      believed.reserve(menu.size());
      for (const auto& c : menu) {
        believed.emplace_back(c.id, c.rate, estimated_histogram(agent, c, sc.grid_step), c.tags);
      }
      std::size_t idx = 0;
      if (agent.config) {
        detail::require(*agent.config < menu.size(),
                        "agent '" + agent.name + "' config exceeds the menu of " + task.id);
        idx = *agent.config;
      } else {
        idx = select_configuration(believed, targets, u, sc.demand, sc.pricing).index;
      }
      Quote q;
      q.config = idx;
      q.estimate = believed[idx].histogram;
      q.claimed = interval_stats(q.estimate, menu[idx].rate, targets);
      if (agent.kind == AgentKind::Estimator || agent.lambda == 0.0) {
        q.outcome = price_contract(q.claimed, targets, u, sc.demand, sc.pricing);
      } else {
        auto params = sc.risk;
        params.lambda = agent.lambda;
        const auto bounds = RiskBounds::relative(q.claimed, agent.t_lo_frac, agent.t_hi_frac,
                                                 agent.c_lo_frac, agent.c_hi_frac);
        q.outcome = price_risk_aware(q.claimed, targets, bounds, params, u, sc.demand, sc.pricing);
      }
      return q;
    }
  }
  throw InvalidArgument("unknown agent kind");
}

/// Demand realization: E[M] rounded to the nearest nonnegative integer.
inline std::size_t realized_demand(double expected) {
  return expected > 0.0 ? static_cast<std::size_t>(std::llround(expected)) : 0;
}

/// Average realized profit of `accepted` contracts per realization. Completion
/// times come from a stream keyed by (task, configuration, realization), so
/// agents using the same configuration face the same executions.
inline double simulate_trials(const PriceSchedule& prices, const Configuration& truth,
                              std::size_t accepted, std::size_t task_index,
                              std::size_t config_index, const Scenario& sc) {
  if (accepted == 0 || sc.trials == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < sc.trials; ++r) {
    std::mt19937_64 rng(detail::stream_seed(sc.seed, {task_index, config_index, r}));
    for (std::size_t j = 0; j < accepted; ++j) {
      const double t = truth.histogram.quantile(detail::unit_uniform(rng));
      const auto s = settle(prices, truth.rate, t);
      total += s.payment - s.cost;
    }
  }
  return total / static_cast<double>(sc.trials);
}

inline Metrics run_market(const Scenario& sc) {
  Metrics metrics;
  const std::size_t nt = sc.tasks.size();

  // Best achievable profit per task with perfect knowledge.
  std::vector<double> optimal(nt);
  for (std::size_t ti = 0; ti < nt; ++ti) {
    const auto& task = sc.tasks[ti];
    const auto targets = task.targets();
    optimal[ti] = select_configuration(task.configs, targets, sc.utility(targets), sc.demand,
                                       sc.pricing)
                      .outcome.overall_profit;
  }

  struct Totals {
    double profit = 0, expected = 0, optimal = 0, utility = 0, accepted = 0, payment = 0;
  };
  std::vector<Totals> totals(sc.agents.size());

  for (std::size_t ai = 0; ai < sc.agents.size(); ++ai) {
    const auto& agent = sc.agents[ai];
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const auto& task = sc.tasks[ti];
      const auto targets = task.targets();
      const auto u = sc.utility(targets);
      const auto q = quote(agent, task, sc);
      const auto& truth = task.configs[q.config];
      const auto true_stats = interval_stats(truth.histogram, truth.rate, targets);

      MetricsRow row;
      row.agent = agent.name;
      row.task = task.id;
      row.config = truth.id;
      const std::size_t accepted =
          q.outcome.expected_profit > 0.0 ? realized_demand(q.outcome.expected_demand) : 0;
      row.accepted = static_cast<double>(accepted);
      row.profit = simulate_trials(q.outcome.prices, truth, accepted, ti, q.config, sc);
      row.expected_profit = overall_profit(q.outcome.prices, true_stats, u, sc.demand);
      row.optimal_profit = optimal[ti];
      row.utility = q.outcome.consumer_expected_utility;
      row.relative_loss =
          optimal[ti] > 0.0 ? relative_loss(optimal[ti], row.expected_profit) : kNaN;
      row.similarity = cosine_similarity(q.estimate, truth.histogram, sc.grid_step);
      double pay = 0.0;
      for (std::size_t i = 0; i < true_stats.size(); ++i) {
        pay += true_stats.p[i] * q.outcome.prices.at(i, true_stats.t_hat[i]);
      }
      row.payment = pay;

      auto& tot = totals[ai];
      tot.profit += row.profit;
      tot.expected += row.expected_profit;
      tot.optimal += row.optimal_profit;
      tot.utility += row.utility;
      tot.accepted += row.accepted;
      tot.payment += row.payment;
      metrics.rows.push_back(std::move(row));
    }
  }

  std::optional<double> expert_utility;
  for (std::size_t ai = 0; ai < sc.agents.size(); ++ai) {
    if (sc.agents[ai].kind == AgentKind::Expert && nt > 0) {
      expert_utility = totals[ai].utility / static_cast<double>(nt);
      break;
    }
  }
  for (std::size_t ai = 0; ai < sc.agents.size(); ++ai) {
    const auto& tot = totals[ai];
    MetricsRow row;
    row.agent = sc.agents[ai].name;
    row.task = "ALL";
    row.accepted = tot.accepted;
    row.profit = tot.profit;
    row.expected_profit = tot.expected;
    row.optimal_profit = tot.optimal;
    row.utility = nt > 0 ? tot.utility / static_cast<double>(nt) : kNaN;
    row.relative_loss = tot.optimal > 0.0 ? relative_loss(tot.optimal, tot.expected) : kNaN;
    row.payment = nt > 0 ? tot.payment / static_cast<double>(nt) : kNaN;
    if (expert_utility && *expert_utility != 0.0) {
      row.relative_utility = (row.utility - *expert_utility) / std::abs(*expert_utility);
    }
    metrics.rows.push_back(std::move(row));
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// Alternative-approach scenarios.

/// VCG with a fixed utility gap Δ between the best agent (truthful, using the
/// best configuration) and the runner-up. The consumer pays c_k + Δ/β_U per
/// interval and demand follows the utility actually delivered.
inline Metrics vcg_delta_market(const Scenario& sc, double delta) {
  detail::require(delta >= 0.0, "VCG delta must be nonnegative");
  Metrics metrics;
  MetricsRow total;
  total.agent = "vcg";
  total.task = "ALL";
  total.utility = 0.0;
  total.payment = 0.0;
  for (std::size_t ti = 0; ti < sc.tasks.size(); ++ti) {
    const auto& task = sc.tasks[ti];
    const auto targets = task.targets();
    const auto u = sc.utility(targets);
    auto best = select_configuration(task.configs, targets, u, sc.demand, sc.pricing);
    const auto& truth = task.configs[best.index];
    const auto& stats = best.stats;
    std::vector<double> omega(stats.size());
    for (std::size_t k = 0; k < stats.size(); ++k) omega[k] = stats.c[k] + delta / sc.beta_u;
    const auto payment = PriceSchedule::constant(targets, omega);

    MetricsRow row;
    row.agent = "vcg";
    row.task = task.id;
    row.config = truth.id;
    const double demand = expected_demand(payment, stats, u, sc.demand);
    const std::size_t accepted = delta > 0.0 ? realized_demand(demand) : 0;
    row.accepted = static_cast<double>(accepted);
    row.profit = simulate_trials(payment, truth, accepted, ti, best.index, sc);
    row.expected_profit = overall_profit(payment, stats, u, sc.demand);
    row.optimal_profit = best.outcome.overall_profit;
    row.utility = expected_utility(payment, stats, u);
    row.payment = stats.expected_cost() + delta / sc.beta_u;
    total.accepted += row.accepted;
    total.profit += row.profit;
    total.expected_profit += row.expected_profit;
    total.optimal_profit += row.optimal_profit;
    total.utility += row.utility;
    total.payment += row.payment;
    metrics.rows.push_back(std::move(row));
  }
  if (!sc.tasks.empty()) {
    total.utility /= static_cast<double>(sc.tasks.size());
    total.payment /= static_cast<double>(sc.tasks.size());
  }
  metrics.rows.push_back(std::move(total));
  return metrics;
}

/// Smallest repetition count R at which trying each configuration once and
/// then repeating the best gives strictly more cumulative utility than buying
/// the agent's contract every time; nullopt if that never happens.
inline std::optional<std::size_t> benchmark_crossover(std::span<const double> direct_utilities,
                                                      double agent_utility,
                                                      std::size_t max_repetitions = 1'000'000) {
  detail::require(!direct_utilities.empty(), "benchmarking needs at least one configuration");
  const double best = *std::max_element(direct_utilities.begin(), direct_utilities.end());
  double bench = 0.0, market = 0.0;
  for (std::size_t r = 1; r <= max_repetitions; ++r) {
    bench += r <= direct_utilities.size() ? direct_utilities[r - 1] : best;
    market += agent_utility;
    if (bench > market) return r;
    if (r >= direct_utilities.size() && best <= agent_utility) return std::nullopt;
  }
  return std::nullopt;
}

/// Cumulative consumer utility after `repetitions` runs: benchmarking versus
/// the expert agent's contract. Each row carries the task's crossover count.
inline Metrics benchmark_market(const Scenario& sc, std::size_t repetitions) {
  Metrics metrics;
  for (const auto& task : sc.tasks) {
    const auto targets = task.targets();
    const auto u = sc.utility(targets);
    std::vector<double> direct;
    for (const auto& c : task.configs) {
      const double t = c.histogram.mean();
      direct.push_back(-sc.alpha_u * t - sc.beta_u * c.rate * t);
    }
    const double agent_u =
        select_configuration(task.configs, targets, u, sc.demand, sc.pricing)
            .outcome.consumer_expected_utility;
    const auto cross = benchmark_crossover(direct, agent_u);
    const double best = *std::max_element(direct.begin(), direct.end());
    double bench = 0.0;
    for (std::size_t r = 1; r <= repetitions; ++r) {
      bench += r <= direct.size() ? direct[r - 1] : best;
    }
    MetricsRow b;
    b.agent = "benchmark";
    b.task = task.id;
    b.utility = bench;
    b.crossover = cross ? static_cast<double>(*cross) : kNaN;
    MetricsRow m = b;
    m.agent = "market";
    m.utility = agent_u * static_cast<double>(repetitions);
    metrics.rows.push_back(std::move(b));
    metrics.rows.push_back(std::move(m));
  }
  return metrics;
}

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepParameter { EstimatorK, RiskLambda, VcgDelta, BenchmarkRepetitions };

inline SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "estimator-k" || s == "k") return SweepParameter::EstimatorK;
  if (s == "risk-lambda" || s == "lambda") return SweepParameter::RiskLambda;
  if (s == "vcg-delta" || s == "delta") return SweepParameter::VcgDelta;
  if (s == "benchmark-repetitions" || s == "repetitions") return SweepParameter::BenchmarkRepetitions;
  throw InvalidArgument("unknown sweep parameter '" + s + "'");
}

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::EstimatorK: return "estimator-k";
    case SweepParameter::RiskLambda: return "risk-lambda";
    case SweepParameter::VcgDelta: return "vcg-delta";
    case SweepParameter::BenchmarkRepetitions: return "benchmark-repetitions";
  }
  return "";
}

struct SweepTable {
  SweepParameter parameter;
  std::vector<std::pair<double, Metrics>> blocks;
};

inline SweepTable sweep(const Scenario& base, SweepParameter parameter,
                        std::span<const double> values) {
  SweepTable table{parameter, {}};
  for (double v : values) {
    Scenario sc = base;
    switch (parameter) {
      case SweepParameter::EstimatorK: {
        detail::require(v > 0.0, "estimator coefficient must be positive");
        bool any = false;
        for (auto& a : sc.agents) {
          if (a.kind == AgentKind::Estimator || a.kind == AgentKind::RiskAware) {
            a.k = v;
            any = true;
          }
        }
        detail::require(any, "estimator-k sweep needs an estimator or risk-aware agent");
        table.blocks.emplace_back(v, run_market(sc));
        break;
      }
      case SweepParameter::RiskLambda: {
        detail::require(v >= 0.0, "risk lambda must be nonnegative");
        bool any = false;
        for (auto& a : sc.agents) {
          if (a.kind == AgentKind::RiskAware) {
            a.lambda = v;
            any = true;
          }
        }
        detail::require(any, "risk-lambda sweep needs a risk-aware agent");
        table.blocks.emplace_back(v, run_market(sc));
        break;
      }
      case SweepParameter::VcgDelta:
        table.blocks.emplace_back(v, vcg_delta_market(sc, v));
        break;
      case SweepParameter::BenchmarkRepetitions:
        detail::require(v >= 1.0 && v == std::floor(v), "repetitions must be a positive integer");
        table.blocks.emplace_back(v, benchmark_market(sc, static_cast<std::size_t>(v)));
        break;
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// Synthetic inputs.

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct WorkloadParams {
  std::size_t n_tasks = 20;
  std::size_t n_configs = 5;
  Range mean{1.0, 100.0};     // minutes
  Range variance{0.0, 5.0};   // minutes²
  Range rate{0.05, 0.5};      // cents per minute
  double grid_step = 0.1;
};

/// Tasks whose configurations have Gaussian completion times with uniformly
/// drawn means and variances, materialized on the histogram grid.
inline std::vector<SimTask> generate_synthetic_workload(std::uint64_t seed,
                                                        const WorkloadParams& wp) {
  detail::require(wp.n_tasks > 0 && wp.n_configs > 0, "workload needs tasks and configurations");
  detail::require(wp.mean.lo > 0.0 && wp.mean.hi >= wp.mean.lo, "degenerate mean range");
  detail::require(wp.variance.lo >= 0.0 && wp.variance.hi >= wp.variance.lo,
                  "degenerate variance range");
  detail::require(wp.rate.lo > 0.0 && wp.rate.hi >= wp.rate.lo, "degenerate rate range");
  std::mt19937_64 rng(detail::stream_seed(seed, {0x776f726bULL}));
  auto draw = [&](Range r) { return r.lo + (r.hi - r.lo) * detail::unit_uniform(rng); };
  std::vector<SimTask> tasks;
  for (std::size_t t = 0; t < wp.n_tasks; ++t) {
    SimTask task;
    task.id = "task" + std::to_string(t);
    task.intensity = detail::unit_uniform(rng) < 0.5 ? "cpu" : "io";
    for (std::size_t c = 0; c < wp.n_configs; ++c) {
      const double mean = draw(wp.mean);
      const double sd = std::sqrt(draw(wp.variance));
      const double rate = draw(wp.rate);
      const std::string best_for = detail::unit_uniform(rng) < 0.5 ? "cpu" : "io";
      task.configs.emplace_back("cfg" + std::to_string(c), rate,
                                CompletionHistogram::gaussian(mean, sd, wp.grid_step),
                                std::map<std::string, std::string>{{"best_for", best_for}});
    }
    tasks.push_back(std::move(task));
  }
  return tasks;
}

struct DagParams {
  std::size_t n_options = 5;
  Range time_mean{1.0, 100.0};
  Range time_variance{0.0, 5.0};
  Range cost_mean{1.0, 100.0};
  Range cost_variance{0.0, 5.0};
  double grid_step = 0.1;
  /// Edges only join nodes at most this many positions apart (0 = unlimited).
  std::size_t window = 0;
};

/// Random DAG on nodes 0..n−1 with each forward edge present with
/// probability `edge_density`. Options use expected time and cost of
/// Gaussian histograms.
inline TaskGraph generate_synthetic_dag(std::uint64_t seed, std::size_t n_nodes,
                                        double edge_density, const DagParams& dp = {}) {
  detail::require(n_nodes >= 1, "a task graph needs at least one node");
  detail::require(edge_density >= 0.0 && edge_density <= 1.0, "edge density must lie in [0,1]");
  detail::require(dp.n_options >= 1, "subtasks need at least one option");
  std::mt19937_64 rng(detail::stream_seed(seed, {0x646167ULL, n_nodes}));
  auto draw = [&](Range r) { return r.lo + (r.hi - r.lo) * detail::unit_uniform(rng); };
  TaskGraph g;
  for (std::size_t v = 0; v < n_nodes; ++v) {
    std::vector<TaskOption> opts;
    for (std::size_t k = 0; k < dp.n_options; ++k) {
      const double t = CompletionHistogram::gaussian(draw(dp.time_mean),
                                                     std::sqrt(draw(dp.time_variance)),
                                                     dp.grid_step)
                           .mean();
      const double c = CompletionHistogram::gaussian(draw(dp.cost_mean),
                                                     std::sqrt(draw(dp.cost_variance)),
                                                     dp.grid_step)
                           .mean();
      opts.push_back({t, c});
    }
    g.add_node("n" + std::to_string(v), std::move(opts));
  }
  for (std::size_t j = 1; j < n_nodes; ++j) {
    const std::size_t first = dp.window == 0 || j <= dp.window ? 0 : j - dp.window;
    for (std::size_t i = first; i < j; ++i) {
      if (detail::unit_uniform(rng) < edge_density) g.add_edge(i, j);
    }
  }
  return g;
}

/// Random in-tree: every node except the root feeds exactly one later node.
inline TaskGraph generate_synthetic_tree(std::uint64_t seed, std::size_t n_nodes,
                                         std::size_t n_options, Range time, Range cost) {
  detail::require(n_nodes >= 1 && n_options >= 1, "tree needs nodes and options");
  std::mt19937_64 rng(detail::stream_seed(seed, {0x74726565ULL, n_nodes}));
  auto draw_int = [&](Range r) {
    return std::floor(r.lo + (r.hi - r.lo + 1.0) * detail::unit_uniform(rng));
  };
  TaskGraph g;
  for (std::size_t v = 0; v < n_nodes; ++v) {
    std::vector<TaskOption> opts;
    for (std::size_t k = 0; k < n_options; ++k) opts.push_back({draw_int(time), draw_int(cost)});
    g.add_node("n" + std::to_string(v), std::move(opts));
  }
  for (std::size_t v = 0; v + 1 < n_nodes; ++v) {
    const std::size_t span = n_nodes - v - 1;
    const auto parent = v + 1 + static_cast<std::size_t>(detail::unit_uniform(rng) * span);
    g.add_edge(v, std::min(parent, n_nodes - 1));
  }
  return g;
}

/// Profit of DP, Greedy, the best single-option (coarse) assignment, and
/// exhaustive Search when it fits under the cap.
struct DagStudyRow {
  std::size_t nodes = 0;
  std::size_t repetition = 0;
  double dp = 0.0;
  double greedy = 0.0;
  double coarse = 0.0;
  double search = kNaN;
};

inline std::vector<DagStudyRow> dag_strategy_study(std::uint64_t seed,
                                                   std::span<const std::size_t> sizes,
                                                   std::size_t repetitions, double edge_density,
                                                   const ProfitFunction& profit,
                                                   const DagParams& dp = {},
                                                   double search_cap = 1e6) {
  std::vector<DagStudyRow> rows;
  for (std::size_t n : sizes) {
    for (std::size_t r = 0; r < repetitions; ++r) {
      const auto g = generate_synthetic_dag(detail::stream_seed(seed, {n, r}), n, edge_density, dp);
      DagStudyRow row;
      row.nodes = n;
      row.repetition = r;
      row.dp = price_fine_grained_dp(g, profit).profit;
      row.greedy = price_greedy(g, profit).profit;
      row.coarse = -kInfinity;
      for (std::size_t k = 0; k < dp.n_options; ++k) {
        row.coarse = std::max(row.coarse, price_uniform(g, k, profit).profit);
      }
      try {
        row.search = price_exhaustive(g, profit, search_cap).profit;
      } catch (const CapExceeded&) {
        row.search = kNaN;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace cmarket
