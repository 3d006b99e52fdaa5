// cmarket: price contracts, plan task graphs, run market simulations, and
// evaluate the VCG and Bertrand alternatives from the command line.
//
// Exit codes: 0 success, 1 usage, 2 invalid input, 3 infeasible pricing,
// 4 search cap exceeded, 5 no convergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cmarket/auction.hpp"
#include "cmarket/bertrand.hpp"
#include "cmarket/core.hpp"
#include "cmarket/error.hpp"
#include "cmarket/io.hpp"
#include "cmarket/pricing.hpp"
#include "cmarket/risk.hpp"
#include "cmarket/simulator.hpp"
#include "cmarket/taskgraph.hpp"

namespace {

using namespace cmarket;
using io::json;

enum Exit { kOk = 0, kUsage = 1, kInput = 2, kInfeasible = 3, kCap = 4, kConvergence = 5 };

struct PriceArgs {
  std::string workload;
  std::string task;
  std::string config;
  double risk_lambda = 0.0;
  double epsilon = PricingConstants{}.epsilon;
  std::vector<double> bounds{-0.1, 0.1};
  double tv_radius = RiskParams{}.tv_radius;
};

int cmd_price(const PriceArgs& a) {
  const auto doc = io::Document::from_file(a.workload);
  const auto w = io::read_workload(doc);
  const auto& task = w.task(a.task);
  const auto [targets, u] = w.pricing_frame(task);
  const PricingConstants consts{a.epsilon};

  std::size_t idx = 0;
  IntervalStats stats;
  PricingOutcome outcome;
  if (a.config.empty()) {
    auto choice = select_configuration(task.configs, targets, u, w.demand, consts);
    idx = choice.index;
    stats = std::move(choice.stats);
    outcome = std::move(choice.outcome);
  } else {
    while (idx < task.configs.size() && task.configs[idx].id != a.config) ++idx;
    if (idx == task.configs.size()) {
      throw InvalidArgument("task '" + task.id + "' has no configuration '" + a.config + "'");
    }
    const auto& c = task.configs[idx];
    stats = interval_stats(c.histogram, c.rate, targets);
    outcome = price_contract(stats, targets, u, w.demand, consts);
  }

  if (a.risk_lambda > 0.0) {
    RiskParams params;
    params.lambda = a.risk_lambda;
    params.tv_radius = a.tv_radius;
    const auto bounds = RiskBounds::relative(stats, a.bounds[0], a.bounds[1]);
    outcome = price_risk_aware(stats, targets, bounds, params, u, w.demand, consts);
  }
  if (!(outcome.expected_demand > 0.0)) {
    throw InfeasibleError("no price for task '" + task.id +
                          "' attracts positive demand with positive profit");
  }

  Contract contract;
  contract.task = task.id;
  contract.stats = task.stats;
  contract.targets = targets;
  contract.probs = stats.p;
  contract.expected_times = stats.t_hat;
  contract.prices = outcome.prices;
  contract.validate();

  json out = {{"configuration", task.configs[idx].id},
              {"contract", io::write_contract(contract)},
              {"outcome", io::write_outcome(outcome)}};
  if (a.risk_lambda > 0.0) out["risk_lambda"] = a.risk_lambda;
  std::cout << out.dump(2) << '\n';
  return kOk;
}

struct PlanArgs {
  std::string dag;
  std::string strategy = "dp";
  double granularity = 1.0;
  double cap = kDefaultSearchCap;
  double epsilon = PricingConstants{}.epsilon;
};

int cmd_plan(const PlanArgs& a) {
  const auto doc = io::Document::from_file(a.dag);
  const auto d = io::read_dag(doc);
  const auto profit = d.profit(a.epsilon);
  Assignment result;
  if (a.strategy == "dp") result = price_fine_grained_dp(d.graph, profit, a.granularity);
  else if (a.strategy == "greedy") result = price_greedy(d.graph, profit);
  else result = price_exhaustive(d.graph, profit, a.cap);
  auto out = io::write_assignment(d.graph, result);
  out["strategy"] = a.strategy;
  std::cout << out.dump(2) << '\n';
  return kOk;
}

struct SimulateArgs {
  std::string scenario;
  std::string out = "-";
  std::vector<std::string> sweep;  // parameter name, optionally followed by its values
  std::vector<double> values;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto doc = io::Document::from_file(a.scenario);
  const auto file = io::read_scenario(doc);
  const auto sc = file.materialize(a.seed);

  std::ostringstream csv;
  if (a.sweep.empty()) {
    io::write_metrics_csv(csv, run_market(sc));
  } else {
    std::vector<double> values = a.values;
    if (a.sweep.size() == 2) {
      std::istringstream list(a.sweep[1]);
      for (std::string item; std::getline(list, item, ',');) {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(item, &used);
        } catch (const std::exception&) {
        }
        if (used == 0 || used != item.size()) {
          throw InvalidArgument("sweep value '" + item + "' is not a number");
        }
        values.push_back(v);
      }
    }
    if (values.empty()) throw InvalidArgument("--sweep needs values");
    io::write_sweep_csv(csv, sweep(sc, parse_sweep_parameter(a.sweep[0]), values));
  }

  if (a.out == "-") {
    std::cout << csv.str();
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write '" + a.out + "'");
    f << csv.str();
  }
  return kOk;
}

int cmd_vcg(const std::string& path) {
  const auto doc = io::Document::from_file(path);
  const auto f = io::read_bids(doc);
  const auto outcome = run_vcg(f.bids, f.utility);
  json payoffs = json::array();
  for (const auto& b : f.bids) {
    payoffs.push_back({{"agent", b.agent}, {"payoff", io::round12(vcg_payoff(outcome, f.bids, b.agent))}});
  }
  json out = {{"winner", outcome.winner},
              {"winner_utility", io::round12(outcome.winner_utility)},
              {"runner_up_utility", io::round12(outcome.runner_up_utility)},
              {"delta", io::round12(outcome.delta)},
              {"payment", io::write_prices(outcome.payment)},
              {"payoffs", std::move(payoffs)}};
  std::cout << out.dump(2) << '\n';
  return kOk;
}

struct BertrandArgs {
  double gamma = 10.0, alpha = 2.0, beta = 1.0;
  std::vector<double> agent1, agent2;  // gamma, alpha, beta
  std::string schedule = "sync";
  std::string prefix;
  std::vector<double> init{0.0, 0.0};
  double tol = 1e-9;
  std::size_t max_steps = 1'000'000;
};

std::vector<Update> parse_updates(const std::string& s) {
  std::vector<Update> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "1") out.push_back(Update::AgentOne);
    else if (tok == "2") out.push_back(Update::AgentTwo);
    else if (tok == "b" || tok == "both") out.push_back(Update::Both);
    else if (!tok.empty()) throw InvalidArgument("unknown update '" + tok + "' (use 1, 2 or b)");
  }
  return out;
}

int cmd_bertrand(const BertrandArgs& a) {
  auto params = DuopolyParams::identical(a.gamma, a.alpha, a.beta);
  if (!a.agent1.empty()) params.agent[0] = {a.agent1[0], a.agent1[1], a.agent1[2]};
  if (!a.agent2.empty()) params.agent[1] = {a.agent2[0], a.agent2[1], a.agent2[2]};

  UpdateSchedule schedule;
  if (a.schedule == "sync") schedule = UpdateSchedule::synchronized();
  else if (a.schedule == "alternating") schedule = UpdateSchedule::alternating();
  else schedule.cycle = parse_updates(a.schedule);
  schedule.prefix = parse_updates(a.prefix);

  const auto ne = nash_equilibrium(params);
  if (!ne.nonnegative()) {
    std::cerr << "warning: the Nash equilibrium has a negative price\n";
  }
  const auto r = iterate_to_equilibrium(params, schedule, {a.init[0], a.init[1]}, a.tol, a.max_steps);
  std::cout << "ne_mu1,ne_mu2,mu1,mu2,steps,contraction\n"
            << io::csv_number(ne.prices.mu1) << ',' << io::csv_number(ne.prices.mu2) << ','
            << io::csv_number(r.prices.mu1) << ',' << io::csv_number(r.prices.mu2) << ','
            << r.steps << ',' << io::csv_number(params.contraction()) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contract pricing and market simulation for cloud analytics"};
  app.require_subcommand(1);

  PriceArgs price;
  auto* p = app.add_subcommand("price", "Price one task of a workload file");
  p->add_option("workload", price.workload, "Workload JSON file")->required();
  p->add_option("task", price.task, "Task id")->required();
  p->add_option("--config", price.config, "Price this configuration instead of the best one");
  p->add_option("--risk-lambda", price.risk_lambda, "Risk aversion weight")->check(CLI::NonNegativeNumber);
  p->add_option("--epsilon", price.epsilon, "Minimum markup in cents")->check(CLI::PositiveNumber);
  p->add_option("--risk-bounds", price.bounds, "Relative error box lo,hi for time and cost")
      ->delimiter(',')
      ->expected(2);
  p->add_option("--tv-radius", price.tv_radius, "Total-variation radius for probabilities")
      ->check(CLI::Range(0.0, 1.0));

  PlanArgs plan;
  auto* pl = app.add_subcommand("plan", "Choose a configuration per subtask of a task graph");
  pl->add_option("dag", plan.dag, "Task graph JSON file")->required();
  pl->add_option("--strategy", plan.strategy, "dp, greedy or search")
      ->check(CLI::IsMember({"dp", "greedy", "search"}));
  pl->add_option("--granularity", plan.granularity, "Time step in minutes")->check(CLI::PositiveNumber);
  pl->add_option("--cap", plan.cap, "Largest number of assignments search may enumerate");
  pl->add_option("--epsilon", plan.epsilon, "Minimum markup in cents")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Run a market scenario and write metrics as CSV");
  s->add_option("scenario", sim.scenario, "Scenario JSON file")->required();
  s->add_option("--out", sim.out, "CSV output path, - for stdout");
  s->add_option("--sweep", sim.sweep,
                "PARAM [VALUES]: estimator-k, risk-lambda, vcg-delta or benchmark-repetitions, "
                "optionally followed by comma-separated values")
      ->expected(1, 2);
  s->add_option("--values", sim.values, "Comma-separated sweep values (alternative to inline values)")->delimiter(',');
  s->add_option("--seed", sim.seed, "Override the scenario seed");

  std::string bids;
  auto* v = app.add_subcommand("vcg", "Run a VCG auction over a bid file");
  v->add_option("bids", bids, "Bid JSON file")->required();

  BertrandArgs bert;
  auto* b = app.add_subcommand("bertrand", "Iterate best responses in a Bertrand duopoly");
  b->add_option("--gamma", bert.gamma, "Demand intercept for both agents");
  b->add_option("--alpha", bert.alpha, "Own-price sensitivity for both agents");
  b->add_option("--beta", bert.beta, "Cross-price sensitivity for both agents");
  b->add_option("--agent1", bert.agent1, "gamma,alpha,beta of agent 1")->delimiter(',')->expected(3);
  b->add_option("--agent2", bert.agent2, "gamma,alpha,beta of agent 2")->delimiter(',')->expected(3);
  b->add_option("--schedule", bert.schedule, "sync, alternating, or a cycle such as 1,2,b");
  b->add_option("--prefix", bert.prefix, "Updates applied once before the cycle, e.g. 1,1,2");
  b->add_option("--init", bert.init, "Starting prices mu1,mu2")->delimiter(',')->expected(2);
  b->add_option("--tol", bert.tol, "Distance to the equilibrium that counts as converged")
      ->check(CLI::PositiveNumber);
  b->add_option("--max-steps", bert.max_steps, "Iteration limit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*p) return cmd_price(price);
    if (*pl) return cmd_plan(plan);
    if (*s) return cmd_simulate(sim);
    if (*v) return cmd_vcg(bids);
    if (*b) return cmd_bertrand(bert);
  } catch (const io::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCap;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConvergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kUsage;
}
