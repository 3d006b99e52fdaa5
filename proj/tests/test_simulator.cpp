#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cmarket/simulator.hpp"

using namespace cmarket;

namespace {

AgentModel make_agent(std::string name, AgentKind kind) {
  AgentModel a;
  a.name = std::move(name);
  a.kind = kind;
  return a;
}

Scenario expert_and_naive(std::uint64_t seed) {
  Scenario sc;
  sc.seed = seed;
  sc.demand = DemandCurve(400.0, 2.0);
  sc.tasks = generate_synthetic_workload(seed, WorkloadParams{});
  sc.agents.push_back(make_agent("expert", AgentKind::Expert));
  for (std::size_t c = 0; c < 5; ++c) {
    auto a = make_agent("naive" + std::to_string(c), AgentKind::NaiveFixed);
    a.config = c;
    sc.agents.push_back(a);
  }
  return sc;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(RelativeLoss, Arithmetic) {
  EXPECT_DOUBLE_EQ(relative_loss(100.0, 100.0), 0.0);
  EXPECT_DOUBLE_EQ(relative_loss(100.0, 75.0), 0.25);
  EXPECT_THROW(relative_loss(0.0, 1.0), InvalidArgument);
}

TEST(SyntheticWorkload, ShapeAndDeterminism) {
  const auto a = generate_synthetic_workload(5, WorkloadParams{});
  const auto b = generate_synthetic_workload(5, WorkloadParams{});
  ASSERT_EQ(a.size(), 20u);
  for (std::size_t t = 0; t < a.size(); ++t) {
    ASSERT_EQ(a[t].configs.size(), 5u);
    for (std::size_t c = 0; c < 5; ++c) {
      const double mean = a[t].configs[c].histogram.mean();
      EXPECT_GE(mean, 1.0 - 0.05);
      EXPECT_LE(mean, 100.0 + 0.05);
      EXPECT_EQ(a[t].configs[c].histogram.bins(), b[t].configs[c].histogram.bins());
      EXPECT_EQ(a[t].configs[c].rate, b[t].configs[c].rate);
    }
  }
  EXPECT_NE(generate_synthetic_workload(6, WorkloadParams{})[0].configs[0].rate, a[0].configs[0].rate);
}

TEST(SyntheticWorkload, ZeroVarianceGivesPointMasses) {
  WorkloadParams wp;
  wp.variance = {0.0, 0.0};
  for (const auto& task : generate_synthetic_workload(1, wp)) {
    for (const auto& c : task.configs) {
      ASSERT_EQ(c.histogram.bins().size(), 1u);
      EXPECT_TRUE(c.histogram.bins()[0].is_point());
    }
  }
  wp.mean = {5.0, 1.0};
  EXPECT_THROW(generate_synthetic_workload(1, wp), InvalidArgument);
}

TEST(SyntheticDag, EdgeCasesAndReproducibility) {
  EXPECT_EQ(generate_synthetic_dag(1, 1, 0.5).size(), 1u);
  EXPECT_TRUE(generate_synthetic_dag(1, 30, 0.0).edges().empty());
  const auto a = generate_synthetic_dag(9, 154, 0.05);
  const auto b = generate_synthetic_dag(9, 154, 0.05);
  EXPECT_EQ(a.size(), 154u);
  EXPECT_EQ(a.edges(), b.edges());
  EXPECT_EQ(topological_sort(a).size(), 154u);
  for (auto [from, to] : a.edges()) EXPECT_LT(from, to);
}

TEST(Settlement, PaymentIsScheduleAtRealizedTime) {
  const Targets targets = Targets::from_deadlines(std::vector<double>{10.0});
  const PriceSchedule prices(targets, {{5.0, 0.1}, {2.0, 0.0}});
  for (double t : {0.0, 3.3, 9.99, 10.0, 42.0}) {
    const auto s = settle(prices, 0.25, t);
    EXPECT_EQ(s.payment, prices.eval(t));
    EXPECT_EQ(s.cost, 0.25 * t);
  }
}

TEST(RunMarket, ExpertDominatesNaive) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = run_market(expert_and_naive(seed));
    const auto& e = m.summary("expert");
    for (std::size_t c = 0; c < 5; ++c) {
      const auto& n = m.summary("naive" + std::to_string(c));
      EXPECT_GE(e.expected_profit, n.expected_profit);
      EXPECT_GE(e.utility, n.utility);
    }
    EXPECT_NEAR(e.relative_loss, 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(e.relative_utility, 0.0);
  }
}

TEST(RunMarket, Deterministic) {
  const auto sc = expert_and_naive(17);
  EXPECT_TRUE(run_market(sc) == run_market(sc));
}

TEST(RunMarket, ZeroDemandMeansNoProfit) {
  auto sc = expert_and_naive(4);
  sc.demand = DemandCurve(1e-3, 1.0);
  for (const auto& row : run_market(sc).rows) {
    EXPECT_EQ(row.accepted, 0.0);
    EXPECT_EQ(row.profit, 0.0);
  }
}

TEST(RunMarket, OnlyProfitableQuotesReachTrials) {
  auto sc = expert_and_naive(8);
  sc.demand = DemandCurve(150.0, 1.0);  // some tasks fall into the ε branch
  sc.agents.push_back(make_agent("guess", AgentKind::Estimator));
  sc.agents.back().k = 0.6;
  for (const auto& row : run_market(sc).rows) {
    if (row.task == "ALL" || row.accepted == 0.0) continue;
    const auto& task = *std::find_if(sc.tasks.begin(), sc.tasks.end(),
                                     [&](const SimTask& t) { return t.id == row.task; });
    const auto& agent = *std::find_if(sc.agents.begin(), sc.agents.end(),
                                      [&](const AgentModel& a) { return a.name == row.agent; });
    EXPECT_GT(quote(agent, task, sc).outcome.expected_profit, 0.0);
  }
}

TEST(RunMarket, HeuristicFollowsIntensityTag) {
  auto sc = expert_and_naive(5);
  sc.agents = {make_agent("tagged", AgentKind::Heuristic)};
  for (const auto& task : sc.tasks) {
    const auto q = quote(sc.agents[0], task, sc);
    const auto it = task.configs[q.config].tags.find("best_for");
    const bool any = std::any_of(task.configs.begin(), task.configs.end(), [&](const Configuration& c) {
      auto t = c.tags.find("best_for");
      return t != c.tags.end() && t->second == task.intensity;
    });
    if (any) {
      EXPECT_EQ(it->second, task.intensity);
    }
  }
}

TEST(Sweep, PerfectEstimatesLoseNothing) {
  WorkloadParams wp;
  wp.variance = {0.0, 0.0};
  Scenario sc;
  sc.demand = DemandCurve(400.0, 2.0);
  sc.tasks = generate_synthetic_workload(3, wp);
  auto est = make_agent("est", AgentKind::Estimator);
  est.sigma = 0.0;
  sc.agents = {est};
  const std::vector<double> ks{1.0};
  const auto table = sweep(sc, SweepParameter::EstimatorK, ks);
  EXPECT_NEAR(table.blocks[0].second.summary("est").relative_loss, 0.0, 1e-6);
}

TEST(Sweep, LambdaBlocksAndTrend) {
  Scenario sc;
  sc.seed = 10;
  sc.demand = DemandCurve(400.0, 2.0);
  sc.tasks = generate_synthetic_workload(sc.seed, WorkloadParams{});
  auto risky = make_agent("cautious", AgentKind::RiskAware);
  risky.k = 1.3;
  risky.t_lo_frac = risky.c_lo_frac = -0.25;
  risky.t_hi_frac = risky.c_hi_frac = 0.0;
  sc.agents = {risky};
  const std::vector<double> lambdas{0.0, 1.0, 10.0};
  const auto table = sweep(sc, SweepParameter::RiskLambda, lambdas);
  ASSERT_EQ(table.blocks.size(), 3u);
  for (std::size_t i = 1; i < 3; ++i) {
    EXPECT_LE(table.blocks[i].second.summary("cautious").relative_loss,
              table.blocks[i - 1].second.summary("cautious").relative_loss + 1e-12);
  }
  EXPECT_THROW(sweep(expert_and_naive(1), SweepParameter::RiskLambda, lambdas), InvalidArgument);
  EXPECT_THROW(parse_sweep_parameter("gamma"), InvalidArgument);
}

TEST(Sweep, FairnessCorrelationNonNegative) {
  Scenario sc;
  sc.seed = 12;
  sc.demand = DemandCurve(400.0, 2.0);
  sc.tasks = generate_synthetic_workload(sc.seed, WorkloadParams{});
  auto est = make_agent("est", AgentKind::Estimator);
  est.sigma = 0.55;
  sc.agents = {est};
  for (double k : {0.8, 1.2, 1.5}) {
    sc.agents[0].k = k;
    std::vector<double> sim, keep;
    for (const auto& row : run_market(sc).rows) {
      if (row.task == "ALL" || std::isnan(row.relative_loss)) continue;
      sim.push_back(row.similarity);
      keep.push_back(1.0 - row.relative_loss);
    }
    EXPECT_GE(pearson(ranks(sim), ranks(keep)), 0.0) << "k = " << k;
  }
}

TEST(Benchmark, CrossoverMatchesBreakEven) {
  // Bench: −10, then −4 forever; market: −5 per run. −14 − 4(R − 2) > −5R ⇔ R > 6.
  const std::vector<double> direct{-10.0, -4.0};
  EXPECT_EQ(benchmark_crossover(direct, -5.0), std::optional<std::size_t>(7));
  EXPECT_EQ(benchmark_crossover(direct, -4.0), std::nullopt);
  EXPECT_EQ(benchmark_crossover(std::vector<double>{-1.0}, -5.0), std::optional<std::size_t>(1));
}

TEST(VcgDeltaMarket, PaymentTracksDelta) {
  auto sc = expert_and_naive(2);
  const auto zero = vcg_delta_market(sc, 0.0);
  const auto some = vcg_delta_market(sc, 3.0);
  EXPECT_EQ(zero.summary("vcg").accepted, 0.0);
  EXPECT_NEAR(some.summary("vcg").payment - zero.summary("vcg").payment, 3.0 / sc.beta_u, 1e-9);
  EXPECT_THROW(vcg_delta_market(sc, -1.0), InvalidArgument);
}
