#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "cmarket/simulator.hpp"
#include "cmarket/taskgraph.hpp"

using namespace cmarket;

namespace {

TaskGraph query_plan() {
  TaskGraph g;
  g.add_node("select", {{5.0, 1.0}});
  g.add_node("aggregate", {{2.0, 4.0}, {5.0, 2.0}});
  g.add_node("join", {{1.0, 1.0}});
  g.add_edge("select", "join");
  g.add_edge("aggregate", "join");
  return g;
}

ProfitFunction unit_profit(double gamma) {
  return linear_profit(1.0, 1.0, DemandCurve(gamma, 1.0));
}

TaskGraph graph_of(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  TaskGraph g;
  for (std::size_t v = 0; v < n; ++v) g.add_node(std::string(1, static_cast<char>('a' + v)), {{1.0, 1.0}});
  for (auto [a, b] : edges) g.add_edge(a, b);
  return g;
}

}  // namespace

TEST(TopologicalSort, Chain) {
  const auto g = graph_of(3, {{1, 2}, {0, 1}});
  EXPECT_EQ(topological_sort(g), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(TopologicalSort, EdgelessIsIdOrder) {
  EXPECT_EQ(topological_sort(graph_of(3, {})), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(TopologicalSort, Diamond) {
  const auto order = topological_sort(graph_of(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}}));
  EXPECT_EQ(order.front(), 0u);
  EXPECT_EQ(order.back(), 3u);
}

TEST(TopologicalSort, CycleNamesAnEdge) {
  const auto g = graph_of(3, {{0, 1}, {1, 2}, {2, 1}});
  try {
    topological_sort(g);
    FAIL() << "cycle not detected";
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    EXPECT_TRUE(what.find("b -> c") != std::string::npos || what.find("c -> b") != std::string::npos)
        << what;
  }
}

TEST(TaskGraph, RejectsBadInput) {
  TaskGraph g;
  EXPECT_THROW(g.add_node("x", {}), InvalidArgument);
  EXPECT_THROW(g.add_node("x", {{-1.0, 1.0}}), InvalidArgument);
  g.add_node("x", {{1.0, 1.0}});
  EXPECT_THROW(g.add_node("x", {{1.0, 1.0}}), InvalidArgument);
  EXPECT_THROW(g.add_edge(0, 0), InvalidArgument);
  EXPECT_THROW(g.add_edge("x", "nope"), InvalidArgument);
}

TEST(FineGrainedDp, QueryPlanPicksSlowerCheaperAggregate) {
  const auto g = query_plan();
  const auto dp = price_fine_grained_dp(g, unit_profit(100.0));
  EXPECT_EQ(dp.choice, (std::vector<std::size_t>{0, 1, 0}));
  EXPECT_EQ(dp.total_time, 6.0);
  EXPECT_EQ(dp.total_cost, 4.0);
  EXPECT_DOUBLE_EQ(dp.profit, 2025.0);

  const auto search = price_exhaustive(g, unit_profit(100.0));
  EXPECT_EQ(search.choice, dp.choice);
}

TEST(Greedy, QueryPlanPicksFasterAggregate) {
  const auto greedy = price_greedy(query_plan(), unit_profit(100.0));
  EXPECT_EQ(greedy.choice, (std::vector<std::size_t>{0, 0, 0}));
  EXPECT_EQ(greedy.total_time, 6.0);
  EXPECT_EQ(greedy.total_cost, 6.0);
  EXPECT_DOUBLE_EQ(greedy.profit, 1936.0);
}

TEST(FineGrainedDp, SingleNode) {
  TaskGraph g;
  g.add_node("only", {{3.0, 2.0}});
  const auto a = price_fine_grained_dp(g, unit_profit(100.0));
  EXPECT_EQ(a.total_time, 3.0);
  EXPECT_EQ(a.total_cost, 2.0);
  EXPECT_EQ(price_greedy(g, unit_profit(100.0)).choice, a.choice);
}

TEST(Exhaustive, CapExceeded) {
  const auto g = generate_synthetic_tree(1, 12, 3, {1.0, 9.0}, {1.0, 9.0});
  EXPECT_THROW(price_exhaustive(g, unit_profit(300.0), 1000.0), CapExceeded);
}

TEST(FineGrainedDp, MatchesExhaustiveOnTrees) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t n = 1 + seed % 12;
    const auto g = generate_synthetic_tree(seed, n, 1 + seed % 3, {1.0, 9.0}, {1.0, 9.0});
    ASSERT_TRUE(g.is_tree());
    const auto profit = unit_profit(300.0);
    EXPECT_EQ(price_fine_grained_dp(g, profit).profit, price_exhaustive(g, profit).profit)
        << "seed " << seed;
  }
}

TEST(FineGrainedDp, FullTwelveNodeTree) {
  const auto g = generate_synthetic_tree(99, 12, 2, {1.0, 9.0}, {1.0, 9.0});
  const auto profit = unit_profit(300.0);
  EXPECT_EQ(price_fine_grained_dp(g, profit).profit, price_exhaustive(g, profit).profit);
}

TEST(FineGrainedDp, DominatesGreedyAndUniform) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    DagParams params;
    params.n_options = 3;
    const auto g = generate_synthetic_dag(seed, 6 + seed % 10, 0.3, params);
    const auto profit = unit_profit(3000.0);
    const auto dp = price_fine_grained_dp(g, profit, 0.5);
    EXPECT_GE(dp.profit, price_greedy(g, profit).profit - 1e-9) << "seed " << seed;

    const auto tree = generate_synthetic_tree(seed, 8, 3, {1.0, 9.0}, {1.0, 9.0});
    const auto tree_dp = price_fine_grained_dp(tree, profit).profit;
    for (std::size_t k = 0; k < 3; ++k) EXPECT_GE(tree_dp, price_uniform(tree, k, profit).profit);
  }
}

TEST(FineGrainedDp, TableIsMonotoneAndMinTimeIsFeasible) {
  DagParams params;
  params.n_options = 3;
  const auto g = generate_synthetic_dag(7, 12, 0.3, params);
  const auto profit = unit_profit(3000.0);
  const auto run = run_fine_grained_dp(g, profit, 1.0, Discrepancy::MinTime);
  for (const auto& row : run.table.f) {
    for (std::size_t t = 1; t < row.size(); ++t) EXPECT_LE(row[t], row[t - 1]);
  }
  for (std::size_t v = 0; v < g.size(); ++v) EXPECT_EQ(run.table.cost(v, 0), kInfinity);
  EXPECT_GT(run.table.bound_t, 0u);
  // The realized assignment fits the horizon.
  EXPECT_LE(run.assignment.total_time, run.table.bound_t * run.table.granularity + 1e-9);
}

TEST(Knapsack, SmallInstances) {
  const std::vector<KnapsackItem> two{{2.0, 3.0}, {3.0, 4.0}};
  const auto inst = knapsack_to_graph(two, 4.0);
  EXPECT_DOUBLE_EQ(price_fine_grained_dp(inst.graph, inst.profit).profit, 4.0);

  const auto all = knapsack_to_graph(two, 10.0);
  EXPECT_DOUBLE_EQ(price_fine_grained_dp(all.graph, all.profit).profit, 7.0);

  const auto none = knapsack_to_graph(two, 0.0);
  EXPECT_DOUBLE_EQ(price_fine_grained_dp(none.graph, none.profit).profit, 0.0);

  EXPECT_THROW(knapsack_to_graph(std::vector<KnapsackItem>{}, 1.0), InvalidArgument);
}

TEST(Knapsack, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> count(1, 10), weight(1, 10), value(1, 20), cap(0, 30);
  for (int k = 0; k < 30; ++k) {
    std::vector<KnapsackItem> items(static_cast<std::size_t>(count(rng)));
    for (auto& it : items) it = {static_cast<double>(weight(rng)), static_cast<double>(value(rng))};
    const double w = cap(rng);
    double best = 0.0;
    for (unsigned mask = 0; mask < (1u << items.size()); ++mask) {
      double tw = 0.0, tv = 0.0;
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (mask >> i & 1u) tw += items[i].weight, tv += items[i].value;
      }
      if (tw <= w) best = std::max(best, tv);
    }
    const auto inst = knapsack_to_graph(items, w);
    EXPECT_DOUBLE_EQ(price_fine_grained_dp(inst.graph, inst.profit).profit, best);
  }
}
