#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cmarket/pricing.hpp"

using namespace cmarket;

namespace {

IntervalStats single(double t_hat, double c) { return IntervalStats{{1.0}, {t_hat}, {c}}; }

// Independent oracle: aggregate linear profit m·(slack − β_M·m), scanned on a
// fine markup grid then refined by a tighter local scan.
double scan_profit(double slack, double beta_m) {
  double best = 0.0, at = 0.0;
  const double hi = std::max(slack / beta_m, 1.0);
  for (int k = 1; k <= 100000; ++k) {
    const double m = hi * k / 100000.0;
    const double p = m * std::max(0.0, slack - beta_m * m);
    if (p > best) best = p, at = m;
  }
  const double step = hi / 100000.0;
  for (int k = -1000; k <= 1000; ++k) {
    const double m = at + step * k / 1000.0;
    best = std::max(best, m * std::max(0.0, slack - beta_m * m));
  }
  return best;
}

}  // namespace

TEST(ExpectedProfit, WorkedSchedule) {
  const Targets targets({0.0, 10.0, 20.0, kInfinity});
  const IntervalStats s{{0.2, 0.5, 0.3}, {9.0, 15.0, 21.0}, {0.9, 1.5, 2.1}};
  const auto prices = PriceSchedule::constant(targets, std::vector<double>{2.0, 1.5, 1.0});
  EXPECT_NEAR(expected_profit(prices, s), -0.11, 1e-12);
  EXPECT_DOUBLE_EQ(expected_profit(PriceSchedule::constant(targets, s.c), s), 0.0);
  const Targets one;
  EXPECT_DOUBLE_EQ(expected_profit(PriceSchedule::constant(one, std::vector<double>{3.5}),
                                   single(4.0, 2.5)),
                   1.0);
}

TEST(ExpectedProfit, DimensionMismatch) {
  const IntervalStats s{{0.5, 0.5}, {1.0, 2.0}, {1.0, 2.0}};
  EXPECT_THROW(expected_profit(PriceSchedule::constant(Targets(), std::vector<double>{1.0}), s),
               DimensionError);
}

TEST(ExpectedDemand, WorkedAndClamped) {
  const Targets one;
  const auto u = PiecewiseUtility::linear(1.0, 1.0);
  const DemandCurve m(100.0, 50.0);
  const auto at = [&](double price, double t) {
    return expected_demand(PriceSchedule::constant(one, std::vector<double>{price}),
                           single(t, 0.1), u, m);
  };
  EXPECT_NEAR(at(0.8, 0.5), 35.0, 1e-12);
  EXPECT_DOUBLE_EQ(at(0.0, 0.0), 100.0);
  EXPECT_DOUBLE_EQ(at(5.0, 5.0), 0.0);
}

TEST(PriceLinear, SingleIntervalWorkedInstance) {
  const auto out = price_linear(single(0.5, 0.1), Targets(), 1.0, 1.0, DemandCurve(100.0, 50.0));
  EXPECT_NEAR(out.prices.at(0, 0.5), 0.8, 1e-12);
  EXPECT_NEAR(out.overall_profit, 24.5, 1e-9);
  EXPECT_NEAR(out.expected_demand, 35.0, 1e-9);
  EXPECT_NEAR(out.overall_profit, scan_profit(70.0, 50.0), 1e-6);
}

TEST(PriceLinear, OneBucketFormula) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> x(0.1, 5.0);
  for (int k = 0; k < 100; ++k) {
    const double t = x(rng), c = x(rng), a = x(rng), b = x(rng), lam = x(rng), g = 10.0 * x(rng);
    const auto out = price_linear(single(t, c), Targets(), a, b, DemandCurve(g, lam));
    const double expected = std::max((g - lam * a * t + lam * b * c) / (2.0 * lam * b), c + 1e-6);
    EXPECT_NEAR(out.prices.at(0, t), expected, 1e-9 * std::max(1.0, expected));
  }
}

TEST(PriceLinear, InfeasibleBranchUsesEpsilon) {
  const PricingConstants eps{0.01};
  const auto out = price_linear(single(10.0, 5.0), Targets(), 1.0, 1.0, DemandCurve(1.0, 1.0), eps);
  EXPECT_NEAR(out.prices.at(0, 10.0), 5.01, 1e-12);
  EXPECT_NEAR(out.expected_profit, 0.01, 1e-12);
  EXPECT_DOUBLE_EQ(out.overall_profit, 0.0);
}

TEST(PriceLinear, ZeroSlackBoundary) {
  // γ − α_M·t̂ − β_M·c = 0 exactly.
  const auto closed = price_linear(single(2.0, 3.0), Targets(), 1.0, 1.0, DemandCurve(5.0, 1.0));
  EXPECT_NEAR(closed.markup, PricingConstants{}.epsilon, 1e-15);
  const auto grid = price_oracle_grid(single(2.0, 3.0), Targets(), PiecewiseUtility::linear(1.0, 1.0),
                                      DemandCurve(5.0, 1.0), 1e-3);
  EXPECT_DOUBLE_EQ(grid.overall_profit, 0.0);
  EXPECT_NEAR(grid.markup, PricingConstants{}.epsilon, 1e-15);
}

TEST(PriceLinear, UtilityIdentityAndProfitability) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> x(0.1, 3.0), w(0.05, 1.0);
  for (int k = 0; k < 200; ++k) {
    const Targets targets = Targets::from_deadlines(std::vector<double>{5.0, 12.0});
    IntervalStats s;
    double total = 0.0;
    for (int i = 0; i < 3; ++i) total += s.p.emplace_back(w(rng));
    for (auto& p : s.p) p /= total;
    const double rate = x(rng);
    for (double t : {2.0 + x(rng), 6.0 + x(rng), 13.0 + x(rng)}) {
      s.t_hat.push_back(t);
      s.c.push_back(rate * t);
    }
    const double a = x(rng), b = x(rng), lam = x(rng);
    const double raw = -a * s.expected_time() - b * s.expected_cost();
    // Large enough γ keeps every interval in the nonnegative-demand branch.
    const DemandCurve m(lam * (a * 20.0 + b * rate * 20.0) * 2.0 + 1.0, lam);
    const auto out = price_linear(s, targets, a, b, m);
    EXPECT_GT(out.expected_profit, 0.0);
    EXPECT_NEAR(out.consumer_expected_utility, -m.gamma / (2.0 * lam) + 0.5 * raw, 1e-9);
    const double slack = m.gamma + lam * raw;
    EXPECT_NEAR(out.overall_profit, slack * slack / (4.0 * lam * b), 1e-9 * out.overall_profit);
  }
}

TEST(PriceOracleGrid, AgreesWithClosedForm) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> x(0.2, 2.0);
  const double h = 1e-3;
  for (int k = 0; k < 100; ++k) {
    const double t = x(rng), c = x(rng), a = x(rng), b = x(rng), lam = x(rng);
    const DemandCurve m(lam * (a * t + b * c) + 5.0 * x(rng), lam);
    const auto closed = price_linear(single(t, c), Targets(), a, b, m);
    const auto grid =
        price_oracle_grid(single(t, c), Targets(), PiecewiseUtility::linear(a, b), m, h);
    EXPECT_LE(grid.overall_profit, closed.overall_profit + 1e-12);
    EXPECT_NEAR(grid.overall_profit, closed.overall_profit, 2.0 * lam * b * h * h / 4.0 + 1e-12);
  }
}

TEST(PriceContract, PiecewiseUtilityUsesGrid) {
  const Targets targets({0.0, 10.0, 20.0, kInfinity});
  const PiecewiseUtility u(targets, {{0.0, 0.0, 1.0}, {10.0, 1.0, 1.0}, {-50.0, 0.0, 0.0}});
  const IntervalStats s{{0.2, 0.5, 0.3}, {9.0, 15.0, 21.0}, {0.9, 1.5, 2.1}};
  const DemandCurve m(100.0, 2.0);
  const auto out = price_contract(s, targets, u, m);
  // Direct scan of the same objective with the clamped per-interval demand.
  double best = 0.0;
  for (int k = 1; k <= 100000; ++k) {
    const double markup = k * 1e-3;
    best = std::max(best, overall_profit(markup_schedule(targets, s, markup), s, u, m));
  }
  EXPECT_NEAR(out.overall_profit, best, 1e-9);
  EXPECT_GT(out.expected_profit, 0.0);
}

TEST(SelectConfiguration, DominatingConfigurationWins) {
  const Targets targets = Targets::from_deadlines(std::vector<double>{10.0});
  const auto u = PiecewiseUtility::linear(1.0, 1.0, targets);
  const DemandCurve m(100.0, 1.0);
  const std::vector<Configuration> configs{
      Configuration("slow", 0.5, CompletionHistogram::points({{8.0, 0.5}, {14.0, 0.5}})),
      Configuration("fast", 0.4, CompletionHistogram::points({{4.0, 0.5}, {12.0, 0.5}}))};
  EXPECT_EQ(select_configuration(configs, targets, u, m).index, 1u);
}

TEST(SelectConfiguration, TieBreaks) {
  const Targets targets;
  const auto u = PiecewiseUtility::linear(1.0, 1.0, targets);
  const DemandCurve m(100.0, 1.0);
  const auto h = CompletionHistogram::point(5.0);
  const std::vector<Configuration> same{Configuration("b", 1.0, h), Configuration("a", 1.0, h)};
  EXPECT_EQ(select_configuration(same, targets, u, m).index, 1u);  // id order
  EXPECT_THROW(select_configuration(std::vector<Configuration>{}, targets, u, m), InvalidArgument);
}

TEST(SelectConfiguration, MatchesEnumerationWithOracle) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> mean(2.0, 40.0), sd(0.0, 2.0), rate(0.05, 0.5);
  const Targets targets = Targets::from_deadlines(std::vector<double>{20.0});
  const auto u = PiecewiseUtility::linear(1.0, 1.0, targets);
  const DemandCurve m(200.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    std::vector<Configuration> menu;
    for (int c = 0; c < 5; ++c) {
      menu.emplace_back("c" + std::to_string(c), rate(rng),
                        CompletionHistogram::gaussian(mean(rng), sd(rng)));
    }
    double best = -1.0;
    std::size_t arg = 0;
    for (std::size_t c = 0; c < menu.size(); ++c) {
      const auto s = interval_stats(menu[c].histogram, menu[c].rate, targets);
      const double p = price_oracle_grid(s, targets, u, m, 1e-3).overall_profit;
      if (p > best) best = p, arg = c;
    }
    const auto choice = select_configuration(menu, targets, u, m);
    EXPECT_EQ(choice.index, arg);
    EXPECT_NEAR(choice.outcome.overall_profit, best, 1e-3);
  }
}
