#include <catch2/catch_amalgamated.hpp>

#include "coordinv/dynamics.hpp"
#include "support/oracles.hpp"

using namespace coordinv;

TEST_CASE("step_inventory handles lost sales, replenishment and the cap") {
  REQUIRE(step_inventory(10, 12, 3, 30) == 3);
  REQUIRE(step_inventory(10, 4, 0, 30) == 6);
  REQUIRE(step_inventory(28, 0, 5, 30) == 30);
  REQUIRE(step_inventory(0, 0, 0, 30) == 0);
  REQUIRE_THROWS_AS(step_inventory(-1, 0, 0, 30), std::invalid_argument);
}

TEST_CASE("stage_cost charges holding, penalty and the message fee") {
  CostParams c;  // holding 1, penalty 5, lambda 2
  REQUIRE(stage_cost(10, 12, true, c) == Catch::Approx(12.0));
  REQUIRE(stage_cost(10, 4, false, c) == Catch::Approx(6.0));
  REQUIRE(stage_cost(10, 10, false, c) == Catch::Approx(0.0));

  // Holding and penalty are mutually exclusive for a single retailer-period.
  RngStream rng(7, "stage-cost-fuzz");
  for (int k = 0; k < 1000; ++k) {
    int inv = static_cast<int>(rng.uniform_below(31));
    int dem = static_cast<int>(rng.uniform_below(40));
    double got = stage_cost(inv, dem, false, c);
    double expect = inv >= dem ? c.holding * (inv - dem) : c.penalty * (dem - inv);
    REQUIRE(got == Catch::Approx(expect));
  }
}

TEST_CASE("sample_regime matches the transition row empirically") {
  auto sc = build_two_regime_scenario(1, 0.8, 5.0, 15.0, CostParams{}, 5, 5, {5});
  RngStream rng(42, "regime-transition");
  int n = 1000000, stay = 0;
  for (int k = 0; k < n; ++k)
    if (sample_regime(sc.regimes, 0, rng) == 0) ++stay;
  REQUIRE(static_cast<double>(stay) / n == Catch::Approx(0.8).margin(0.002));
}

TEST_CASE("sampled demand frequencies fit the pmf (chi-square, alpha=0.01)") {
  auto sc = build_two_regime_scenario(1, 0.8, 5.0, 15.0, CostParams{}, 30, 30, {15});
  for (int regime = 0; regime < 2; ++regime) {
    RngStream rng(2024, "demand-gof", static_cast<std::uint64_t>(regime));
    const int n = 100000;
    std::vector<int> counts(sc.demand.d_max + 1, 0);
    for (int k = 0; k < n; ++k) ++counts[sample_demand(sc.demand, regime, 0, rng)];

    // Pool cells whose expected count falls below 5, per standard practice.
    std::vector<double> expected;
    std::vector<double> observed;
    double e_acc = 0.0, o_acc = 0.0;
    for (int d = 0; d <= sc.demand.d_max; ++d) {
      e_acc += n * sc.demand.at(regime, 0, d);
      o_acc += counts[d];
      if (e_acc >= 5.0) {
        expected.push_back(e_acc);
        observed.push_back(o_acc);
        e_acc = o_acc = 0.0;
      }
    }
    if (e_acc > 0.0 && !expected.empty()) {
      expected.back() += e_acc;
      observed.back() += o_acc;
    }
    double chi2 = 0.0;
    for (std::size_t j = 0; j < expected.size(); ++j) {
      double diff = observed[j] - expected[j];
      chi2 += diff * diff / expected[j];
    }
    int df = static_cast<int>(expected.size()) - 1;
    INFO("regime " << regime << " chi2=" << chi2 << " df=" << df);
    REQUIRE(chi2 < oracles::chi2_critical(df, 0.01));
  }
}

TEST_CASE("sample_transition advances inventories by the lost-sales rule") {
  auto sc = build_two_regime_scenario(2, 0.8, 5.0, 15.0, CostParams{}, 30, 30, {15, 15});
  WorldState s{1, {10, 3}};
  RngStream rng(5, "world-step");
  auto next = sample_transition(sc, s, {12, 1}, {7, 0}, rng);
  REQUIRE(next.inventories[0] == 7);   // stocked out, then reordered 7
  REQUIRE(next.inventories[1] == 2);   // 3-1 leftover, no order
  REQUIRE((next.regime == 0 || next.regime == 1));
  REQUIRE_THROWS_AS(sample_transition(sc, s, {12}, {7, 0}, rng), std::invalid_argument);
}
