#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "coordinv/coordinator_model.hpp"
#include "coordinv/rng.hpp"
#include "support/oracles.hpp"

using namespace coordinv;

namespace {

ScenarioConfig micro2() {
  ScenarioConfig sc;
  sc.name = "micro2";
  sc.n_retailers = 2;
  sc.regimes.n = 2;
  sc.regimes.labels = {"a", "b"};
  sc.regimes.transition = {0.8, 0.2, 0.3, 0.7};
  sc.regimes.initial = {0.6, 0.4};
  sc.demand = {2, 2, 3,
               {0.45, 0.3, 0.15, 0.1,    // a, retailer 0
                0.5, 0.3, 0.1, 0.1,      // a, retailer 1
                0.1, 0.2, 0.3, 0.4,      // b, retailer 0
                0.1, 0.1, 0.3, 0.5}};    // b, retailer 1
  sc.costs = CostParams{};
  sc.s_max = 5;
  sc.u_max = 5;
  sc.initial_inventories = {3, 2};
  validate(sc);
  return sc;
}

CoordinatorAction act(std::vector<std::vector<int>> targets, bool comm) {
  CoordinatorAction a;
  a.id = 0;
  a.comm = comm;
  a.prescription.targets = std::move(targets);
  return a;
}

}  // namespace

TEST_CASE("demand bins are contiguous, exhaustive, and near-equal in mass") {
  auto sc = build_two_regime_scenario(2, 0.8, 5.0, 15.0, CostParams{}, 30, 30, {15, 15});
  auto db = make_demand_bins(sc, 8);
  REQUIRE(db.n_bins == 8);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(db.lo[i][0] == 0);
    REQUIRE(db.hi[i][7] == sc.demand.d_max);
    for (int k = 1; k < 8; ++k) REQUIRE(db.lo[i][k] == db.hi[i][k - 1] + 1);
    for (int k = 0; k < 8; ++k) REQUIRE(db.lo[i][k] <= db.hi[i][k]);
    // bin_of is the inverse of the ranges.
    for (int d = 0; d <= sc.demand.d_max; ++d) {
      int k = db.bin_of[i][d];
      REQUIRE(db.lo[i][k] <= d);
      REQUIRE(d <= db.hi[i][k]);
    }
    // Mixture mass per bin is near 1/8 (quantile split; granularity-limited).
    for (int k = 0; k < 8; ++k) {
      double m = 0.0;
      for (int d = db.lo[i][k]; d <= db.hi[i][k]; ++d)
        m += 0.5 * (sc.demand.at(0, i, d) + sc.demand.at(1, i, d));
      REQUIRE(m > 0.01);
      REQUIRE(m < 0.45);
    }
  }

  // Tiny support: bins collapse to singletons, making the coarsening exact.
  auto mc = micro2();
  auto sdb = make_demand_bins(mc, 8);
  REQUIRE(sdb.n_bins == 4);
  for (int i = 0; i < 2; ++i)
    for (int d = 0; d <= 3; ++d) REQUIRE(sdb.bin_of[i][d] == d);

  // Frozen 2-bin split of micro2 (hand quantiles: {0,1} vs {2,3} for both).
  auto two = make_demand_bins(mc, 2);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(two.hi[i][0] == 1);
    REQUIRE(two.lo[i][1] == 2);
  }

  REQUIRE_THROWS_AS(make_demand_bins(mc, 0), std::invalid_argument);
}

TEST_CASE("binned axis kernels sum to the silent kernel") {
  auto sc = micro2();
  CoordinatorModel model(sc, {act({{2, 4}, {3, 5}}, false), act({{2, 4}, {3, 5}}, true)}, 2);
  std::vector<double> marg = {0.6, 0.4};
  const auto silent = model.kernel(marg, model.actions()[0]);
  const auto comm = model.kernel(marg, model.actions()[1]);

  const int scap = model.dims().s_cap;
  for (int x = 0; x < 2; ++x)
    for (int i = 0; i < 2; ++i) {
      const double* all = silent.mat(x, i, 0);
      for (int cell = 0; cell < scap * scap; ++cell) {
        double acc = 0.0;
        for (int k = 0; k < model.bins().n_bins; ++k) acc += comm.mat(x, i, k)[cell];
        REQUIRE(acc == Catch::Approx(all[cell]).margin(1e-12));
      }
      // Rows are substochastic with total one across destinations.
      for (int I = 0; I < scap; ++I) {
        double row = 0.0;
        for (int J = 0; J < scap; ++J) row += all[I * scap + J];
        REQUIRE(row == Catch::Approx(1.0).margin(1e-12));
      }
    }
}

TEST_CASE("expansion is a probability mixture that reproduces the prediction") {
  auto sc = micro2();
  auto a_silent = act({{2, 4}, {3, 5}}, false);
  auto a_comm = act({{2, 4}, {3, 5}}, true);
  CoordinatorModel model(sc, {a_silent, a_comm}, 8);

  auto b = predict_no_comm(sc, initial_belief(sc), a_silent);
  auto kn = model.kernel(b.regime_marginal(), a_comm);
  auto branches = kn.expand(b);

  double total = 0.0;
  std::vector<double> mix(b.p.size(), 0.0);
  for (const auto& br : branches) {
    REQUIRE(is_distribution(br.posterior.p));
    total += br.prob;
    for (std::size_t j = 0; j < mix.size(); ++j) mix[j] += br.prob * br.posterior.p[j];
  }
  REQUIRE(total == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(tv_distance(mix, predict_no_comm(sc, b, a_silent).p) < 1e-12);

  // Silent expansion is exactly the simulator's prediction operator.
  auto sk = model.kernel(b.regime_marginal(), a_silent);
  auto sb = sk.expand(b);
  REQUIRE(sb.size() == 1);
  REQUIRE(sb[0].prob == 1.0);
  REQUIRE(sb[0].posterior.p == predict_no_comm(sc, b, a_silent).p);
}

TEST_CASE("binned posteriors aggregate the exact per-report posteriors") {
  auto sc = micro2();
  auto a = act({{2, 4}, {3, 5}}, true);
  CoordinatorModel model(sc, {a}, 2);  // coarse bins: {0,1} and {2,3}
  auto b = predict_no_comm(sc, initial_belief(sc), act({{2, 4}, {3, 5}}, false));

  auto kn = model.kernel(b.regime_marginal(), a);
  auto branches = kn.expand(b);
  REQUIRE(branches.size() == 4);

  const auto& db = model.bins();
  for (const auto& br : branches) {
    int k0 = br.obs / 2, k1 = br.obs % 2;
    double prob = 0.0;
    std::vector<double> agg(b.p.size(), 0.0);
    for (int d0 = db.lo[0][k0]; d0 <= db.hi[0][k0]; ++d0)
      for (int d1 = db.lo[1][k1]; d1 <= db.hi[1][k1]; ++d1)
        for (int p0 = 0; p0 <= 5; ++p0)
          for (int p1 = 0; p1 <= 5; ++p1) {
            Observation o;
            o.reports = {{0, d0, p0}, {1, d1, p1}};
            double w = obs_likelihood(sc, b, a, o);
            if (w <= 0.0) continue;
            prob += w;
            auto post = update_full_comm(sc, b, a, o.reports);
            for (std::size_t j = 0; j < agg.size(); ++j) agg[j] += w * post.p[j];
          }
    REQUIRE(br.prob == Catch::Approx(prob).margin(1e-12));
    for (double& v : agg) v /= prob;
    REQUIRE(tv_distance(br.posterior.p, agg) < 1e-12);
  }
}

TEST_CASE("expected stage cost matches a direct enumeration") {
  auto sc = micro2();
  auto a_comm = act({{2, 4}, {3, 5}}, true);
  auto a_silent = act({{2, 4}, {3, 5}}, false);
  CoordinatorModel model(sc, {a_silent, a_comm});

  auto b = predict_no_comm(sc, initial_belief(sc), a_silent);
  double want = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int i0 = 0; i0 <= 5; ++i0)
      for (int i1 = 0; i1 <= 5; ++i1) {
        double mass = b.p[b.dims.index(x, {i0, i1})];
        if (mass <= 0.0) continue;
        double c = 0.0;
        for (int d = 0; d <= 3; ++d) {
          c += sc.demand.at(x, 0, d) *
               (1.0 * std::max(i0 - d, 0) + 5.0 * std::max(d - i0, 0));
          c += sc.demand.at(x, 1, d) *
               (1.0 * std::max(i1 - d, 0) + 5.0 * std::max(d - i1, 0));
        }
        want += mass * c;
      }
  REQUIRE(model.stage_cost(b, a_silent) == Catch::Approx(want).margin(1e-12));
  // Communication adds exactly lambda per shared round.
  REQUIRE(model.stage_cost(b, a_comm) ==
          Catch::Approx(want + model.comm_surcharge()).margin(1e-12));
  REQUIRE(model.comm_surcharge() == Catch::Approx(2.0).margin(1e-15));
  REQUIRE(model.min_stage_cost() >= 0.0);
  REQUIRE(model.max_stage_cost() >= model.min_stage_cost());
}

TEST_CASE("backprojection is the adjoint of expansion") {
  auto sc = micro2();
  auto a = act({{2, 4}, {3, 5}}, true);
  CoordinatorModel model(sc, {a}, 2);

  RngStream rng(7, "adjoint-test", 0);
  FlatBelief b;
  b.dims = model.dims();
  b.p.resize(b.dims.size());
  for (double& v : b.p) v = rng.uniform01();
  normalize_in_place(b.p);

  std::vector<double> alpha(b.dims.size());
  for (double& v : alpha) v = 10.0 * rng.uniform01() - 5.0;

  auto kn = model.kernel(b.regime_marginal(), a);
  auto branches = kn.expand(b);

  // <alpha, unnormalized posterior> accumulated over observations must equal
  // <sum_o backproject(o, alpha), b>.
  double lhs = 0.0;
  for (const auto& br : branches)
    for (std::size_t j = 0; j < alpha.size(); ++j)
      lhs += alpha[j] * br.prob * br.posterior.p[j];

  std::vector<double> folded(b.dims.size(), 0.0);
  for (int o = 0; o < kn.n_obs(); ++o) {
    auto beta = kn.backproject(o, alpha);
    for (std::size_t j = 0; j < beta.size(); ++j) folded[j] += beta[j];
  }
  double rhs = 0.0;
  for (std::size_t j = 0; j < folded.size(); ++j) rhs += folded[j] * b.p[j];
  REQUIRE(lhs == Catch::Approx(rhs).margin(1e-9));

  // Folding the observation away leaves a stochastic map: constants are
  // preserved, both for the comm kernel and the silent one.
  std::vector<double> ones(b.dims.size(), 1.0);
  std::vector<double> sum_ones(b.dims.size(), 0.0);
  for (int o = 0; o < kn.n_obs(); ++o) {
    auto beta = kn.backproject(o, ones);
    for (std::size_t j = 0; j < beta.size(); ++j) sum_ones[j] += beta[j];
  }
  for (double v : sum_ones) REQUIRE(v == Catch::Approx(1.0).margin(1e-12));

  auto a0 = act({{2, 4}, {3, 5}}, false);
  CoordinatorModel m0(sc, {a0}, 2);
  auto k0 = m0.kernel(b.regime_marginal(), a0);
  auto beta0 = k0.backproject(0, ones);
  for (double v : beta0) REQUIRE(v == Catch::Approx(1.0).margin(1e-12));
}
