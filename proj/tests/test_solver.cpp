#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "coordinv/solver.hpp"
#include "coordinv/solver_oracle.hpp"
#include "coordinv/solver_sarsop.hpp"

using namespace coordinv;

namespace {

ScenarioConfig micro2(double comm_lambda = 2.0) {
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
  sc.costs.comm_lambda = comm_lambda;
  sc.s_max = 5;
  sc.u_max = 5;
  sc.initial_inventories = {3, 2};
  validate(sc);
  return sc;
}

ScenarioConfig micro1(double comm_lambda = 2.0) {
  ScenarioConfig sc;
  sc.name = "micro1";
  sc.n_retailers = 1;
  sc.regimes.n = 2;
  sc.regimes.labels = {"a", "b"};
  sc.regimes.transition = {0.8, 0.2, 0.3, 0.7};
  sc.regimes.initial = {0.6, 0.4};
  sc.demand = {2, 1, 3, {0.45, 0.3, 0.15, 0.1, 0.1, 0.2, 0.3, 0.4}};
  sc.costs = CostParams{};
  sc.costs.comm_lambda = comm_lambda;
  sc.s_max = 5;
  sc.u_max = 5;
  sc.initial_inventories = {3};
  validate(sc);
  return sc;
}

ActionGrid micro_grid() {
  ActionGrid g;
  g.symmetric = true;
  g.levels = {{2, 3}, {3, 4}};
  return g;
}

}  // namespace

TEST_CASE("upper envelope evaluates the minimum over its vectors") {
  UpperEnvelope U;
  U.alphas.push_back({0, {1.0, 2.0, 3.0}});
  U.alphas.push_back({1, {3.0, 1.0, 1.0}});

  REQUIRE(U.value({1.0, 0.0, 0.0}) == 1.0);
  REQUIRE(U.value({0.0, 1.0, 0.0}) == 1.0);
  REQUIRE(U.value({0.5, 0.5, 0.0}) == 1.5);
  REQUIRE(U.best_index({1.0, 0.0, 0.0}) == 0);
  REQUIRE(U.best_index({0.0, 0.0, 1.0}) == 1);

  std::vector<double> bp = {0.2, 0.3, 0.5};
  std::vector<int> support = {0, 1, 2};
  REQUIRE(U.best_index_sparse(bp, support) == U.best_index(bp));

  // A vector pointwise above another never carries the minimum.
  U.alphas.push_back({2, {1.5, 2.5, 3.5}});
  U.prune_pointwise();
  REQUIRE(U.alphas.size() == 2);
  for (const auto& a : U.alphas) REQUIRE(a.v != std::vector<double>{1.5, 2.5, 3.5});
}

TEST_CASE("sawtooth lower surface interpolates between plane and points") {
  SawtoothLower L;
  L.corner = {1.0, 1.0, 1.0};

  REQUIRE(L.value({0.5, 0.5, 0.0}) == 1.0);
  REQUIRE(L.insert({0.5, 0.5, 0.0}, 1.8));
  REQUIRE(L.points.size() == 1);

  // At the stored point the surface hits its value exactly.
  REQUIRE(L.value({0.5, 0.5, 0.0}) == Catch::Approx(1.8).margin(1e-12));
  // Mixing weight c = min(b / b_k) over the point's support.
  REQUIRE(L.value({0.25, 0.25, 0.5}) == Catch::Approx(1.0 + 0.5 * 0.8).margin(1e-12));
  // Disjoint support collapses to the plane.
  REQUIRE(L.value({0.0, 0.0, 1.0}) == 1.0);

  // Inserting below the current surface is rejected.
  REQUIRE_FALSE(L.insert({0.5, 0.5, 0.0}, 1.7));
  // A strictly better value at the same point is accepted and kept sorted.
  REQUIRE(L.insert({0.5, 0.5, 0.0}, 2.0));
  REQUIRE(L.value({0.5, 0.5, 0.0}) == Catch::Approx(2.0).margin(1e-12));
  for (std::size_t k = 1; k < L.points.size(); ++k)
    REQUIRE(L.points[k - 1].delta >= L.points[k].delta);
}

TEST_CASE("full-information corner values lower-bound every blind repeated action") {
  auto sc = micro2();
  CoordinatorModel model(sc, micro_grid());
  auto corner = mdp_corner_bound(model);
  REQUIRE(corner.size() == model.dims().size());

  double floor_v = value_floor(model);
  double cap_v = value_cap(model);
  for (double v : corner) {
    REQUIRE(v >= floor_v - 1e-9);
    REQUIRE(v <= cap_v + 1e-9);
  }

  // The relaxed controller can mimic any fixed prescription, so its value
  // sits pointwise below each blind alpha.
  for (std::size_t ai = 0; ai < model.actions().size(); ++ai) {
    auto alpha = blind_alpha(model, static_cast<int>(ai));
    REQUIRE(alpha.action == static_cast<int>(ai));
    for (std::size_t j = 0; j < corner.size(); ++j) REQUIRE(corner[j] <= alpha.v[j] + 1e-9);
  }
}

TEST_CASE("point backup tightens the blind surface at its belief") {
  auto sc = micro2();
  CoordinatorModel model(sc, micro_grid());
  FlatBelief b0 = initial_belief(sc);

  UpperEnvelope U = blind_upper_bound(model);
  double before = U.value(b0.p);
  BackupResult bk = point_backup(model, U, b0);

  REQUIRE(bk.q.size() == model.actions().size());
  REQUIRE(bk.best_action >= 0);
  REQUIRE(bk.alpha.action == bk.best_action);
  for (std::size_t ai = 0; ai < bk.q.size(); ++ai) REQUIRE(bk.q[bk.best_action] <= bk.q[ai]);

  // At b0 the decision-time regime pick map coincides with the uniform-map
  // seeds, so one Bellman application cannot be worse than the seed surface.
  REQUIRE(bk.q[bk.best_action] <= before + 1e-9);
  REQUIRE(vec_dot(bk.alpha.v, b0.p) == Catch::Approx(bk.q[bk.best_action]).margin(1e-12));

  U.alphas.push_back(bk.alpha);
  REQUIRE(U.value(b0.p) <= before + 1e-12);
}

TEST_CASE("sharing is never worse than silence before the surcharge") {
  auto sc = micro2();
  CoordinatorModel model(sc, micro_grid());
  const auto& actions = model.actions();
  const std::size_t P = actions.size() / 2;
  for (std::size_t p = 0; p < P; ++p) {
    REQUIRE_FALSE(actions[p].comm);
    REQUIRE(actions[P + p].comm);
    REQUIRE(actions[p].prescription.targets == actions[P + p].prescription.targets);
  }

  UpperEnvelope U = blind_upper_bound(model);
  FlatBelief b0 = initial_belief(sc);
  auto spread = update_full_comm(sc, b0, CoordinatorAction{0, true, {{{3, 3}, {2, 2}}}},
                                 {{0, 1, 2}, {1, 2, 0}});

  for (const FlatBelief& b : {b0, spread}) {
    BackupResult bk = point_backup(model, U, b);
    for (std::size_t p = 0; p < P; ++p)
      REQUIRE(bk.q[P + p] - model.comm_surcharge() <= bk.q[p] + 1e-9);
  }
}

TEST_CASE("belief sampling stays on the simplex and is reproducible") {
  auto sc = micro2();
  CoordinatorModel model(sc, micro_grid());
  FlatBelief b0 = initial_belief(sc);

  auto B = sample_beliefs(model, b0, 25, 30, 77);
  REQUIRE(B.size() >= 10);
  REQUIRE(B.size() <= 25);
  REQUIRE(B[0].p == b0.p);
  for (const auto& b : B) REQUIRE(is_distribution(b.p, 1e-9));

  auto B2 = sample_beliefs(model, b0, 25, 30, 77);
  REQUIRE(B.size() == B2.size());
  REQUIRE(B.back().p == B2.back().p);
}

TEST_CASE("point-based sweeps descend monotonically and deterministically") {
  auto sc = micro2();
  CoordinatorModel model(sc, micro_grid());
  FlatBelief b0 = initial_belief(sc);

  PbviParams base;
  base.n_beliefs = 30;
  base.horizon = 20;
  base.tol = 0.0;  // run the full sweep budget

  double prev = std::numeric_limits<double>::infinity();
  for (int sweeps = 1; sweeps <= 4; ++sweeps) {
    PbviParams p = base;
    p.max_sweeps = sweeps;
    PbviResult r = pbvi_solve(model, b0, p);
    REQUIRE(r.sweeps == sweeps);
    REQUIRE(r.upper_b0 <= prev + 1e-12);
    prev = r.upper_b0;

    auto corner = mdp_corner_bound(model);
    REQUIRE(r.upper_b0 >= vec_dot(corner, b0.p) - 1e-9);
  }

  PbviParams p = base;
  p.max_sweeps = 3;
  PbviResult a = pbvi_solve(model, b0, p);
  PbviResult b = pbvi_solve(model, b0, p);
  REQUIRE(a.upper_b0 == b.upper_b0);
  REQUIRE(a.upper.alphas.size() == b.upper.alphas.size());
}

// Sharing only pays when a retailer's own demand is a weak regime classifier:
// overlapping pmfs plus a sticky chain make the pooled posterior worth having.
static ScenarioConfig micro_flip(double comm_lambda) {
  ScenarioConfig sc;
  sc.name = "micro_flip";
  sc.n_retailers = 2;
  sc.regimes.n = 2;
  sc.regimes.labels = {"calm", "surge"};
  sc.regimes.transition = {0.95, 0.05, 0.05, 0.95};
  sc.regimes.initial = {0.5, 0.5};
  sc.demand = {2, 2, 2,
               {0.5, 0.3, 0.2,
                0.5, 0.3, 0.2,
                0.2, 0.3, 0.5,
                0.2, 0.3, 0.5}};
  sc.costs = CostParams{};
  sc.costs.holding = 1.0;
  sc.costs.penalty = 3.0;
  sc.costs.comm_lambda = comm_lambda;
  sc.s_max = 3;
  sc.u_max = 3;
  sc.initial_inventories = {1, 1};
  validate(sc);
  return sc;
}

TEST_CASE("surcharge level flips the solved lookahead between sharing and silence") {
  ActionGrid grid;
  grid.symmetric = true;
  grid.levels = {{1, 2}, {1, 2}};

  PbviParams p;
  p.n_beliefs = 60;
  p.max_sweeps = 60;
  p.seed = 7;

  auto branch_gap = [&](const CoordinatorModel& model, const UpperEnvelope& env,
                        const FlatBelief& b) {
    BackupResult bk = point_backup(model, env, b);
    double best_comm = std::numeric_limits<double>::infinity();
    double best_silent = best_comm;
    for (std::size_t k = 0; k < model.actions().size(); ++k) {
      double& slot = model.actions()[k].comm ? best_comm : best_silent;
      slot = std::min(slot, bk.q[k]);
    }
    return best_silent - best_comm;
  };

  {
    auto sc = micro_flip(0.0);
    CoordinatorModel model(sc, grid);
    FlatBelief b0 = initial_belief(sc);
    PbviResult r = pbvi_solve(model, b0, p);
    Lookahead la = lookahead_policy(model, r.upper, b0);
    REQUIRE(model.actions()[la.action].comm);
    // Free sharing wins by a margin far above float noise, not by tie-break.
    REQUIRE(branch_gap(model, r.upper, b0) >= 1e-4);
  }
  {
    auto sc = micro_flip(3.0);
    CoordinatorModel model(sc, grid);
    FlatBelief b0 = initial_belief(sc);
    PbviResult r = pbvi_solve(model, b0, p);
    Lookahead la = lookahead_policy(model, r.upper, b0);
    REQUIRE_FALSE(model.actions()[la.action].comm);
    // The surcharge (lambda per shared round) dwarfs the information gain.
    REQUIRE(branch_gap(model, r.upper, b0) <= -(3.0 - 0.5));
  }
}

TEST_CASE("bounded solver tightens a certified bracket with the trial budget") {
  auto sc = micro1();
  CoordinatorModel model(sc, micro_grid());
  FlatBelief b0 = initial_belief(sc);

  SarsopParams pr;
  pr.eps_rel = 0.02;
  pr.max_trials = 10;
  SarsopResult r10 = sarsop_solve(model, b0, pr);
  pr.max_trials = 60;
  SarsopResult r60 = sarsop_solve(model, b0, pr);

  for (const SarsopResult* r : {&r10, &r60}) {
    REQUIRE(r->lower_b0 <= r->upper_b0 + 1e-9);
    REQUIRE(r->lower_b0 >= value_floor(model) - 1e-9);
    REQUIRE(r->upper_b0 <= value_cap(model) + 1e-9);
  }

  // Deterministic trials extend each other, so more budget only tightens.
  REQUIRE(r60.upper_b0 <= r10.upper_b0 + 1e-12);
  REQUIRE(r60.lower_b0 >= r10.lower_b0 - 1e-12);
  REQUIRE(r60.rel_gap <= 0.05);
}

TEST_CASE("grid value iteration agrees with the certified bracket") {
  auto sc = micro1();
  CoordinatorModel model(sc, micro_grid());
  FlatBelief b0 = initial_belief(sc);

  SarsopParams pr;
  pr.eps_rel = 0.01;
  pr.max_trials = 120;
  SarsopResult bracket = sarsop_solve(model, b0, pr);

  OracleParams op;
  op.regime_resolution = 10;
  op.inv_resolution = 3;
  OracleResult oracle = exact_vi_oracle(model, b0, op);

  INFO("oracle=" << oracle.value << " bracket=[" << bracket.lower_b0 << ", "
                 << bracket.upper_b0 << "] refine_delta=" << oracle.refine_delta
                 << " residual=" << oracle.residual << " grid=" << oracle.grid_size
                 << " max_round_tv=" << oracle.max_round_tv);
  REQUIRE(oracle.grid_size > 1000);
  REQUIRE(oracle.residual < 1e-8);
  // The start belief lies exactly on the grid.
  REQUIRE(oracle.b0_round_tv <= 1e-12);
  REQUIRE(std::isfinite(oracle.refine_delta));

  double slack = 0.05 * bracket.upper_b0;
  REQUIRE(oracle.value >= bracket.lower_b0 - slack);
  REQUIRE(oracle.value <= bracket.upper_b0 + slack);

  // Single-retailer restriction is enforced.
  auto sc2 = micro2();
  CoordinatorModel model2(sc2, micro_grid());
  REQUIRE_THROWS_AS(exact_vi_oracle(model2, initial_belief(sc2), op), std::invalid_argument);
}
