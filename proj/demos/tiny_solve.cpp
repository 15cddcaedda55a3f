// Solves the single-retailer "tiny" instance three ways: PBVI descends an
// upper surface, SARSOP brackets the value from both sides, and a belief-grid
// value iteration cross-checks them. On this instance the stock cap binds in
// both regimes, so the blind upper bound meets the full-observability lower
// bound and the SARSOP bracket collapses to the exact value at the root. The
// grid oracle snaps posteriors to nearest vertices, so its value carries a
// wide certified error band; the bracket check uses that band.
#include <coordinv/actions.hpp>
#include <coordinv/scenario_io.hpp>
#include <coordinv/solver.hpp>
#include <coordinv/solver_oracle.hpp>
#include <coordinv/solver_sarsop.hpp>

#include <cstdio>

using namespace coordinv;

int main() {
  LoadedScenario tiny = builtin_scenario("tiny");
  const ScenarioConfig& sc = tiny.scenario;
  std::vector<CoordinatorAction> actions =
      enumerate_actions(tiny.grid, sc.n_retailers, sc.regimes.n, sc.s_max);
  CoordinatorModel model(sc, std::move(actions));
  FlatBelief b0 = initial_belief(sc);

  std::printf("tiny: %zu states, %zu actions, discount %.2f, lambda %.1f\n",
              model.dims().size(), model.actions().size(), sc.costs.discount,
              sc.costs.comm_lambda);

  PbviParams pp;
  PbviResult pbvi = pbvi_solve(model, b0, pp);
  std::printf("pbvi   upper %.6f   (%d sweeps, %.2fs)\n", pbvi.upper_b0, pbvi.sweeps,
              pbvi.seconds);

  SarsopParams spr;
  spr.eps_rel = 0.005;
  SarsopResult sar = sarsop_solve(model, b0, spr);
  std::printf("sarsop [%.6f, %.6f]   rel gap %.4f (%d trials, %.2fs)\n", sar.lower_b0,
              sar.upper_b0, sar.rel_gap, sar.trials, sar.seconds);

  OracleParams op;
  op.regime_resolution = 10;
  op.inv_resolution = 3;
  OracleResult oracle = exact_vi_oracle(model, b0, op);
  std::printf("grid VI %.6f, certified within +-%.1f   (%zu points, %d sweeps)\n", oracle.value,
              oracle.conservative_error, oracle.grid_size, oracle.sweeps);

  bool ok = sar.lower_b0 <= oracle.value + oracle.conservative_error &&
            oracle.value - oracle.conservative_error <= sar.upper_b0 &&
            pbvi.upper_b0 >= oracle.value - oracle.conservative_error;
  std::printf("bracket %s\n", ok ? "holds" : "VIOLATED");
  return ok ? 0 : 1;
}
