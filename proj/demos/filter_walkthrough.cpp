// Walks the coordinator belief through one scripted week under a demand
// threshold of 10: reports condition the regime exactly, silence conditions
// on "demand stayed at or below 10", and a cap at d_max shows silence going
// uninformative. Watch the high-regime probability respond to each event.
#include <coordinv/belief.hpp>
#include <coordinv/policies.hpp>
#include <coordinv/scenario_io.hpp>

#include <algorithm>
#include <cstdio>
#include <vector>

using namespace coordinv;

int main() {
  ScenarioConfig sc = base_scenario(2);
  const int cap = 10;
  Policy policy(parse_policy_spec("threshold:10"), sc);
  FlatBelief b = initial_belief(sc);
  std::vector<int> inv = sc.initial_inventories;
  std::printf("two retailers, Poisson(5)/Poisson(15) demand, trigger above %d\n", cap);
  std::printf("start: P(high regime) = %.4f\n", b.regime_marginal()[1]);

  // A quiet spell, a lone spike, a loud day, then quiet again; the last day
  // raises the cap to d_max, which makes silence vacuous (the never-share
  // update, same code path) so only the transition step moves the belief.
  const std::vector<std::vector<int>> week = {{4, 6}, {14, 7}, {16, 13}, {5, 8}, {6, 3}};
  for (std::size_t t = 0; t < week.size(); ++t) {
    int day_cap = t + 1 == week.size() ? sc.demand.d_max : cap;
    CoordinatorAction a = policy.decide(b, static_cast<long>(t));
    std::vector<double> marginal = b.regime_marginal();
    std::vector<RetailerReport> reports;
    std::vector<int> orders(sc.n_retailers);
    for (int i = 0; i < sc.n_retailers; ++i) {
      int d = week[t][i];
      int post = std::max(inv[i] - d, 0);
      orders[i] = execute_prescription(a.prescription, marginal, d, post, i, sc.demand, sc.u_max);
      if (d > day_cap) reports.push_back({i, d, post});
    }
    b = update_censored(sc, b, a, reports, day_cap);
    for (int i = 0; i < sc.n_retailers; ++i)
      inv[i] = step_inventory(inv[i], week[t][i], orders[i], sc.s_max);

    std::printf("day %zu: demands %2d %2d  %-28s P(high regime next) = %.4f\n", t + 1,
                week[t][0], week[t][1],
                reports.empty() ? (day_cap >= sc.demand.d_max ? "silence (cap at d_max)"
                                                              : "silence from both")
                : reports.size() == 1 ? "one report"
                                      : "reports from both",
                b.regime_marginal()[1]);
  }
  return 0;
}
