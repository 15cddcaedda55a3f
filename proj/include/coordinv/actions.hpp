#pragma once
#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "coordinv/scenario.hpp"

namespace coordinv {

// Order-up-to targets per retailer and per regime label. The agent applies
// targets[i][x] where x is its own regime pick for the period.
struct Prescription {
  std::vector<std::vector<int>> targets;
};

struct CoordinatorAction {
  int id = -1;
  bool comm = false;
  Prescription prescription;
};

// Candidate target levels per regime. Under `symmetric` every retailer shares
// one per-regime choice; otherwise retailers choose independently.
struct ActionGrid {
  std::vector<std::vector<int>> levels;
  bool symmetric = true;
};

// Smallest s whose cumulative probability reaches `ratio`.
inline int newsvendor_level(const std::vector<double>& pmf, double ratio) {
  double c = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    c += pmf[s];
    if (c >= ratio) return static_cast<int>(s);
  }
  return static_cast<int>(pmf.size()) - 1;
}

// Agent-side regime pick: argmax over x of belief[x] * f_x^i(demand).
// Scale-invariant in the belief. Ties go to the regime with the lower total
// mean demand, then to the lower index; `means` is regime_demand_means(dm).
inline int regime_select_with_means(const std::vector<double>& regime_belief, int demand,
                                    int retailer, const DemandModel& dm,
                                    const std::vector<double>& means) {
  if (static_cast<int>(regime_belief.size()) != dm.n_regimes)
    throw std::invalid_argument("regime_select: belief shape mismatch");
  if (demand < 0 || demand > dm.d_max)
    throw std::invalid_argument("regime_select: demand outside support");
  int best = 0;
  double best_score = regime_belief[0] * dm.at(0, retailer, demand);
  for (int x = 1; x < dm.n_regimes; ++x) {
    double score = regime_belief[x] * dm.at(x, retailer, demand);
    bool better = score > best_score;
    bool tie = score == best_score &&
               (means[x] < means[best] || (means[x] == means[best] && x < best));
    if (better || tie) {
      best = x;
      best_score = score;
    }
  }
  return best;
}

inline int regime_select(const std::vector<double>& regime_belief, int demand, int retailer,
                         const DemandModel& dm) {
  return regime_select_with_means(regime_belief, demand, retailer, dm, regime_demand_means(dm));
}

// The full demand -> regime map for one retailer at a fixed belief; belief
// operators and the solver consume whole maps.
inline std::vector<int> regime_selection_map(const std::vector<double>& regime_belief, int retailer,
                                             const DemandModel& dm) {
  auto means = regime_demand_means(dm);
  std::vector<int> sel(dm.d_max + 1);
  for (int d = 0; d <= dm.d_max; ++d)
    sel[d] = regime_select_with_means(regime_belief, d, retailer, dm, means);
  return sel;
}

// Order placed by retailer i: raise post-demand stock to the selected target,
// never negative, clamped by u_max (validation guarantees u_max >= s_max, so
// the clamp cannot bind for in-range targets).
inline int execute_prescription(const Prescription& pre, const std::vector<double>& regime_belief,
                                int demand, int post_inventory, int retailer,
                                const DemandModel& dm, int u_max) {
  int x = regime_select(regime_belief, demand, retailer, dm);
  int s = pre.targets[retailer][x];
  return std::min(std::max(s - post_inventory, 0), u_max);
}

namespace detail {
inline void check_grid(const ActionGrid& grid, int n_regimes, int s_max) {
  if (static_cast<int>(grid.levels.size()) != n_regimes)
    throw std::invalid_argument("action grid: need one level set per regime");
  for (const auto& ls : grid.levels) {
    if (ls.empty()) throw std::invalid_argument("action grid: empty level set for a regime");
    for (int s : ls)
      if (s < 0 || s > s_max)
        throw std::invalid_argument("action grid: target " + std::to_string(s) +
                                    " outside [0, s_max]");
    for (std::size_t k = 1; k < ls.size(); ++k)
      if (ls[k] <= ls[k - 1])
        throw std::invalid_argument("action grid: levels must be strictly increasing");
  }
}
}  // namespace detail

// Cross product {0,1} x target choices, deterministic order: comm bit
// ascending, then lexicographic targets (retailer-major, regime-minor).
inline std::vector<CoordinatorAction> enumerate_actions(const ActionGrid& grid, int n_retailers,
                                                        int n_regimes, int s_max,
                                                        bool include_comm = true,
                                                        bool include_silent = true) {
  detail::check_grid(grid, n_regimes, s_max);
  if (!include_comm && !include_silent)
    throw std::invalid_argument("enumerate_actions: at least one comm mode required");

  int slots = grid.symmetric ? n_regimes : n_retailers * n_regimes;
  auto level_set = [&](int slot) -> const std::vector<int>& {
    return grid.levels[grid.symmetric ? slot : slot % n_regimes];
  };

  std::vector<CoordinatorAction> out;
  for (int chi = 0; chi <= 1; ++chi) {
    if ((chi == 0 && !include_silent) || (chi == 1 && !include_comm)) continue;
    std::vector<int> pos(slots, 0);
    while (true) {
      CoordinatorAction a;
      a.id = static_cast<int>(out.size());
      a.comm = chi == 1;
      a.prescription.targets.assign(n_retailers, std::vector<int>(n_regimes));
      for (int i = 0; i < n_retailers; ++i)
        for (int x = 0; x < n_regimes; ++x) {
          int slot = grid.symmetric ? x : i * n_regimes + x;
          a.prescription.targets[i][x] = level_set(slot)[pos[slot]];
        }
      out.push_back(std::move(a));
      // odometer, last slot fastest: lexicographic order over the slot tuple
      int k = slots - 1;
      while (k >= 0 && pos[k] + 1 == static_cast<int>(level_set(k).size())) pos[k--] = 0;
      if (k < 0) break;
      ++pos[k];
    }
  }
  return out;
}

// Step-2 levels spanning the per-regime newsvendor level +/- 4, clamped to
// [0, s_max]; duplicates collapse after clamping.
inline ActionGrid build_default_grid(const ScenarioConfig& sc) {
  double ratio = sc.costs.penalty / (sc.costs.penalty + sc.costs.holding);
  ActionGrid grid;
  grid.symmetric = true;
  grid.levels.resize(sc.regimes.n);
  for (int x = 0; x < sc.regimes.n; ++x) {
    std::vector<double> pmf(sc.demand.row(x, 0), sc.demand.row(x, 0) + sc.demand.d_max + 1);
    int q = newsvendor_level(pmf, ratio);
    std::vector<int> ls;
    for (int k = -4; k <= 4; k += 2) {
      int v = std::clamp(q + k, 0, sc.s_max);
      if (ls.empty() || v > ls.back()) ls.push_back(v);
    }
    grid.levels[x] = std::move(ls);
  }
  return grid;
}

}  // namespace coordinv
