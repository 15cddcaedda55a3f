#pragma once
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coordinv/prob.hpp"
#include "coordinv/rng.hpp"
#include "coordinv/scenario.hpp"

namespace coordinv {

struct WorldState {
  int regime = 0;
  std::vector<int> inventories;
};

struct PeriodOutcome {
  std::vector<int> demands;
  std::vector<int> sales;
  std::vector<int> orders;
  std::vector<std::uint8_t> comm_flags;
  double holding_cost = 0.0;
  double stockout_cost = 0.0;
  double comm_cost = 0.0;
};

// Lost-sales step: sales are capped by stock, the order arrives within the
// period, and on-hand stock never exceeds s_max.
inline int step_inventory(int inventory, int demand, int order, int s_max) {
  if (inventory < 0 || demand < 0 || order < 0) throw std::invalid_argument("step_inventory: negative input");
  int post = std::max(inventory - demand, 0);
  return std::min(post + order, s_max);
}

// One retailer's stage cost: holding on leftover stock, penalty on unmet
// demand, lambda per message sent.
inline double stage_cost(int inventory, int demand, bool comm, const CostParams& c) {
  double leftover = static_cast<double>(std::max(inventory - demand, 0));
  double unmet = static_cast<double>(std::max(demand - inventory, 0));
  return c.holding * leftover + c.penalty * unmet + (comm ? c.comm_lambda : 0.0);
}

inline int sample_regime(const RegimeModel& r, int regime, RngStream& rng) {
  std::vector<double> row(r.transition.begin() + static_cast<std::size_t>(regime) * r.n,
                          r.transition.begin() + static_cast<std::size_t>(regime + 1) * r.n);
  return sample_index(row, rng);
}

inline int sample_demand(const DemandModel& dm, int regime, int retailer, RngStream& rng) {
  std::vector<double> row(dm.row(regime, retailer), dm.row(regime, retailer) + dm.d_max + 1);
  return sample_index(row, rng);
}

// Advances the world one period given realized demands and placed orders.
inline WorldState sample_transition(const ScenarioConfig& sc, const WorldState& s,
                                    const std::vector<int>& demands, const std::vector<int>& orders,
                                    RngStream& rng) {
  if (static_cast<int>(demands.size()) != sc.n_retailers ||
      static_cast<int>(orders.size()) != sc.n_retailers)
    throw std::invalid_argument("sample_transition: per-retailer vector shape mismatch");
  WorldState next;
  next.regime = sample_regime(sc.regimes, s.regime, rng);
  next.inventories.resize(sc.n_retailers);
  for (int i = 0; i < sc.n_retailers; ++i)
    next.inventories[i] = step_inventory(s.inventories[i], demands[i], orders[i], sc.s_max);
  return next;
}

}  // namespace coordinv
