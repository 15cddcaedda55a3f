#pragma once
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "coordinv/actions.hpp"
#include "coordinv/scenario.hpp"

namespace coordinv {

using ordered_json = nlohmann::ordered_json;

inline ordered_json grid_to_json(const ActionGrid& grid) {
  ordered_json j;
  j["symmetric"] = grid.symmetric;
  j["levels"] = grid.levels;
  return j;
}

inline ActionGrid grid_from_json(const ordered_json& j) {
  ActionGrid grid;
  grid.symmetric = j.at("symmetric").get<bool>();
  grid.levels = j.at("levels").get<std::vector<std::vector<int>>>();
  return grid;
}

inline ordered_json scenario_to_json(const ScenarioConfig& sc) {
  ordered_json j;
  j["schema_version"] = sc.schema_version;
  j["name"] = sc.name;
  j["n_retailers"] = sc.n_retailers;

  ordered_json reg;
  reg["labels"] = sc.regimes.labels;
  ordered_json rows = ordered_json::array();
  for (int x = 0; x < sc.regimes.n; ++x) {
    ordered_json row = ordered_json::array();
    for (int y = 0; y < sc.regimes.n; ++y) row.push_back(sc.regimes.p(x, y));
    rows.push_back(std::move(row));
  }
  reg["transition"] = std::move(rows);
  reg["initial"] = sc.regimes.initial;
  j["regimes"] = std::move(reg);

  ordered_json dem;
  dem["d_max"] = sc.demand.d_max;
  ordered_json pmf = ordered_json::array();
  for (int x = 0; x < sc.demand.n_regimes; ++x) {
    ordered_json per_retailer = ordered_json::array();
    for (int i = 0; i < sc.demand.n_retailers; ++i) {
      ordered_json row = ordered_json::array();
      for (int d = 0; d <= sc.demand.d_max; ++d) row.push_back(sc.demand.at(x, i, d));
      per_retailer.push_back(std::move(row));
    }
    pmf.push_back(std::move(per_retailer));
  }
  dem["pmf"] = std::move(pmf);
  j["demand"] = std::move(dem);

  ordered_json costs;
  costs["holding"] = sc.costs.holding;
  costs["penalty"] = sc.costs.penalty;
  costs["comm_lambda"] = sc.costs.comm_lambda;
  costs["discount"] = sc.costs.discount;
  j["costs"] = std::move(costs);

  ordered_json bounds;
  bounds["s_max"] = sc.s_max;
  bounds["u_max"] = sc.u_max;
  j["bounds"] = std::move(bounds);

  j["initial_inventories"] = sc.initial_inventories;
  return j;
}

// Parses and validates; throws on any structural violation so callers never
// see a half-built scenario.
inline ScenarioConfig scenario_from_json(const ordered_json& j) {
  int version = j.at("schema_version").get<int>();
  if (version != 1)
    throw std::invalid_argument("scenario file: unsupported schema_version " +
                                std::to_string(version));
  ScenarioConfig sc;
  sc.schema_version = version;
  sc.name = j.value("name", std::string("unnamed"));
  sc.n_retailers = j.at("n_retailers").get<int>();

  const auto& reg = j.at("regimes");
  sc.regimes.labels = reg.at("labels").get<std::vector<std::string>>();
  sc.regimes.n = static_cast<int>(sc.regimes.labels.size());
  auto rows = reg.at("transition").get<std::vector<std::vector<double>>>();
  for (const auto& row : rows)
    sc.regimes.transition.insert(sc.regimes.transition.end(), row.begin(), row.end());
  if (static_cast<int>(rows.size()) != sc.regimes.n)
    throw std::invalid_argument("scenario file: transition row count mismatch");
  sc.regimes.initial = reg.at("initial").get<std::vector<double>>();

  const auto& dem = j.at("demand");
  sc.demand.n_regimes = sc.regimes.n;
  sc.demand.n_retailers = sc.n_retailers;
  sc.demand.d_max = dem.at("d_max").get<int>();
  auto pmf = dem.at("pmf").get<std::vector<std::vector<std::vector<double>>>>();
  if (static_cast<int>(pmf.size()) != sc.regimes.n)
    throw std::invalid_argument("scenario file: demand pmf regime count mismatch");
  for (const auto& per_retailer : pmf) {
    if (static_cast<int>(per_retailer.size()) != sc.n_retailers)
      throw std::invalid_argument("scenario file: demand pmf retailer count mismatch");
    for (const auto& row : per_retailer) {
      if (static_cast<int>(row.size()) != sc.demand.d_max + 1)
        throw std::invalid_argument("scenario file: demand pmf support mismatch");
      sc.demand.pmf.insert(sc.demand.pmf.end(), row.begin(), row.end());
    }
  }

  const auto& costs = j.at("costs");
  sc.costs.holding = costs.at("holding").get<double>();
  sc.costs.penalty = costs.at("penalty").get<double>();
  sc.costs.comm_lambda = costs.at("comm_lambda").get<double>();
  sc.costs.discount = costs.at("discount").get<double>();

  const auto& bounds = j.at("bounds");
  sc.s_max = bounds.at("s_max").get<int>();
  sc.u_max = bounds.at("u_max").get<int>();
  sc.initial_inventories = j.at("initial_inventories").get<std::vector<int>>();

  validate(sc);
  return sc;
}

struct LoadedScenario {
  ScenarioConfig scenario;
  bool has_grid = false;
  ActionGrid grid;
};

inline LoadedScenario load_scenario(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open scenario file: " + path);
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario file " + path + ": " + e.what());
  }
  LoadedScenario out;
  out.scenario = scenario_from_json(j);
  if (j.contains("action_grid")) {
    out.grid = grid_from_json(j.at("action_grid"));
    detail::check_grid(out.grid, out.scenario.regimes.n, out.scenario.s_max);
    out.has_grid = true;
  }
  return out;
}

inline void save_scenario(const std::string& path, const ScenarioConfig& sc,
                          const ActionGrid* grid = nullptr) {
  ordered_json j = scenario_to_json(sc);
  if (grid) j["action_grid"] = grid_to_json(*grid);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write scenario file: " + path);
  os << j.dump(2) << "\n";
}

// Desk-scale single-retailer instance used by the bracket checks: two sticky
// regimes, Poisson 5/15 demand, a tight stock cap, fast discounting.
inline ScenarioConfig tiny_scenario(double comm_lambda = 2.0) {
  CostParams costs;
  costs.holding = 1.0;
  costs.penalty = 5.0;
  costs.comm_lambda = comm_lambda;
  costs.discount = 0.9;
  ScenarioConfig sc = build_two_regime_scenario(1, 0.8, 5.0, 15.0, costs, 5, 5, {5});
  sc.name = "tiny";
  return sc;
}

inline ActionGrid tiny_grid() {
  ActionGrid grid;
  grid.symmetric = true;
  grid.levels = {{3, 4, 5}, {3, 4, 5}};
  return grid;
}

// The main experiment family: homogeneous retailers, rho-sticky regimes,
// Poisson 5/15 demand. s_max defaults to 30; pass 20 for the 3-retailer runs.
// Regime persistence defaults to 0.95: with near-disjoint demand pmfs a fresh
// local observation pins the regime on its own, so at faster mixing the shared
// channel is worth less than any messaging cost and every policy collapses to
// the same stationary hedge. Slow regimes keep communication decision-relevant.
inline ScenarioConfig base_scenario(int n_retailers = 2, double comm_lambda = 2.0,
                                    double rho = 0.95, int s_max = 30) {
  CostParams costs;
  costs.holding = 1.0;
  costs.penalty = 5.0;
  costs.comm_lambda = comm_lambda;
  costs.discount = 0.95;
  ScenarioConfig sc = build_two_regime_scenario(n_retailers, rho, 5.0, 15.0, costs, s_max, s_max,
                                                std::vector<int>(n_retailers, 7));
  sc.name = "base" + std::to_string(n_retailers);
  return sc;
}

// Named instances accepted by the command line wherever a scenario file path
// is expected: "tiny", "base2", "base3".
inline LoadedScenario builtin_scenario(const std::string& name, double comm_lambda = 2.0) {
  LoadedScenario out;
  if (name == "tiny") {
    out.scenario = tiny_scenario(comm_lambda);
    out.grid = tiny_grid();
    out.has_grid = true;
    return out;
  }
  if (name == "base2" || name == "base3") {
    int n = name == "base2" ? 2 : 3;
    out.scenario = base_scenario(n, comm_lambda, 0.95, n == 3 ? 20 : 30);
    out.grid = build_default_grid(out.scenario);
    out.has_grid = true;
    return out;
  }
  throw std::runtime_error("unknown scenario: " + name +
                           " (expected a file path or one of tiny, base2, base3)");
}

}  // namespace coordinv
