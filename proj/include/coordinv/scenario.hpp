#pragma once
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "coordinv/prob.hpp"

namespace coordinv {

// Hidden demand-regime chain. `transition` is row-major n x n, transition[x*n+y]
// = Pr(next = y | current = x). `initial` is the regime distribution at t = 0.
struct RegimeModel {
  int n = 0;
  std::vector<std::string> labels;
  std::vector<double> transition;
  std::vector<double> initial;

  double p(int from, int to) const { return transition[static_cast<std::size_t>(from) * n + to]; }
};

// Per-regime, per-retailer demand pmfs on the common support 0..d_max.
// Demands are conditionally independent across retailers given the regime.
struct DemandModel {
  int n_regimes = 0;
  int n_retailers = 0;
  int d_max = 0;
  std::vector<double> pmf;  // [x][i][d], row-major

  double at(int x, int i, int d) const {
    return pmf[(static_cast<std::size_t>(x) * n_retailers + i) * (d_max + 1) + d];
  }
  const double* row(int x, int i) const {
    return &pmf[(static_cast<std::size_t>(x) * n_retailers + i) * (d_max + 1)];
  }
  double mean(int x, int i) const {
    double m = 0.0;
    for (int d = 0; d <= d_max; ++d) m += d * at(x, i, d);
    return m;
  }
  double cdf(int x, int i, int d) const {
    double c = 0.0;
    for (int k = 0; k <= d && k <= d_max; ++k) c += at(x, i, k);
    return c;
  }
};

struct CostParams {
  double holding = 1.0;
  double penalty = 5.0;
  double comm_lambda = 2.0;
  double discount = 0.95;
};

struct ScenarioConfig {
  int schema_version = 1;
  std::string name;
  int n_retailers = 0;
  RegimeModel regimes;
  DemandModel demand;
  CostParams costs;
  int s_max = 0;
  int u_max = 0;
  std::vector<int> initial_inventories;
};

// Poisson pmf over 0..D where D is the smallest value whose raw CDF reaches
// `quantile`; the returned vector is renormalized to sum exactly 1.
inline std::vector<double> truncated_poisson(double mean, double quantile) {
  if (!(mean > 0.0)) throw std::invalid_argument("truncated_poisson: mean must be positive");
  if (!(quantile > 0.0 && quantile < 1.0))
    throw std::invalid_argument("truncated_poisson: quantile must lie in (0,1)");
  std::vector<double> p;
  double logp = -mean;
  p.push_back(std::exp(logp));
  double cdf = p[0];
  int d = 0;
  while (cdf < quantile) {
    ++d;
    if (d > 1000000) throw std::runtime_error("truncated_poisson: runaway support");
    logp += std::log(mean) - std::log(static_cast<double>(d));
    p.push_back(std::exp(logp));
    cdf += p.back();
  }
  normalize_in_place(p);
  return p;
}

inline std::vector<double> stationary_distribution(const RegimeModel& r) {
  // Power iteration; the chains used here are small and ergodic.
  std::vector<double> v(r.initial.begin(), r.initial.end());
  if (static_cast<int>(v.size()) != r.n) v.assign(r.n, 1.0 / r.n);
  for (int it = 0; it < 10000; ++it) {
    std::vector<double> w(r.n, 0.0);
    for (int x = 0; x < r.n; ++x)
      for (int y = 0; y < r.n; ++y) w[y] += v[x] * r.p(x, y);
    double delta = l1_distance(v, w);
    v.swap(w);
    if (delta < 1e-14) break;
  }
  normalize_in_place(v);
  return v;
}

namespace detail {
inline void check_and_normalize_row(std::vector<double>& row, const char* what) {
  double s = 0.0;
  for (double x : row) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": entries must be finite and nonnegative");
    s += x;
  }
  if (std::fabs(s - 1.0) > 1e-6)
    throw std::invalid_argument(std::string(what) + ": row sums to " + std::to_string(s) +
                                ", expected 1");
  for (double& x : row) x /= s;
}
}  // namespace detail

// Structural validation; normalizes rows/pmfs in place (drift above 1e-6 is
// rejected rather than silently repaired).
inline void validate(ScenarioConfig& sc) {
  if (sc.schema_version != 1)
    throw std::invalid_argument("scenario: unsupported schema_version " +
                                std::to_string(sc.schema_version));
  if (sc.n_retailers < 1) throw std::invalid_argument("scenario: n_retailers must be >= 1");
  if (sc.regimes.n < 1) throw std::invalid_argument("scenario: need at least one regime");
  if (static_cast<int>(sc.regimes.labels.size()) != sc.regimes.n)
    throw std::invalid_argument("scenario: regime label count mismatch");
  if (static_cast<int>(sc.regimes.transition.size()) != sc.regimes.n * sc.regimes.n)
    throw std::invalid_argument("scenario: transition matrix shape mismatch");
  for (int x = 0; x < sc.regimes.n; ++x) {
    std::vector<double> row(sc.regimes.transition.begin() + static_cast<std::size_t>(x) * sc.regimes.n,
                            sc.regimes.transition.begin() + static_cast<std::size_t>(x + 1) * sc.regimes.n);
    detail::check_and_normalize_row(row, "scenario transition");
    for (int y = 0; y < sc.regimes.n; ++y) sc.regimes.transition[static_cast<std::size_t>(x) * sc.regimes.n + y] = row[y];
  }
  detail::check_and_normalize_row(sc.regimes.initial, "scenario initial regime distribution");
  if (static_cast<int>(sc.regimes.initial.size()) != sc.regimes.n)
    throw std::invalid_argument("scenario: initial regime distribution shape mismatch");

  const DemandModel& dm = sc.demand;
  if (dm.n_regimes != sc.regimes.n || dm.n_retailers != sc.n_retailers)
    throw std::invalid_argument("scenario: demand model shape mismatch");
  if (dm.d_max < 1) throw std::invalid_argument("scenario: d_max must be >= 1");
  if (static_cast<int>(dm.pmf.size()) != dm.n_regimes * dm.n_retailers * (dm.d_max + 1))
    throw std::invalid_argument("scenario: demand pmf size mismatch");
  for (int x = 0; x < dm.n_regimes; ++x)
    for (int i = 0; i < dm.n_retailers; ++i) {
      std::vector<double> row(dm.row(x, i), dm.row(x, i) + dm.d_max + 1);
      detail::check_and_normalize_row(row, "scenario demand pmf");
      for (int d = 0; d <= dm.d_max; ++d)
        sc.demand.pmf[(static_cast<std::size_t>(x) * dm.n_retailers + i) * (dm.d_max + 1) + d] = row[d];
    }

  if (!(sc.costs.holding >= 0 && sc.costs.penalty >= 0 && sc.costs.comm_lambda >= 0))
    throw std::invalid_argument("scenario: costs must be nonnegative");
  if (!(sc.costs.discount > 0.0 && sc.costs.discount < 1.0))
    throw std::invalid_argument("scenario: discount must lie in (0,1)");
  if (sc.s_max < 1) throw std::invalid_argument("scenario: s_max must be >= 1");
  if (sc.u_max < sc.s_max)
    throw std::invalid_argument(
        "scenario: u_max < s_max is unsupported (order-up-to execution assumes u_max >= s_max)");
  if (static_cast<int>(sc.initial_inventories.size()) != sc.n_retailers)
    throw std::invalid_argument("scenario: initial_inventories shape mismatch");
  for (int v : sc.initial_inventories)
    if (v < 0 || v > sc.s_max)
      throw std::invalid_argument("scenario: initial inventories must lie in [0, s_max]");
}

// Two-regime builder used by most experiments: persistence rho on both rows,
// identical Poisson demand across retailers, common truncated support.
inline ScenarioConfig build_two_regime_scenario(int n_retailers, double rho, double mean_low,
                                                double mean_high, CostParams costs, int s_max,
                                                int u_max, std::vector<int> initial_inventories,
                                                double quantile = 0.9999) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("build_two_regime_scenario: rho must lie in (0,1)");
  std::vector<double> low = truncated_poisson(mean_low, quantile);
  std::vector<double> high = truncated_poisson(mean_high, quantile);
  int d_max = static_cast<int>(std::max(low.size(), high.size())) - 1;

  auto extend = [&](double mean) {
    // Raw series over the common support, renormalized; keeps both regimes on
    // one d_max without zero-padding artifacts.
    std::vector<double> p(d_max + 1);
    double logp = -mean;
    p[0] = std::exp(logp);
    for (int d = 1; d <= d_max; ++d) {
      logp += std::log(mean) - std::log(static_cast<double>(d));
      p[d] = std::exp(logp);
    }
    normalize_in_place(p);
    return p;
  };
  low = extend(mean_low);
  high = extend(mean_high);

  ScenarioConfig sc;
  sc.name = "two_regime";
  sc.n_retailers = n_retailers;
  sc.regimes.n = 2;
  sc.regimes.labels = {"low", "high"};
  sc.regimes.transition = {rho, 1.0 - rho, 1.0 - rho, rho};
  sc.regimes.initial = {0.5, 0.5};
  sc.demand.n_regimes = 2;
  sc.demand.n_retailers = n_retailers;
  sc.demand.d_max = d_max;
  sc.demand.pmf.resize(static_cast<std::size_t>(2) * n_retailers * (d_max + 1));
  for (int i = 0; i < n_retailers; ++i)
    for (int d = 0; d <= d_max; ++d) {
      sc.demand.pmf[(static_cast<std::size_t>(0) * n_retailers + i) * (d_max + 1) + d] = low[d];
      sc.demand.pmf[(static_cast<std::size_t>(1) * n_retailers + i) * (d_max + 1) + d] = high[d];
    }
  sc.costs = costs;
  sc.s_max = s_max;
  sc.u_max = u_max;
  sc.initial_inventories = std::move(initial_inventories);
  validate(sc);
  return sc;
}

// Total mean demand per regime; used for tie-breaking toward the
// lower-demand regime and for reporting.
inline std::vector<double> regime_demand_means(const DemandModel& dm) {
  std::vector<double> m(dm.n_regimes, 0.0);
  for (int x = 0; x < dm.n_regimes; ++x)
    for (int i = 0; i < dm.n_retailers; ++i) m[x] += dm.mean(x, i);
  return m;
}

}  // namespace coordinv
