#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coordinv/belief.hpp"
#include "coordinv/dynamics.hpp"
#include "coordinv/policies.hpp"
#include "coordinv/rng.hpp"

namespace coordinv {

// How the per-period sharing cost is charged: once per communication round
// (matches the headline cost tables), or lambda per message sent. The
// policy_default resolves to per_message for threshold policies, whose
// triggers are individual, and round for everything else.
enum class CommAccounting { policy_default, round, per_message };

inline CommAccounting resolve_accounting(CommAccounting acc, PolicyKind kind) {
  if (acc != CommAccounting::policy_default) return acc;
  return kind == PolicyKind::Threshold ? CommAccounting::per_message : CommAccounting::round;
}

inline std::string accounting_name(CommAccounting acc) {
  switch (acc) {
    case CommAccounting::policy_default: return "policy_default";
    case CommAccounting::round: return "round";
    case CommAccounting::per_message: return "per_message";
  }
  throw std::logic_error("accounting_name: unreachable");
}

inline CommAccounting parse_accounting(const std::string& s) {
  if (s == "policy_default") return CommAccounting::policy_default;
  if (s == "round") return CommAccounting::round;
  if (s == "per_message") return CommAccounting::per_message;
  throw std::invalid_argument("unknown accounting \"" + s +
                              "\" (expected policy_default, round, per_message)");
}

struct SimConfig {
  long horizon = 1000;
  int replications = 20;
  std::uint64_t master_seed = 2024;
  CommAccounting accounting = CommAccounting::policy_default;
  int warmup = 0;  // leading periods excluded from the metrics
  // The flat filter is exact and cheap up to (N <= 2, s_max <= 30); larger
  // instances run the factored filter. Force flags override for tests.
  bool force_flat = false;
  bool force_factored = false;
  bool record_beliefs = false;  // copy post-update marginals into the trace
};

inline bool use_flat_filter(const ScenarioConfig& sc, const SimConfig& cfg) {
  if (cfg.force_flat && cfg.force_factored)
    throw std::invalid_argument("simulate: cannot force both filters");
  if (cfg.force_flat) return true;
  if (cfg.force_factored) return false;
  return sc.n_retailers <= 2 && sc.s_max <= 30;
}

struct PeriodRow {
  long t = 0;
  int regime = 0;  // true regime during the period
  std::vector<int> inventories;  // start-of-period, before demand
  std::vector<int> demands;
  std::vector<int> orders;
  std::vector<std::uint8_t> comm_flags;
  int action_id = -1;
  bool comm_round = false;
  double holding_cost = 0.0;
  double stockout_cost = 0.0;
  double comm_cost = 0.0;
  // Post-update common-belief marginals; filled only when record_beliefs.
  std::vector<double> post_regime_marginal;
  std::vector<std::vector<double>> post_inventory_marginals;
};

struct EpisodeTrace {
  std::vector<PeriodRow> rows;
};

// Sums over the counted periods of one episode.
struct EpisodeStats {
  double holding = 0.0;
  double stockout = 0.0;
  double comm = 0.0;
  long long sold = 0;
  long long demand = 0;
  long comm_rounds = 0;
  long messages = 0;
  long periods = 0;
  double total() const { return holding + stockout + comm; }
};

namespace detail {

inline std::vector<double> regime_marginal_of(const FlatBelief& b) { return b.regime_marginal(); }
inline std::vector<double> regime_marginal_of(const FactoredBelief& fb) { return fb.regime; }

inline FlatBelief make_initial(const ScenarioConfig& sc, const FlatBelief*) {
  return initial_belief(sc);
}
inline FactoredBelief make_initial(const ScenarioConfig& sc, const FactoredBelief*) {
  return factored_initial_belief(sc);
}

inline std::vector<double> inventory_marginal_of(const FlatBelief& b, int retailer) {
  return b.inventory_marginal(retailer);
}
inline std::vector<double> inventory_marginal_of(const FactoredBelief& fb, int retailer) {
  return fb.inventory_marginal(retailer);
}

// The decentralized protocol, one period: decide, realize demand, order by
// prescription, share per the policy, accrue costs, advance truth and belief.
// Demands are drawn retailer-major, then the next regime: one fixed draw
// order per period on a single per-episode stream.
template <class Belief>
EpisodeStats run_episode_impl(const ScenarioConfig& sc, const Policy& policy,
                              const SimConfig& cfg, std::uint64_t rep_index,
                              EpisodeTrace* trace) {
  if (cfg.horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
  if (cfg.warmup < 0 || cfg.warmup >= cfg.horizon)
    throw std::invalid_argument("simulate: warmup must lie in [0, horizon)");
  const DemandModel& dm = sc.demand;
  const CommAccounting acc = resolve_accounting(cfg.accounting, policy.spec().kind);
  const bool threshold = policy.spec().kind == PolicyKind::Threshold;
  const int cap = policy.spec().threshold;

  RngStream rng(cfg.master_seed, "episode", rep_index);
  int regime = sample_index(sc.regimes.initial, rng);
  std::vector<int> inv = sc.initial_inventories;
  Belief belief = make_initial(sc, static_cast<const Belief*>(nullptr));

  EpisodeStats stats;
  std::vector<int> demands(sc.n_retailers), orders(sc.n_retailers);
  std::vector<std::uint8_t> flags(sc.n_retailers);
  std::vector<RetailerReport> reports;

  for (long t = 0; t < cfg.horizon; ++t) {
    CoordinatorAction action = policy.decide(belief, t);
    std::vector<double> marginal = regime_marginal_of(belief);

    for (int i = 0; i < sc.n_retailers; ++i) demands[i] = sample_demand(dm, regime, i, rng);

    reports.clear();
    int messages = 0;
    double holding_t = 0.0, stockout_t = 0.0;
    for (int i = 0; i < sc.n_retailers; ++i) {
      int post = std::max(inv[i] - demands[i], 0);
      orders[i] = execute_prescription(action.prescription, marginal, demands[i], post, i, dm,
                                       sc.u_max);
      flags[i] = threshold ? static_cast<std::uint8_t>(demands[i] > cap)
                           : static_cast<std::uint8_t>(action.comm);
      if (flags[i]) {
        reports.push_back({i, demands[i], post});
        ++messages;
      }
      holding_t += sc.costs.holding * std::max(inv[i] - demands[i], 0);
      stockout_t += sc.costs.penalty * std::max(demands[i] - inv[i], 0);
      if (t >= cfg.warmup) {
        stats.sold += std::min(demands[i], inv[i]);
        stats.demand += demands[i];
      }
    }
    bool round = messages > 0;
    double comm_t = acc == CommAccounting::round
                        ? (round ? sc.costs.comm_lambda : 0.0)
                        : sc.costs.comm_lambda * messages;

    if (t >= cfg.warmup) {
      stats.holding += holding_t;
      stats.stockout += stockout_t;
      stats.comm += comm_t;
      stats.comm_rounds += round ? 1 : 0;
      stats.messages += messages;
      ++stats.periods;
    }

    PeriodRow* row = nullptr;
    if (trace) {
      trace->rows.push_back({});
      row = &trace->rows.back();
      row->t = t;
      row->regime = regime;
      row->inventories = inv;
      row->demands = demands;
      row->orders = orders;
      row->comm_flags = flags;
      row->action_id = action.id;
      row->comm_round = round;
      row->holding_cost = holding_t;
      row->stockout_cost = stockout_t;
      row->comm_cost = comm_t;
    }

    try {
      if (threshold) {
        belief = update_censored(sc, belief, action, reports, cap);
      } else if (action.comm) {
        belief = update_full_comm(sc, belief, action, reports);
      } else {
        belief = predict_no_comm(sc, belief, action);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("simulate: replication " + std::to_string(rep_index) + " period " +
                               std::to_string(t) + " policy " + policy_name(policy.spec()) +
                               " action " + std::to_string(action.id) +
                               ": belief update failed: " + e.what());
    }
    if (row && cfg.record_beliefs) {
      row->post_regime_marginal = regime_marginal_of(belief);
      row->post_inventory_marginals.resize(sc.n_retailers);
      for (int i = 0; i < sc.n_retailers; ++i)
        row->post_inventory_marginals[i] = inventory_marginal_of(belief, i);
    }

    for (int i = 0; i < sc.n_retailers; ++i)
      inv[i] = step_inventory(inv[i], demands[i], orders[i], sc.s_max);
    regime = sample_regime(sc.regimes, regime, rng);
  }
  return stats;
}

}  // namespace detail

inline EpisodeStats run_episode(const ScenarioConfig& sc, const Policy& policy,
                                const SimConfig& cfg, std::uint64_t rep_index,
                                EpisodeTrace* trace = nullptr) {
  if (use_flat_filter(sc, cfg))
    return detail::run_episode_impl<FlatBelief>(sc, policy, cfg, rep_index, trace);
  return detail::run_episode_impl<FactoredBelief>(sc, policy, cfg, rep_index, trace);
}

struct MetricCI {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal approximation across replications
};

struct SimReport {
  MetricCI holding, stockout, comm, total;  // cost per period
  MetricCI fill, comm_freq;                 // fractions in [0,1]
  double pooled_fill = 1.0;                 // total sold / total demand
  int replications = 0;
  long periods_counted = 0;  // per replication
};

namespace detail {

inline MetricCI summarize(const std::vector<double>& xs) {
  MetricCI m;
  double n = static_cast<double>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return m;
}

}  // namespace detail

// Independent episodes on split streams; per-replication per-period averages
// are the unit of aggregation. Fill rate is also pooled across replications.
inline SimReport run_replications(const ScenarioConfig& sc, const Policy& policy,
                                  const SimConfig& cfg) {
  if (cfg.replications < 1) throw std::invalid_argument("simulate: replications must be >= 1");
  std::vector<double> h, s, c, tot, fill, freq;
  long long sold = 0, demand = 0;
  long periods = 0;
  for (int r = 0; r < cfg.replications; ++r) {
    EpisodeStats st = run_episode(sc, policy, cfg, static_cast<std::uint64_t>(r));
    double p = static_cast<double>(st.periods);
    h.push_back(st.holding / p);
    s.push_back(st.stockout / p);
    c.push_back(st.comm / p);
    tot.push_back(st.total() / p);
    fill.push_back(st.demand > 0 ? static_cast<double>(st.sold) / st.demand : 1.0);
    freq.push_back(static_cast<double>(st.comm_rounds) / p);
    sold += st.sold;
    demand += st.demand;
    periods = st.periods;
  }
  SimReport rep;
  rep.holding = detail::summarize(h);
  rep.stockout = detail::summarize(s);
  rep.comm = detail::summarize(c);
  rep.total = detail::summarize(tot);
  rep.fill = detail::summarize(fill);
  rep.comm_freq = detail::summarize(freq);
  rep.pooled_fill = demand > 0 ? static_cast<double>(sold) / demand : 1.0;
  rep.replications = cfg.replications;
  rep.periods_counted = periods;
  return rep;
}

// One row per period; the column list is the documented trace layout.
inline void write_trace_csv(std::ostream& os, const ScenarioConfig& sc, const EpisodeTrace& tr) {
  os << "# coordinv-trace v1\n";
  os << "t,regime,action_id,comm_round";
  for (int i = 0; i < sc.n_retailers; ++i)
    os << ",inv" << i << ",demand" << i << ",order" << i << ",comm" << i;
  os << ",holding_cost,stockout_cost,comm_cost\n";
  for (const auto& r : tr.rows) {
    os << r.t << "," << r.regime << "," << r.action_id << "," << (r.comm_round ? 1 : 0);
    for (int i = 0; i < sc.n_retailers; ++i)
      os << "," << r.inventories[i] << "," << r.demands[i] << "," << r.orders[i] << ","
         << static_cast<int>(r.comm_flags[i]);
    os << "," << r.holding_cost << "," << r.stockout_cost << "," << r.comm_cost << "\n";
  }
}

}  // namespace coordinv
