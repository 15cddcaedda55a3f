#pragma once
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "coordinv/actions.hpp"
#include "coordinv/belief.hpp"
#include "coordinv/dynamics.hpp"
#include "coordinv/scenario.hpp"

namespace coordinv {

// Solver-side coarsening of the communication observation: each retailer's
// reported demand is mapped to one of n_bins contiguous ranges. Contiguity is
// the right shape here because the regime likelihood ratio is monotone in
// demand, so optimal coarse partitions are intervals. Bin edges equalize mass
// under the equal-weight regime mixture. When the support is no larger than
// the requested bin count the bins collapse to singletons and the coarsening
// is exact.
struct DemandBins {
  int n_bins = 0;
  std::vector<std::vector<int>> bin_of;  // [i][d]
  std::vector<std::vector<int>> lo;      // [i][k], inclusive
  std::vector<std::vector<int>> hi;      // [i][k], inclusive
};

inline DemandBins make_demand_bins(const ScenarioConfig& sc, int requested_bins) {
  if (requested_bins < 1) throw std::invalid_argument("demand bins: need at least one bin");
  const int support = sc.demand.d_max + 1;
  const int nb = std::min(requested_bins, support);

  DemandBins db;
  db.n_bins = nb;
  db.bin_of.assign(sc.n_retailers, std::vector<int>(support, 0));
  db.lo.assign(sc.n_retailers, std::vector<int>(nb, 0));
  db.hi.assign(sc.n_retailers, std::vector<int>(nb, 0));

  for (int i = 0; i < sc.n_retailers; ++i) {
    std::vector<double> mix(support, 0.0);
    for (int x = 0; x < sc.regimes.n; ++x)
      for (int d = 0; d < support; ++d) mix[d] += sc.demand.at(x, i, d) / sc.regimes.n;
    double total = 0.0;
    for (double v : mix) total += v;

    int d = 0;
    double cum = 0.0;
    for (int k = 0; k < nb; ++k) {
      db.lo[i][k] = d;
      if (k == nb - 1) {
        while (d < support) cum += mix[d++];
      } else {
        double target = total * (k + 1) / nb;
        // Take at least one point, but leave room for the remaining bins.
        do {
          cum += mix[d++];
        } while (d < support - (nb - 1 - k) && cum < target);
      }
      db.hi[i][k] = d - 1;
      for (int v = db.lo[i][k]; v <= db.hi[i][k]; ++v) db.bin_of[i][v] = k;
    }
  }
  return db;
}

namespace detail {
inline int ipow(int base, int exp) {
  int r = 1;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

// Contract one inventory axis of a flat per-regime slice with a dense
// (s_cap x s_cap) kernel M[I*s_cap + J]. Forward maps source digit I to
// destination digit J; backward is the adjoint (used for alpha
// backprojection).
inline void contract_axis(const double* in, double* out, const double* M, std::size_t stride,
                          int s_cap, std::size_t inv_block, bool backward) {
  const std::size_t block = stride * static_cast<std::size_t>(s_cap);
  const std::size_t supers = inv_block / static_cast<std::size_t>(s_cap);
  for (std::size_t s = 0; s < supers; ++s) {
    const std::size_t off = (s / stride) * block + (s % stride);
    if (backward) {
      for (int I = 0; I < s_cap; ++I) {
        double acc = 0.0;
        const double* row = M + static_cast<std::size_t>(I) * s_cap;
        for (int J = 0; J < s_cap; ++J) acc += row[J] * in[off + J * stride];
        out[off + I * stride] = acc;
      }
    } else {
      for (int J = 0; J < s_cap; ++J) out[off + J * stride] = 0.0;
      for (int I = 0; I < s_cap; ++I) {
        double v = in[off + I * stride];
        if (v == 0.0) continue;
        const double* row = M + static_cast<std::size_t>(I) * s_cap;
        for (int J = 0; J < s_cap; ++J) out[off + J * stride] += v * row[J];
      }
    }
  }
}
}  // namespace detail

// Transition/observation kernel for one (belief, action) pair. The agents'
// regime selection depends on the decision-time regime marginal, so the
// kernel is built per belief; everything downstream (branch expansion,
// alpha backprojection) reuses the same per-axis matrices.
class ActionKernel {
 public:
  struct Branch {
    int obs = 0;
    double prob = 0.0;
    FlatBelief posterior;
  };

  ActionKernel(const ScenarioConfig& sc, const DemandBins& bins, const JointIndexer& dims,
               const CoordinatorAction& a, const std::vector<double>& regime_marginal)
      : sc_(&sc), dims_(dims), action_(a), n_bins_(bins.n_bins),
        n_k_(a.comm ? bins.n_bins : 1) {
    const int scap = dims_.s_cap;
    mats_.assign(static_cast<std::size_t>(sc.regimes.n) * sc.n_retailers * n_k_ * scap * scap,
                 0.0);
    for (int i = 0; i < sc.n_retailers; ++i) {
      auto sel = regime_selection_map(regime_marginal, i, sc.demand);
      for (int x = 0; x < sc.regimes.n; ++x)
        for (int d = 0; d <= sc.demand.d_max; ++d) {
          double f = sc.demand.at(x, i, d);
          if (f <= 0.0) continue;
          int k = action_.comm ? bins.bin_of[i][d] : 0;
          int s = action_.prescription.targets[i][sel[d]];
          double* M = mat(x, i, k);
          for (int I = 0; I < scap; ++I) {
            int post = std::max(I - d, 0);
            int order = std::min(std::max(s - post, 0), sc.u_max);
            int J = std::min(post + order, sc.s_max);
            M[static_cast<std::size_t>(I) * scap + J] += f;
          }
        }
    }
  }

  const CoordinatorAction& action() const { return action_; }
  int n_obs() const { return action_.comm ? detail::ipow(n_k_, sc_->n_retailers) : 1; }
  const double* mat(int x, int i, int k) const {
    return &mats_[(((static_cast<std::size_t>(x) * sc_->n_retailers + i) * n_k_ + k) *
                   dims_.s_cap) *
                  dims_.s_cap];
  }

  // All observation branches with their probabilities and normalized
  // posteriors. Branches below prune_prob are dropped (callers account for
  // the lost mass). Silent actions reuse the simulator's prediction operator
  // so both sides of the codebase stay on one code path.
  std::vector<Branch> expand(const FlatBelief& b, double prune_prob = 0.0) const {
    std::vector<Branch> out;
    if (!action_.comm) {
      Branch br;
      br.obs = 0;
      br.prob = 1.0;
      br.posterior = predict_no_comm(*sc_, b, action_);
      out.push_back(std::move(br));
      return out;
    }

    const int K = n_obs();
    const int N = sc_->n_retailers;
    std::vector<std::vector<double>> accum(K);
    std::vector<double> evidence(K, 0.0);
    std::vector<std::vector<double>> level(N + 1, std::vector<double>(dims_.inv_block));

    for (int x = 0; x < dims_.n_regimes; ++x) {
      const double* src = &b.p[static_cast<std::size_t>(x) * dims_.inv_block];
      std::copy(src, src + dims_.inv_block, level[0].begin());
      expand_rec(x, 0, 0, level, accum, evidence);
    }

    for (int o = 0; o < K; ++o) {
      if (evidence[o] <= prune_prob || accum[o].empty()) continue;
      Branch br;
      br.obs = o;
      br.prob = evidence[o];
      br.posterior.dims = dims_;
      br.posterior.p = std::move(accum[o]);
      for (double& v : br.posterior.p) v /= evidence[o];
      out.push_back(std::move(br));
    }
    return out;
  }

  // beta(s) = E[ alpha(s') * 1{obs} | s, action ]: the adjoint of expand.
  // Probabilities are folded in (per-axis kernels are substochastic), so a
  // point backup is g + discount * sum_o backproject(o, best_alpha_o).
  std::vector<double> backproject(int obs, const std::vector<double>& alpha) const {
    std::vector<int> kdig(sc_->n_retailers, 0);
    if (action_.comm) {
      int rem = obs;
      for (int i = sc_->n_retailers - 1; i >= 0; --i) {
        kdig[i] = rem % n_k_;
        rem /= n_k_;
      }
    }
    std::vector<double> beta(dims_.size(), 0.0);
    std::vector<double> abar(dims_.inv_block), tmp(dims_.inv_block);
    for (int x = 0; x < dims_.n_regimes; ++x) {
      std::fill(abar.begin(), abar.end(), 0.0);
      for (int y = 0; y < dims_.n_regimes; ++y) {
        double pxy = sc_->regimes.p(x, y);
        if (pxy <= 0.0) continue;
        const double* ay = &alpha[static_cast<std::size_t>(y) * dims_.inv_block];
        for (std::size_t j = 0; j < dims_.inv_block; ++j) abar[j] += pxy * ay[j];
      }
      for (int i = 0; i < sc_->n_retailers; ++i) {
        detail::contract_axis(abar.data(), tmp.data(), mat(x, i, kdig[i]), dims_.strides[i],
                              dims_.s_cap, dims_.inv_block, /*backward=*/true);
        abar.swap(tmp);
      }
      std::copy(abar.begin(), abar.end(), beta.begin() + static_cast<std::size_t>(x) * dims_.inv_block);
    }
    return beta;
  }

 private:
  double* mat(int x, int i, int k) {
    return &mats_[(((static_cast<std::size_t>(x) * sc_->n_retailers + i) * n_k_ + k) *
                   dims_.s_cap) *
                  dims_.s_cap];
  }

  void expand_rec(int x, int axis, int obs_prefix, std::vector<std::vector<double>>& level,
                  std::vector<std::vector<double>>& accum, std::vector<double>& evidence) const {
    const int N = sc_->n_retailers;
    if (axis == N) {
      const auto& leaf = level[N];
      double mass = 0.0;
      for (double v : leaf) mass += v;
      if (mass <= 0.0) return;
      evidence[obs_prefix] += mass;
      auto& acc = accum[obs_prefix];
      if (acc.empty()) acc.assign(dims_.size(), 0.0);
      for (int y = 0; y < dims_.n_regimes; ++y) {
        double pxy = sc_->regimes.p(x, y);
        if (pxy <= 0.0) continue;
        double* dst = &acc[static_cast<std::size_t>(y) * dims_.inv_block];
        for (std::size_t j = 0; j < dims_.inv_block; ++j) dst[j] += pxy * leaf[j];
      }
      return;
    }
    for (int k = 0; k < n_k_; ++k) {
      detail::contract_axis(level[axis].data(), level[axis + 1].data(), mat(x, axis, k),
                            dims_.strides[axis], dims_.s_cap, dims_.inv_block,
                            /*backward=*/false);
      expand_rec(x, axis + 1, obs_prefix * n_k_ + k, level, accum, evidence);
    }
  }

  const ScenarioConfig* sc_;
  JointIndexer dims_;
  CoordinatorAction action_;
  int n_bins_;
  int n_k_;
  std::vector<double> mats_;
};

// The planning model the solvers operate on: flat joint state space, the
// enumerated coordinator actions, binned communication observations, and
// per-state expected stage costs.
class CoordinatorModel {
 public:
  CoordinatorModel(const ScenarioConfig& sc, std::vector<CoordinatorAction> actions,
                   int n_bins = 8)
      : sc_(&sc),
        dims_(JointIndexer::make(sc.regimes.n, sc.n_retailers, sc.s_max)),
        bins_(make_demand_bins(sc, n_bins)),
        actions_(std::move(actions)) {
    if (actions_.empty()) throw std::invalid_argument("coordinator model: no actions");
    // Expected per-retailer demand cost (holding + stockout) by regime and
    // current stock; the order arrives after demand, so it carries no cost.
    const int scap = dims_.s_cap;
    std::vector<double> w(static_cast<std::size_t>(sc.regimes.n) * sc.n_retailers * scap, 0.0);
    for (int x = 0; x < sc.regimes.n; ++x)
      for (int i = 0; i < sc.n_retailers; ++i)
        for (int I = 0; I < scap; ++I) {
          double acc = 0.0;
          for (int d = 0; d <= sc.demand.d_max; ++d)
            acc += sc.demand.at(x, i, d) * ::coordinv::stage_cost(I, d, false, sc.costs);
          w[(static_cast<std::size_t>(x) * sc.n_retailers + i) * scap + I] = acc;
        }
    cost_silent_.assign(dims_.size(), 0.0);
    for (int x = 0; x < sc.regimes.n; ++x)
      for (std::size_t j = 0; j < dims_.inv_block; ++j) {
        double acc = 0.0;
        for (int i = 0; i < sc.n_retailers; ++i)
          acc += w[(static_cast<std::size_t>(x) * sc.n_retailers + i) * scap +
                   dims_.inv_digit(j, i)];
        cost_silent_[static_cast<std::size_t>(x) * dims_.inv_block + j] = acc;
      }
    cost_comm_ = cost_silent_;
    for (double& v : cost_comm_) v += comm_surcharge();
  }

  CoordinatorModel(const ScenarioConfig& sc, const ActionGrid& grid, int n_bins = 8,
                   bool include_comm = true, bool include_silent = true)
      : CoordinatorModel(sc,
                         enumerate_actions(grid, sc.n_retailers, sc.regimes.n, sc.s_max,
                                           include_comm, include_silent),
                         n_bins) {}

  const ScenarioConfig& scenario() const { return *sc_; }
  const JointIndexer& dims() const { return dims_; }
  const DemandBins& bins() const { return bins_; }
  const std::vector<CoordinatorAction>& actions() const { return actions_; }
  double discount() const { return sc_->costs.discount; }
  // The planner's communication bit is all-or-none, so one shared round is the
  // atomic priced event: lambda per round, the same units the simulator reports.
  double comm_surcharge() const { return sc_->costs.comm_lambda; }

  const std::vector<double>& state_cost(bool comm) const {
    return comm ? cost_comm_ : cost_silent_;
  }
  double stage_cost(const FlatBelief& b, const CoordinatorAction& a) const {
    const auto& g = state_cost(a.comm);
    double acc = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) acc += g[j] * b.p[j];
    return acc;
  }
  // Tight constant bounds on one-period cost; anchor the value bounds.
  double min_stage_cost() const {
    double m = cost_silent_[0];
    for (double v : cost_silent_) m = std::min(m, v);
    return m;
  }
  double max_stage_cost() const {
    double m = 0.0;
    for (double v : cost_comm_) m = std::max(m, v);
    return m;
  }

  ActionKernel kernel(const std::vector<double>& regime_marginal,
                      const CoordinatorAction& a) const {
    return ActionKernel(*sc_, bins_, dims_, a, regime_marginal);
  }

 private:
  const ScenarioConfig* sc_;
  JointIndexer dims_;
  DemandBins bins_;
  std::vector<CoordinatorAction> actions_;
  std::vector<double> cost_silent_;
  std::vector<double> cost_comm_;
};

}  // namespace coordinv
