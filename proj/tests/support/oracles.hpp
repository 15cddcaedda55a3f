#pragma once
// Independent reference computations for tests. These deliberately avoid the
// library's own code paths: Poisson mass goes through lgamma instead of the
// running product, filters are computed by brute-force enumeration, and so
// on, so that a bug in the implementation cannot hide in its own oracle.
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

namespace oracles {

inline double poisson_pmf(double mean, int k) {
  return std::exp(-mean + k * std::log(mean) - std::lgamma(static_cast<double>(k) + 1.0));
}

inline double poisson_cdf(double mean, int k) {
  double c = 0.0;
  for (int j = 0; j <= k; ++j) c += poisson_pmf(mean, j);
  return c;
}

// v * M^t for row-major square M (distribution as a row vector).
inline std::vector<double> markov_power_apply(const std::vector<double>& m, int n,
                                              std::vector<double> v, int t) {
  for (int step = 0; step < t; ++step) {
    std::vector<double> w(n, 0.0);
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) w[y] += v[x] * m[static_cast<std::size_t>(x) * n + y];
    v.swap(w);
  }
  return v;
}

// Posterior of a two-hypothesis Bayes update.
inline std::pair<double, double> two_term_bayes(double prior0, double like0, double prior1,
                                                double like1) {
  double a = prior0 * like0, b = prior1 * like1;
  double z = a + b;
  if (!(z > 0.0)) throw std::runtime_error("two_term_bayes: zero evidence");
  return {a / z, b / z};
}

// Smallest s with cdf(s) >= ratio for a pmf over 0..n-1.
inline int newsvendor_level(const std::vector<double>& pmf, double ratio) {
  double c = 0.0;
  for (std::size_t s = 0; s < pmf.size(); ++s) {
    c += pmf[s];
    if (c >= ratio) return static_cast<int>(s);
  }
  return static_cast<int>(pmf.size()) - 1;
}

// Wilson-Hilferty approximation to the chi-square upper quantile; adequate
// for the goodness-of-fit checks used here (df >= 5, alpha = 0.01).
inline double chi2_critical(int df, double alpha) {
  double z;
  if (std::fabs(alpha - 0.01) < 1e-12) z = 2.3263478740408408;
  else if (std::fabs(alpha - 0.05) < 1e-12) z = 1.6448536269514722;
  else throw std::invalid_argument("chi2_critical: unsupported alpha");
  double d = static_cast<double>(df);
  double t = 1.0 - 2.0 / (9.0 * d) + z * std::sqrt(2.0 / (9.0 * d));
  return d * t * t * t;
}

// Exact finite-horizon conditional filter by path enumeration, for micro
// instances. The process: regime Markov chain, one retailer pool of demands
// per period, inventories evolve deterministically given demands and a
// caller-supplied order rule. Observation model per period is encoded by a
// weight functor: weight(t, regime_path_value, demands, pre_invs) -> likelihood
// factor (0 forbids the path); pre_invs are the inventories entering period t,
// so report consistency like "post-demand stock was 0" can be conditioned on.
// Returns the joint over (regime, invs) at the horizon, conditioned on all
// weights.
struct EnumSpec {
  int n_regimes = 0;
  std::vector<double> transition;  // row-major
  std::vector<double> initial;
  int n_retailers = 0;
  int d_max = 0;
  // pmf(x, i, d)
  std::function<double(int, int, int)> demand_pmf;
  // order placed by retailer i at period t given (post-demand inventory, demand)
  std::function<int(int, int, int, int)> order_rule;  // (t, i, post_inv, demand) -> order
  int s_max = 0;
};

struct EnumResult {
  std::map<std::pair<int, std::vector<int>>, double> joint;  // (regime, inventories) -> mass
  double evidence = 0.0;
};

using EnumWeight =
    std::function<double(int, int, const std::vector<int>&, const std::vector<int>&)>;

inline void enum_walk(const EnumSpec& es, int t, int horizon, int regime,
                      const std::vector<int>& invs, double w, const EnumWeight& weight,
                      EnumResult& out) {
  if (w <= 0.0) return;
  if (t == horizon) {
    out.joint[{regime, invs}] += w;
    out.evidence += w;
    return;
  }
  // Demands for this period, one nested loop per retailer (recursion keeps it
  // simple; supports tiny d_max only).
  std::vector<int> ds(es.n_retailers, 0);
  std::function<void(int, double)> demand_loop = [&](int i, double wd) {
    if (i == es.n_retailers) {
      double wt = wd * weight(t, regime, ds, invs);
      if (wt <= 0.0) return;
      std::vector<int> next(es.n_retailers);
      for (int j = 0; j < es.n_retailers; ++j) {
        int post = std::max(invs[j] - ds[j], 0);
        int order = es.order_rule(t, j, post, ds[j]);
        next[j] = std::min(post + order, es.s_max);
      }
      for (int y = 0; y < es.n_regimes; ++y) {
        double p = es.transition[static_cast<std::size_t>(regime) * es.n_regimes + y];
        if (p > 0.0) enum_walk(es, t + 1, horizon, y, next, wt * p, weight, out);
      }
      return;
    }
    for (int d = 0; d <= es.d_max; ++d) {
      double p = es.demand_pmf(regime, i, d);
      if (p > 0.0) {
        ds[i] = d;
        demand_loop(i + 1, wd * p);
      }
    }
  };
  demand_loop(0, w);
}

inline EnumResult enumerate_conditional(const EnumSpec& es, int horizon,
                                        const std::vector<int>& initial_invs,
                                        const EnumWeight& weight) {
  EnumResult out;
  for (int x = 0; x < es.n_regimes; ++x)
    if (es.initial[x] > 0.0) enum_walk(es, 0, horizon, x, initial_invs, es.initial[x], weight, out);
  for (auto& kv : out.joint) kv.second /= out.evidence;
  return out;
}

// Forward algorithm for a plain hidden Markov chain: belief over the regime
// after observing per-period demand vectors (product likelihood), each update
// followed by one transition step.
inline std::vector<double> hmm_forward(const std::vector<double>& transition, int n,
                                       std::vector<double> belief,
                                       const std::vector<std::vector<int>>& demand_seq,
                                       const std::function<double(int, int, int)>& pmf,
                                       int n_retailers) {
  for (const auto& ds : demand_seq) {
    for (int x = 0; x < n; ++x) {
      double like = 1.0;
      for (int i = 0; i < n_retailers; ++i) like *= pmf(x, i, ds[i]);
      belief[x] *= like;
    }
    double z = 0.0;
    for (double v : belief) z += v;
    for (double& v : belief) v /= z;
    belief = markov_power_apply(transition, n, belief, 1);
  }
  return belief;
}

}  // namespace oracles
