#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "coordinv/coordinator_model.hpp"

namespace coordinv {

// Linear value certificate over joint states, tagged with the index of the
// action whose backup produced it (-1 for seed vectors with no one-step
// action attached).
struct AlphaVector {
  int action = -1;
  std::vector<double> v;
};

// Min-envelope of alpha vectors: an achievable-cost upper surface. Adding a
// vector can only lower the envelope, so values at any fixed belief are
// monotone non-increasing over a run.
struct UpperEnvelope {
  std::vector<AlphaVector> alphas;

  int best_index(const std::vector<double>& bp) const {
    if (alphas.empty()) throw std::logic_error("upper envelope: empty alpha set");
    int best = 0;
    double best_v = vec_dot(alphas[0].v, bp);
    for (std::size_t k = 1; k < alphas.size(); ++k) {
      double v = vec_dot(alphas[k].v, bp);
      if (v < best_v) {
        best_v = v;
        best = static_cast<int>(k);
      }
    }
    return best;
  }

  double value(const std::vector<double>& bp) const {
    if (alphas.empty()) throw std::logic_error("upper envelope: empty alpha set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : alphas) best = std::min(best, vec_dot(a.v, bp));
    return best;
  }

  // Restriction of best_index to the nonzero support of bp; the posteriors
  // produced by branch expansion are mostly sparse.
  int best_index_sparse(const std::vector<double>& bp, const std::vector<int>& support) const {
    if (alphas.empty()) throw std::logic_error("upper envelope: empty alpha set");
    int best = 0;
    double best_v = 0.0;
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      const auto& av = alphas[k].v;
      double v = 0.0;
      for (int j : support) v += av[j] * bp[j];
      if (k == 0 || v < best_v) {
        best_v = v;
        best = static_cast<int>(k);
      }
    }
    return best;
  }

  // Drops vectors that are pointwise >= another vector; such vectors can
  // never attain the minimum strictly and are dead weight.
  void prune_pointwise(double tol = 1e-12) {
    std::vector<char> dead(alphas.size(), 0);
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      if (dead[a]) continue;
      for (std::size_t b = 0; b < alphas.size(); ++b) {
        if (a == b || dead[b]) continue;
        bool dominated = true;  // b >= a everywhere, so b is redundant
        for (std::size_t j = 0; j < alphas[a].v.size(); ++j)
          if (alphas[b].v[j] < alphas[a].v[j] - tol) {
            dominated = false;
            break;
          }
        if (dominated) dead[b] = 1;
      }
    }
    std::size_t w = 0;
    for (std::size_t k = 0; k < alphas.size(); ++k)
      if (!dead[k]) {
        if (w != k) alphas[w] = std::move(alphas[k]);
        ++w;
      }
    alphas.resize(w);
  }
};

// Lower surface: a corner plane plus sawtooth interpolation through belief
// points. For a concave optimal-cost surface V and a plane <corner, b> <= V,
// a point (b_k, v_k <= V(b_k)) certifies
//   V(b) >= <corner, b> + c * (v_k - <corner, b_k>),  c = min_s b(s) / b_k(s)
// because b = c*b_k + (1-c)*r splits b into the point and a residual
// distribution r that the plane already covers.
struct SawtoothLower {
  struct Point {
    std::vector<int> support;
    std::vector<double> bvals;  // b_k restricted to support
    double v = 0.0;
    double delta = 0.0;  // v - <corner, b_k>, always > 0 for stored points
  };

  std::vector<double> corner;
  std::vector<Point> points;  // sorted by delta descending

  double plane(const std::vector<double>& bp) const { return vec_dot(corner, bp); }

  double value(const std::vector<double>& bp) const {
    double base = plane(bp);
    double best = 0.0;
    for (const auto& pt : points) {
      if (pt.delta <= best) break;  // sorted: no later point can beat best
      double c = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < pt.support.size(); ++k) {
        c = std::min(c, bp[pt.support[k]] / pt.bvals[k]);
        if (c * pt.delta <= best) break;
      }
      if (c > 0.0) best = std::max(best, c * pt.delta);
    }
    return base + best;
  }

  bool insert(const std::vector<double>& bp, double val, double min_gain = 1e-9) {
    if (!(val > value(bp) + min_gain)) return false;
    Point pt;
    for (std::size_t j = 0; j < bp.size(); ++j)
      if (bp[j] > 0.0) {
        pt.support.push_back(static_cast<int>(j));
        pt.bvals.push_back(bp[j]);
      }
    pt.v = val;
    pt.delta = val - plane(bp);
    if (!(pt.delta > 0.0)) return false;  // plane already covers it
    auto it = std::lower_bound(points.begin(), points.end(), pt.delta,
                               [](const Point& p, double d) { return p.delta > d; });
    points.insert(it, std::move(pt));
    return true;
  }
};

// Constant anchors: no policy can beat the best single-period cost forever,
// or do worse than the worst one forever.
inline double value_floor(const CoordinatorModel& model) {
  return model.min_stage_cost() / (1.0 - model.discount());
}
inline double value_cap(const CoordinatorModel& model) {
  return model.max_stage_cost() / (1.0 - model.discount());
}

namespace detail {

// Union of order-up-to targets the model's actions can ever issue for one
// retailer; the relaxed full-information controller picks from this set.
inline std::vector<int> reachable_targets(const CoordinatorModel& model, int retailer) {
  std::vector<int> t;
  for (const auto& a : model.actions())
    for (int s : a.prescription.targets[retailer]) t.push_back(s);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

// Value iteration for one retailer on (regime, stock). `continuation` maps
// (values, x, d, I, post) to the discounted-continuation term; costs and
// regime dynamics are shared, demands are independent across retailers, and
// stage costs add, so the joint value splits exactly into a sum of these
// per-retailer solutions.
template <typename Continuation>
std::vector<double> per_retailer_vi(const ScenarioConfig& sc, int retailer,
                                    Continuation&& continuation, double extra_per_period) {
  const int X = sc.regimes.n;
  const int scap = sc.s_max + 1;
  const double gamma = sc.costs.discount;
  std::vector<double> W(static_cast<std::size_t>(X) * scap, 0.0), Wn(W.size(), 0.0);
  for (int it = 0; it < 100000; ++it) {
    double diff = 0.0;
    for (int x = 0; x < X; ++x)
      for (int I = 0; I < scap; ++I) {
        double acc = extra_per_period;
        for (int d = 0; d <= sc.demand.d_max; ++d) {
          double f = sc.demand.at(x, retailer, d);
          if (f <= 0.0) continue;
          int post = std::max(I - d, 0);
          double cont = continuation(W, x, d, I, post);
          acc += f * (stage_cost(I, d, false, sc.costs) + gamma * cont);
        }
        Wn[static_cast<std::size_t>(x) * scap + I] = acc;
        diff = std::max(diff, std::fabs(acc - W[static_cast<std::size_t>(x) * scap + I]));
      }
    W.swap(Wn);
    if (diff < 1e-12 * (1.0 + std::fabs(W[0]))) break;
  }
  return W;
}

inline double regime_mixed_value(const ScenarioConfig& sc, const std::vector<double>& W, int x,
                                 int next_I) {
  const int scap = sc.s_max + 1;
  double v = 0.0;
  for (int y = 0; y < sc.regimes.n; ++y) {
    double pxy = sc.regimes.p(x, y);
    if (pxy > 0.0) v += pxy * W[static_cast<std::size_t>(y) * scap + next_I];
  }
  return v;
}

}  // namespace detail

// Corner values of the relaxation in which the controller observes the
// regime and every stock level, pays no communication surcharge, and picks
// any reachable target after seeing demand. Every coordinator policy can be
// mimicked by this controller, so <corner, b> lower-bounds the optimal cost
// at every belief.
inline std::vector<double> mdp_corner_bound(const CoordinatorModel& model) {
  const ScenarioConfig& sc = model.scenario();
  const JointIndexer& dims = model.dims();
  const int scap = dims.s_cap;

  std::vector<std::vector<double>> W(sc.n_retailers);
  for (int i = 0; i < sc.n_retailers; ++i) {
    auto targets = detail::reachable_targets(model, i);
    W[i] = detail::per_retailer_vi(
        sc, i,
        [&](const std::vector<double>& V, int x, int /*d*/, int /*I*/, int post) {
          double best = std::numeric_limits<double>::infinity();
          for (int s : targets) {
            int next_I = std::min(std::max(post, s), sc.s_max);
            best = std::min(best, detail::regime_mixed_value(sc, V, x, next_I));
          }
          return best;
        },
        0.0);
  }

  std::vector<double> corner(dims.size(), 0.0);
  for (int x = 0; x < dims.n_regimes; ++x)
    for (std::size_t j = 0; j < dims.inv_block; ++j) {
      double acc = 0.0;
      for (int i = 0; i < sc.n_retailers; ++i)
        acc += W[i][static_cast<std::size_t>(x) * scap + dims.inv_digit(j, i)];
      corner[static_cast<std::size_t>(x) * dims.inv_block + j] = acc;
    }
  return corner;
}

// State values of repeating one action forever with the regime pick frozen
// at the uniform regime marginal. These seed the upper surface; repeating a
// fixed prescription needs no information, so its cost is achievable from
// any belief.
inline AlphaVector blind_alpha(const CoordinatorModel& model, int action_index) {
  const ScenarioConfig& sc = model.scenario();
  const JointIndexer& dims = model.dims();
  const int scap = dims.s_cap;
  const CoordinatorAction& a = model.actions().at(action_index);

  std::vector<double> uniform(sc.regimes.n, 1.0 / sc.regimes.n);
  double per_retailer_comm = a.comm ? sc.costs.comm_lambda : 0.0;

  std::vector<std::vector<double>> W(sc.n_retailers);
  for (int i = 0; i < sc.n_retailers; ++i) {
    auto sel = regime_selection_map(uniform, i, sc.demand);
    W[i] = detail::per_retailer_vi(
        sc, i,
        [&](const std::vector<double>& V, int x, int d, int /*I*/, int post) {
          int s = a.prescription.targets[i][sel[d]];
          int next_I = std::min(std::max(post, s), sc.s_max);
          return detail::regime_mixed_value(sc, V, x, next_I);
        },
        per_retailer_comm);
  }

  AlphaVector out;
  out.action = action_index;
  out.v.assign(dims.size(), 0.0);
  for (int x = 0; x < dims.n_regimes; ++x)
    for (std::size_t j = 0; j < dims.inv_block; ++j) {
      double acc = 0.0;
      for (int i = 0; i < sc.n_retailers; ++i)
        acc += W[i][static_cast<std::size_t>(x) * scap + dims.inv_digit(j, i)];
      out.v[static_cast<std::size_t>(x) * dims.inv_block + j] = acc;
    }
  return out;
}

inline UpperEnvelope blind_upper_bound(const CoordinatorModel& model) {
  UpperEnvelope U;
  for (std::size_t k = 0; k < model.actions().size(); ++k)
    U.alphas.push_back(blind_alpha(model, static_cast<int>(k)));
  U.prune_pointwise();
  return U;
}

}  // namespace coordinv
