#pragma once
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "coordinv/solver.hpp"

namespace coordinv {

struct SarsopParams {
  double eps_rel = 0.01;      // stop when (upper - lower) / upper at b0 falls below this
  int max_trials = 300;
  int max_depth = 50;
  int stall_limit = 5;        // consecutive trials with no root-gap progress
  double branch_prune = 1e-9;
  double wall_clock_s = 0.0;  // 0 disables the wall-clock cutoff
  bool verbose = false;
};

struct SarsopResult {
  UpperEnvelope upper;
  SawtoothLower lower;
  int trials = 0;
  double upper_b0 = 0.0;
  double lower_b0 = 0.0;
  double rel_gap = 0.0;
  double seconds = 0.0;
};

namespace detail {

// Bellman backup of the lower surface at b: pruned mass is credited the
// constant best-case continuation so the result stays a valid lower value.
inline std::vector<double> lower_q_values(const CoordinatorModel& model, const SawtoothLower& L,
                                          const FlatBelief& b, double branch_prune,
                                          double floor_v) {
  const double gamma = model.discount();
  const auto marg = b.regime_marginal();
  const auto& actions = model.actions();
  std::vector<double> q(actions.size(), 0.0);
  for (std::size_t ai = 0; ai < actions.size(); ++ai) {
    ActionKernel kernel = model.kernel(marg, actions[ai]);
    auto branches = kernel.expand(b, branch_prune);
    double acc = model.stage_cost(b, actions[ai]);
    double kept = 0.0;
    for (const auto& br : branches) {
      kept += br.prob;
      acc += gamma * br.prob * L.value(br.posterior.p);
    }
    acc += gamma * std::max(0.0, 1.0 - kept) * floor_v;
    q[ai] = acc;
  }
  return q;
}

}  // namespace detail

// Bound-guided point-based solver. Each trial walks forward from b0, choosing
// the action greedily against the lower surface and the child observation
// with the largest probability-weighted excess gap; the walk stops once the
// discount-scaled gap target holds, then both surfaces are backed up along
// the path in reverse. Both surfaces only ever tighten, so the root gap is
// monotone non-increasing in the trial budget. Fully deterministic.
inline SarsopResult sarsop_solve(const CoordinatorModel& model, const FlatBelief& b0,
                                 const SarsopParams& params = {}) {
  auto t_start = std::chrono::steady_clock::now();
  const double gamma = model.discount();
  const double floor_v = value_floor(model);

  SarsopResult res;
  res.upper = blind_upper_bound(model);
  res.lower.corner = mdp_corner_bound(model);

  struct Walker {
    const CoordinatorModel& model;
    UpperEnvelope& U;
    SawtoothLower& L;
    const SarsopParams& pr;
    double gamma;
    double floor_v;
    std::chrono::steady_clock::time_point deadline;
    bool use_deadline = false;

    // Large instances can spend minutes inside one trial, so the wall clock
    // must also cut the walk itself; skipping work only leaves the surfaces
    // less tight, never invalid.
    bool out_of_time() const {
      return use_deadline && std::chrono::steady_clock::now() >= deadline;
    }

    void trial(const FlatBelief& b, int depth, double eps) {
      if (out_of_time()) return;
      double u = U.value(b.p);
      double l = L.value(b.p);
      double thresh = eps * std::pow(gamma, -depth);
      if (depth >= pr.max_depth || u - l <= thresh) return;

      auto ql = detail::lower_q_values(model, L, b, pr.branch_prune, floor_v);
      std::size_t best_a = 0;
      for (std::size_t ai = 1; ai < ql.size(); ++ai)
        if (ql[ai] < ql[best_a]) best_a = ai;

      ActionKernel kernel = model.kernel(b.regime_marginal(), model.actions()[best_a]);
      auto branches = kernel.expand(b, pr.branch_prune);
      double child_thresh = thresh / gamma;
      const FlatBelief* next = nullptr;
      double best_score = 0.0;
      for (const auto& br : branches) {
        double gap = U.value(br.posterior.p) - L.value(br.posterior.p);
        double score = br.prob * (gap - child_thresh);
        if (score > best_score) {
          best_score = score;
          next = &br.posterior;
        }
      }
      if (next) trial(*next, depth + 1, eps);

      if (out_of_time()) return;
      // Children tightened below; refresh both surfaces at b.
      auto ql2 = detail::lower_q_values(model, L, b, pr.branch_prune, floor_v);
      L.insert(b.p, *std::min_element(ql2.begin(), ql2.end()));
      BackupResult bk = point_backup(model, U, b, pr.branch_prune);
      if (bk.q[bk.best_action] < U.value(b.p) - 1e-12)
        U.alphas.push_back(std::move(bk.alpha));
    }
  };

  Walker walker{model, res.upper, res.lower, params, gamma, floor_v};
  if (params.wall_clock_s > 0.0) {
    walker.use_deadline = true;
    walker.deadline = t_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(params.wall_clock_s));
  }
  double prev_gap = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int t = 0; t < params.max_trials; ++t) {
    double u0 = res.upper.value(b0.p);
    double l0 = res.lower.value(b0.p);
    double eps = params.eps_rel * std::max(std::fabs(u0), 1e-6);
    if (u0 - l0 <= eps) break;
    walker.trial(b0, 0, eps);
    ++res.trials;

    double gap = res.upper.value(b0.p) - res.lower.value(b0.p);
    if (gap >= prev_gap - 1e-12) {
      if (++stalled >= params.stall_limit) break;
    } else {
      stalled = 0;
    }
    prev_gap = gap;
    if (params.verbose)
      std::fprintf(stderr, "[bounds] trial %d: lower=%.6f upper=%.6f gap=%.3e alphas=%zu points=%zu\n",
                   res.trials, res.lower.value(b0.p), res.upper.value(b0.p), gap,
                   res.upper.alphas.size(), res.lower.points.size());
    if (params.wall_clock_s > 0.0) {
      double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
      if (el > params.wall_clock_s) break;
    }
  }

  res.upper_b0 = res.upper.value(b0.p);
  res.lower_b0 = res.lower.value(b0.p);
  res.rel_gap = (res.upper_b0 - res.lower_b0) / std::max(std::fabs(res.upper_b0), 1e-9);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return res;
}

}  // namespace coordinv
