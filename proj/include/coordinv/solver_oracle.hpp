#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include "coordinv/solver_bounds.hpp"

namespace coordinv {

struct OracleParams {
  int regime_resolution = 10;  // grid steps across the regime marginal simplex
  int inv_resolution = 4;      // grid steps across each per-regime stock distribution
  double tol = 1e-9;           // value-iteration stopping threshold (max absolute change)
  int max_sweeps = 100000;
  bool refine = true;          // rerun one notch coarser and report the value shift
  bool verbose = false;
};

struct OracleResult {
  double value = 0.0;
  double residual = 0.0;  // last sweep's max value change
  int sweeps = 0;
  std::size_t grid_size = 0;
  double max_round_tv = 0.0;  // worst posterior-to-grid rounding distance seen
  double b0_round_tv = 0.0;
  double conservative_error = 0.0;  // loose a-priori bound from rounding + cutoff
  double refine_delta = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void compositions_rec(int remaining, int parts, std::vector<int>& cur,
                             std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(remaining);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    cur.push_back(k);
    compositions_rec(remaining - k, parts - 1, cur, out);
    cur.pop_back();
  }
}

// All integer vectors of the given length summing to `resolution`; the grid
// points of a simplex at that resolution, in lexicographic order.
inline std::vector<std::vector<int>> simplex_compositions(int resolution, int parts) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  compositions_rec(resolution, parts, cur, out);
  return out;
}

// Nearest-grid rounding of a distribution: scale, floor, then hand the
// leftover steps to the largest fractional parts (ties to the lower index).
inline std::vector<int> round_to_resolution(const std::vector<double>& q, int resolution) {
  const std::size_t n = q.size();
  std::vector<int> digits(n, 0);
  std::vector<double> frac(n, 0.0);
  int used = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double scaled = q[j] * resolution;
    digits[j] = static_cast<int>(std::floor(scaled));
    frac[j] = scaled - digits[j];
    used += digits[j];
  }
  int rem = resolution - used;
  std::vector<std::size_t> order(n);
  for (std::size_t j = 0; j < n; ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (int k = 0; k < rem; ++k) digits[order[static_cast<std::size_t>(k) % n]] += 1;
  return digits;
}

// Dense lookup from composition digits (base resolution+1) to its rank in
// the lexicographic composition list.
struct CompositionIndex {
  int resolution = 0;
  int parts = 0;
  std::vector<std::int32_t> table;

  static CompositionIndex build(const std::vector<std::vector<int>>& comps, int resolution,
                                int parts) {
    CompositionIndex ci;
    ci.resolution = resolution;
    ci.parts = parts;
    double span = std::pow(static_cast<double>(resolution + 1), parts);
    if (span > 8e7)
      throw std::invalid_argument(
          "oracle grid: inventory support too large for the composition index");
    ci.table.assign(static_cast<std::size_t>(span), -1);
    for (std::size_t r = 0; r < comps.size(); ++r) ci.table[ci.key(comps[r])] = static_cast<std::int32_t>(r);
    return ci;
  }

  std::size_t key(const std::vector<int>& digits) const {
    std::size_t k = 0;
    for (int d : digits) k = k * (resolution + 1) + static_cast<std::size_t>(d);
    return k;
  }
  std::int32_t rank(const std::vector<int>& digits) const { return table[key(digits)]; }
};

}  // namespace detail

// Exhaustive value iteration over a gridded belief space, for single-retailer
// models. There the joint belief factors exactly as (regime marginal) x
// (stock distribution per regime), so gridding each factor covers the whole
// reachable belief space; posteriors are rounded to the nearest grid point.
// Built independently of the point-based machinery: it never touches alpha
// vectors or sawtooth points, only the shared kernel expansion.
inline OracleResult exact_vi_oracle(const CoordinatorModel& model, const FlatBelief& b0,
                                    const OracleParams& params = {}) {
  const ScenarioConfig& sc = model.scenario();
  const JointIndexer& dims = model.dims();
  if (sc.n_retailers != 1)
    throw std::invalid_argument(
        "oracle: grid value iteration covers single-retailer models only "
        "(joint beliefs factor exactly there)");
  if (params.regime_resolution < 1 || params.inv_resolution < 1)
    throw std::invalid_argument("oracle: grid resolutions must be >= 1");

  const int X = dims.n_regimes;
  const int scap = dims.s_cap;
  const double gamma = model.discount();
  const double floor_v = value_floor(model);
  const auto& actions = model.actions();
  const std::size_t A = actions.size();

  const auto rcomps = detail::simplex_compositions(params.regime_resolution, X);
  const auto icomps = detail::simplex_compositions(params.inv_resolution, scap);
  const auto rindex = detail::CompositionIndex::build(rcomps, params.regime_resolution, X);
  const auto iindex = detail::CompositionIndex::build(icomps, params.inv_resolution, scap);

  const std::size_t nR = rcomps.size();
  const std::size_t nC = icomps.size();
  std::size_t G = nR;
  for (int x = 0; x < X; ++x) {
    if (G > 2e8 / nC)
      throw std::invalid_argument("oracle grid: too many grid points; lower the resolutions");
    G *= nC;
  }

  OracleResult res;
  res.grid_size = G;

  auto grid_belief = [&](std::size_t g) {
    FlatBelief b;
    b.dims = dims;
    b.p.assign(dims.size(), 0.0);
    std::size_t rest = g;
    std::vector<std::size_t> cidx(X);
    for (int x = X - 1; x >= 0; --x) {
      cidx[x] = rest % nC;
      rest /= nC;
    }
    const auto& rdig = rcomps[rest];
    for (int x = 0; x < X; ++x) {
      double rx = static_cast<double>(rdig[x]) / params.regime_resolution;
      if (rx == 0.0) continue;
      const auto& cdig = icomps[cidx[x]];
      for (int I = 0; I < scap; ++I)
        b.p[static_cast<std::size_t>(x) * scap + I] =
            rx * cdig[I] / params.inv_resolution;
    }
    return b;
  };

  // Round an arbitrary belief onto the grid; returns the grid index and
  // accumulates the rounding distance.
  auto round_belief = [&](const FlatBelief& b, double* tv_out) {
    std::vector<double> marg(X, 0.0);
    for (int x = 0; x < X; ++x)
      for (int I = 0; I < scap; ++I) marg[x] += b.p[static_cast<std::size_t>(x) * scap + I];
    auto rdig = detail::round_to_resolution(marg, params.regime_resolution);
    std::size_t g = static_cast<std::size_t>(rindex.rank(rdig));
    std::vector<double> cond(scap);
    for (int x = 0; x < X; ++x) {
      if (marg[x] > 0.0) {
        for (int I = 0; I < scap; ++I)
          cond[I] = b.p[static_cast<std::size_t>(x) * scap + I] / marg[x];
      } else {
        std::fill(cond.begin(), cond.end(), 1.0 / scap);
      }
      auto cdig = detail::round_to_resolution(cond, params.inv_resolution);
      g = g * nC + static_cast<std::size_t>(iindex.rank(cdig));
    }
    if (tv_out) {
      FlatBelief rb = grid_belief(g);
      *tv_out = tv_distance(b.p, rb.p);
    }
    return g;
  };

  // The regime pick map depends on the belief only through its regime
  // marginal, so one kernel per (marginal grid point, action) serves every
  // grid belief sharing that marginal.
  std::vector<std::vector<ActionKernel>> kernels(nR);
  for (std::size_t r = 0; r < nR; ++r) {
    std::vector<double> marg(X);
    for (int x = 0; x < X; ++x)
      marg[x] = static_cast<double>(rcomps[r][x]) / params.regime_resolution;
    kernels[r].reserve(A);
    for (std::size_t ai = 0; ai < A; ++ai) kernels[r].emplace_back(model.kernel(marg, actions[ai]));
  }

  // Successor table: for every (grid point, action), the rounded posterior
  // grid index and probability of each observation branch.
  std::vector<std::uint64_t> offsets(G * A + 1, 0);
  std::vector<std::uint32_t> succ;
  std::vector<double> prob;
  std::vector<double> base_cost(G * A, 0.0);

  std::size_t condN = 1;
  for (int x = 0; x < X; ++x) condN *= nC;
  for (std::size_t g = 0; g < G; ++g) {
    FlatBelief b = grid_belief(g);
    std::size_t r = g / condN;
    for (std::size_t ai = 0; ai < A; ++ai) {
      auto branches = kernels[r][ai].expand(b, 0.0);
      double kept = 0.0;
      for (const auto& br : branches) {
        double tv = 0.0;
        std::size_t sg = round_belief(br.posterior, &tv);
        res.max_round_tv = std::max(res.max_round_tv, tv);
        succ.push_back(static_cast<std::uint32_t>(sg));
        prob.push_back(br.prob);
        kept += br.prob;
      }
      base_cost[g * A + ai] = model.stage_cost(b, actions[ai]) +
                              gamma * std::max(0.0, 1.0 - kept) * floor_v;
      offsets[g * A + ai + 1] = succ.size();
    }
    if (params.verbose && (g + 1) % 20000 == 0)
      std::fprintf(stderr, "[oracle] expanded %zu / %zu grid points\n", g + 1, G);
  }

  std::vector<double> V(G, 0.0), Vn(G, 0.0);
  for (int sweep = 0; sweep < params.max_sweeps; ++sweep) {
    double delta = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t ai = 0; ai < A; ++ai) {
        double acc = base_cost[g * A + ai];
        for (std::uint64_t e = offsets[g * A + ai]; e < offsets[g * A + ai + 1]; ++e)
          acc += gamma * prob[e] * V[succ[e]];
        best = std::min(best, acc);
      }
      Vn[g] = best;
      delta = std::max(delta, std::fabs(best - V[g]));
    }
    V.swap(Vn);
    ++res.sweeps;
    res.residual = delta;
    if (params.verbose && res.sweeps % 100 == 0)
      std::fprintf(stderr, "[oracle] sweep %d: residual=%.3e\n", res.sweeps, delta);
    if (delta < params.tol) break;
  }

  std::size_t g0 = round_belief(b0, &res.b0_round_tv);
  res.value = V[g0];

  double range = (model.max_stage_cost() - model.min_stage_cost()) / (1.0 - gamma);
  res.conservative_error = gamma * range * res.max_round_tv / (1.0 - gamma) +
                           res.residual * gamma / (1.0 - gamma) +
                           range * res.b0_round_tv;

  if (params.refine && params.inv_resolution > 1) {
    OracleParams coarse = params;
    coarse.inv_resolution = params.inv_resolution - 1;
    coarse.refine = false;
    coarse.verbose = false;
    OracleResult cr = exact_vi_oracle(model, b0, coarse);
    res.refine_delta = std::fabs(res.value - cr.value);
  }
  return res;
}

}  // namespace coordinv
