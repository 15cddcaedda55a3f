#pragma once
#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coordinv/actions.hpp"
#include "coordinv/prob.hpp"
#include "coordinv/scenario.hpp"

namespace coordinv {

// Flat joint index over (regime, inventory vector). Retailer 0 is the most
// significant inventory digit; regime is the outermost block.
struct JointIndexer {
  int n_regimes = 0;
  int n_retailers = 0;
  int s_cap = 0;  // s_max + 1
  std::size_t inv_block = 0;
  std::vector<std::size_t> strides;

  static JointIndexer make(int n_regimes, int n_retailers, int s_max) {
    JointIndexer d;
    d.n_regimes = n_regimes;
    d.n_retailers = n_retailers;
    d.s_cap = s_max + 1;
    d.strides.assign(n_retailers, 1);
    for (int i = n_retailers - 2; i >= 0; --i)
      d.strides[i] = d.strides[i + 1] * static_cast<std::size_t>(d.s_cap);
    d.inv_block = d.strides[0] * static_cast<std::size_t>(d.s_cap);
    return d;
  }
  std::size_t size() const { return static_cast<std::size_t>(n_regimes) * inv_block; }
  std::size_t index(int regime, const std::vector<int>& invs) const {
    std::size_t j = static_cast<std::size_t>(regime) * inv_block;
    for (int i = 0; i < n_retailers; ++i) j += static_cast<std::size_t>(invs[i]) * strides[i];
    return j;
  }
  int inv_digit(std::size_t inv_cell, int retailer) const {
    return static_cast<int>((inv_cell / strides[retailer]) % static_cast<std::size_t>(s_cap));
  }
  bool operator==(const JointIndexer& o) const {
    return n_regimes == o.n_regimes && n_retailers == o.n_retailers && s_cap == o.s_cap;
  }
};

struct FlatBelief {
  JointIndexer dims;
  std::vector<double> p;

  std::vector<double> regime_marginal() const {
    std::vector<double> m(dims.n_regimes, 0.0);
    for (int x = 0; x < dims.n_regimes; ++x) {
      const double* s = &p[static_cast<std::size_t>(x) * dims.inv_block];
      double acc = 0.0;
      for (std::size_t j = 0; j < dims.inv_block; ++j) acc += s[j];
      m[x] = acc;
    }
    return m;
  }
  // Inventory pmf of one retailer, regimes marginalized out.
  std::vector<double> inventory_marginal(int retailer) const {
    std::vector<double> m(dims.s_cap, 0.0);
    for (int x = 0; x < dims.n_regimes; ++x) {
      const double* s = &p[static_cast<std::size_t>(x) * dims.inv_block];
      for (std::size_t j = 0; j < dims.inv_block; ++j) m[dims.inv_digit(j, retailer)] += s[j];
    }
    return m;
  }
};

inline FlatBelief point_belief(const ScenarioConfig& sc, const std::vector<double>& regime_dist,
                               const std::vector<int>& inventories) {
  FlatBelief b;
  b.dims = JointIndexer::make(sc.regimes.n, sc.n_retailers, sc.s_max);
  b.p.assign(b.dims.size(), 0.0);
  for (int x = 0; x < sc.regimes.n; ++x)
    if (regime_dist[x] > 0.0) b.p[b.dims.index(x, inventories)] = regime_dist[x];
  return b;
}

inline FlatBelief initial_belief(const ScenarioConfig& sc) {
  return point_belief(sc, sc.regimes.initial, sc.initial_inventories);
}

struct RetailerReport {
  int retailer = -1;
  int demand = 0;
  int post_inventory = 0;
};

// One coordinator observation. Empty `reports` with censor_cap = -1 is the
// uninformative null observation of a silent round; threshold protocols use
// censor_cap >= 0 for the silent retailers (their demand is known to be at
// most the cap).
struct Observation {
  std::vector<RetailerReport> reports;
  int censor_cap = -1;
};

namespace detail {

struct Channel {
  bool report = false;
  int demand = 0;
  int post_inventory = 0;
  int d_cap = 0;
};

inline std::vector<Channel> make_channels(const ScenarioConfig& sc,
                                          const std::vector<RetailerReport>& reports,
                                          int censor_cap) {
  std::vector<Channel> ch(sc.n_retailers);
  for (auto& c : ch)
    c.d_cap = censor_cap < 0 ? sc.demand.d_max : std::min(censor_cap, sc.demand.d_max);
  std::vector<bool> seen(sc.n_retailers, false);
  for (const auto& r : reports) {
    if (r.retailer < 0 || r.retailer >= sc.n_retailers)
      throw std::invalid_argument("belief update: report for unknown retailer");
    if (seen[r.retailer]) throw std::invalid_argument("belief update: duplicate report");
    seen[r.retailer] = true;
    if (r.demand < 0 || r.demand > sc.demand.d_max)
      throw std::invalid_argument("belief update: reported demand outside support");
    if (r.post_inventory < 0 || r.post_inventory > sc.s_max)
      throw std::invalid_argument("belief update: reported inventory outside [0, s_max]");
    ch[r.retailer].report = true;
    ch[r.retailer].demand = r.demand;
    ch[r.retailer].post_inventory = r.post_inventory;
  }
  return ch;
}

// Shared kernel behind every flat-belief operator: per-retailer conditioning
// and inventory propagation, then (optionally) one regime transition. Writes
// unnormalized mass over next-period states into `out`; returns the evidence.
inline double belief_kernel(const ScenarioConfig& sc, const FlatBelief& b,
                            const CoordinatorAction& action, const std::vector<Channel>& ch,
                            std::vector<double>& out, bool advance_regime) {
  const JointIndexer& dims = b.dims;
  const DemandModel& dm = sc.demand;
  auto bx = b.regime_marginal();

  // Selection maps are fixed by the belief the agents shared when ordering.
  std::vector<std::vector<int>> sel(sc.n_retailers);
  for (int i = 0; i < sc.n_retailers; ++i) sel[i] = regime_selection_map(bx, i, dm);

  std::vector<std::vector<std::vector<int>>> dest_silent(sc.n_retailers);
  std::vector<int> dest_report(sc.n_retailers, 0);
  for (int i = 0; i < sc.n_retailers; ++i) {
    if (ch[i].report) {
      int d = ch[i].demand, post = ch[i].post_inventory;
      int s = action.prescription.targets[i][sel[i][d]];
      int order = std::min(std::max(s - post, 0), sc.u_max);
      dest_report[i] = std::min(post + order, sc.s_max);
    } else {
      dest_silent[i].resize(ch[i].d_cap + 1);
      for (int d = 0; d <= ch[i].d_cap; ++d) {
        int s = action.prescription.targets[i][sel[i][d]];
        auto& tbl = dest_silent[i][d];
        tbl.resize(dims.s_cap);
        for (int I = 0; I < dims.s_cap; ++I) {
          int post = std::max(I - d, 0);
          int order = std::min(std::max(s - post, 0), sc.u_max);
          tbl[I] = std::min(post + order, sc.s_max);
        }
      }
    }
  }

  out.assign(dims.size(), 0.0);
  std::vector<double> slice(dims.inv_block), next(dims.inv_block);
  double evidence = 0.0;

  for (int x = 0; x < dims.n_regimes; ++x) {
    const double* src = &b.p[static_cast<std::size_t>(x) * dims.inv_block];
    std::copy(src, src + dims.inv_block, slice.begin());

    for (int i = 0; i < sc.n_retailers; ++i) {
      std::fill(next.begin(), next.end(), 0.0);
      const std::size_t st = dims.strides[i];
      if (ch[i].report) {
        int d = ch[i].demand, post = ch[i].post_inventory;
        double f = dm.at(x, i, d);
        if (f > 0.0) {
          const int dst = dest_report[i];
          if (post > 0) {
            // Stock remained: the prior inventory is pinned to post + d.
            int from = post + d;
            if (from <= sc.s_max) {
              std::ptrdiff_t shift =
                  (static_cast<std::ptrdiff_t>(dst) - from) * static_cast<std::ptrdiff_t>(st);
              for (std::size_t j = 0; j < dims.inv_block; ++j)
                if (dims.inv_digit(j, i) == from) next[j + shift] += f * slice[j];
            }
          } else {
            // Stockout: any prior inventory at most the demand is consistent.
            int cap = std::min(d, sc.s_max);
            for (std::size_t j = 0; j < dims.inv_block; ++j) {
              int I = dims.inv_digit(j, i);
              if (I <= cap)
                next[j + (static_cast<std::ptrdiff_t>(dst) - I) * static_cast<std::ptrdiff_t>(st)] +=
                    f * slice[j];
            }
          }
        }
      } else {
        for (int d = 0; d <= ch[i].d_cap; ++d) {
          double f = dm.at(x, i, d);
          if (f <= 0.0) continue;
          const auto& tbl = dest_silent[i][d];
          for (std::size_t j = 0; j < dims.inv_block; ++j) {
            int I = dims.inv_digit(j, i);
            next[j + (static_cast<std::ptrdiff_t>(tbl[I]) - I) * static_cast<std::ptrdiff_t>(st)] +=
                f * slice[j];
          }
        }
      }
      slice.swap(next);
    }

    double w = 0.0;
    for (double v : slice) w += v;
    evidence += w;

    if (advance_regime) {
      for (int y = 0; y < dims.n_regimes; ++y) {
        double pxy = sc.regimes.p(x, y);
        if (pxy <= 0.0) continue;
        double* dst = &out[static_cast<std::size_t>(y) * dims.inv_block];
        for (std::size_t j = 0; j < dims.inv_block; ++j) dst[j] += pxy * slice[j];
      }
    } else {
      double* dst = &out[static_cast<std::size_t>(x) * dims.inv_block];
      for (std::size_t j = 0; j < dims.inv_block; ++j) dst[j] += slice[j];
    }
  }
  return evidence;
}

inline FlatBelief finish_update(const ScenarioConfig& sc, const FlatBelief& b,
                                const CoordinatorAction& action, const std::vector<Channel>& ch,
                                const char* what) {
  FlatBelief nb;
  nb.dims = b.dims;
  double z = belief_kernel(sc, b, action, ch, nb.p, /*advance_regime=*/true);
  if (!(z > 0.0))
    throw std::runtime_error(std::string(what) +
                             ": observation has zero likelihood under the belief");
  for (double& v : nb.p) v /= z;
  return nb;
}

}  // namespace detail

// Silent round: demands marginalized, inventories stepped through the
// prescription, one regime transition. Total mass is preserved.
inline FlatBelief predict_no_comm(const ScenarioConfig& sc, const FlatBelief& b,
                                  const CoordinatorAction& action) {
  auto ch = detail::make_channels(sc, {}, -1);
  return detail::finish_update(sc, b, action, ch, "predict_no_comm");
}

// Full communication round: every retailer reports (demand, post-demand
// inventory). Regimes are conditioned on the joint report (including the
// stockout information carried by the inventory report); next inventories
// collapse to point masses at the reproduced order-up-to result.
inline FlatBelief update_full_comm(const ScenarioConfig& sc, const FlatBelief& b,
                                   const CoordinatorAction& action,
                                   const std::vector<RetailerReport>& reports) {
  if (static_cast<int>(reports.size()) != sc.n_retailers)
    throw std::invalid_argument("update_full_comm: need a report from every retailer");
  auto ch = detail::make_channels(sc, reports, -1);
  return detail::finish_update(sc, b, action, ch, "update_full_comm");
}

// Mixed round: `reports` communicate exactly; every other retailer is silent,
// which under a trigger threshold means its demand was at most `censor_cap`.
// censor_cap >= d_max (or -1) makes silence uninformative, and with no
// reports the operator coincides with predict_no_comm, code path and all.
inline FlatBelief update_censored(const ScenarioConfig& sc, const FlatBelief& b,
                                  const CoordinatorAction& action,
                                  const std::vector<RetailerReport>& reports, int censor_cap) {
  auto ch = detail::make_channels(sc, reports, censor_cap);
  return detail::finish_update(sc, b, action, ch, "update_censored");
}

// Predictive probability of an observation under (belief, action); sums to 1
// over the observation alphabet of the protocol in force.
inline double obs_likelihood(const ScenarioConfig& sc, const FlatBelief& b,
                             const CoordinatorAction& action, const Observation& obs) {
  if (obs.reports.empty() && obs.censor_cap < 0) return 1.0;  // null observation
  auto ch = detail::make_channels(sc, obs.reports, obs.censor_cap);
  std::vector<double> scratch;
  return detail::belief_kernel(sc, b, action, ch, scratch, /*advance_regime=*/false);
}

// ---- factored representation ----

// Regime marginal plus per-regime per-retailer inventory conditionals.
// Exact for N = 1; an assumed-density (conditional independence) projection
// otherwise. Used for instances whose flat joint would be too large.
struct FactoredBelief {
  int n_regimes = 0;
  int n_retailers = 0;
  int s_cap = 0;
  std::vector<double> regime;
  std::vector<double> inv;  // [x][i][I]

  double q(int x, int i, int I) const {
    return inv[(static_cast<std::size_t>(x) * n_retailers + i) * s_cap + I];
  }
  double* qrow(int x, int i) { return &inv[(static_cast<std::size_t>(x) * n_retailers + i) * s_cap]; }
  const double* qrow(int x, int i) const {
    return &inv[(static_cast<std::size_t>(x) * n_retailers + i) * s_cap];
  }
  std::vector<double> inventory_marginal(int retailer) const {
    std::vector<double> m(s_cap, 0.0);
    for (int x = 0; x < n_regimes; ++x)
      for (int I = 0; I < s_cap; ++I) m[I] += regime[x] * q(x, retailer, I);
    return m;
  }
};

inline FactoredBelief project(const FlatBelief& b) {
  FactoredBelief f;
  f.n_regimes = b.dims.n_regimes;
  f.n_retailers = b.dims.n_retailers;
  f.s_cap = b.dims.s_cap;
  f.regime = b.regime_marginal();
  f.inv.assign(static_cast<std::size_t>(f.n_regimes) * f.n_retailers * f.s_cap, 0.0);
  for (int x = 0; x < f.n_regimes; ++x) {
    const double* s = &b.p[static_cast<std::size_t>(x) * b.dims.inv_block];
    for (int i = 0; i < f.n_retailers; ++i) {
      double* row = f.qrow(x, i);
      for (std::size_t j = 0; j < b.dims.inv_block; ++j) row[b.dims.inv_digit(j, i)] += s[j];
      double tot = 0.0;
      for (int I = 0; I < f.s_cap; ++I) tot += row[I];
      if (tot > 0.0)
        for (int I = 0; I < f.s_cap; ++I) row[I] /= tot;
      else
        for (int I = 0; I < f.s_cap; ++I) row[I] = 1.0 / f.s_cap;  // zero-mass regime, keep valid
    }
  }
  return f;
}

inline FlatBelief flatten(const FactoredBelief& f) {
  FlatBelief b;
  b.dims = JointIndexer::make(f.n_regimes, f.n_retailers, f.s_cap - 1);
  b.p.assign(b.dims.size(), 0.0);
  for (int x = 0; x < f.n_regimes; ++x) {
    double* dst = &b.p[static_cast<std::size_t>(x) * b.dims.inv_block];
    for (std::size_t j = 0; j < b.dims.inv_block; ++j) {
      double v = f.regime[x];
      for (int i = 0; i < f.n_retailers; ++i) v *= f.q(x, i, b.dims.inv_digit(j, i));
      dst[j] = v;
    }
  }
  return b;
}

inline FactoredBelief factored_initial_belief(const ScenarioConfig& sc) {
  FactoredBelief f;
  f.n_regimes = sc.regimes.n;
  f.n_retailers = sc.n_retailers;
  f.s_cap = sc.s_max + 1;
  f.regime = sc.regimes.initial;
  f.inv.assign(static_cast<std::size_t>(f.n_regimes) * f.n_retailers * f.s_cap, 0.0);
  for (int x = 0; x < f.n_regimes; ++x)
    for (int i = 0; i < f.n_retailers; ++i) f.qrow(x, i)[sc.initial_inventories[i]] = 1.0;
  return f;
}

namespace detail {

// Factored analogue of belief_kernel: transforms each (regime, retailer)
// conditional independently, then mixes regimes. The conditional-independence
// projection is implicit in keeping only per-retailer rows.
inline double factored_kernel(const ScenarioConfig& sc, const FactoredBelief& fb,
                              const CoordinatorAction& action, const std::vector<Channel>& ch,
                              FactoredBelief& out, bool advance_regime) {
  const DemandModel& dm = sc.demand;
  const int s_cap = fb.s_cap;
  std::vector<std::vector<int>> sel(sc.n_retailers);
  for (int i = 0; i < sc.n_retailers; ++i) sel[i] = regime_selection_map(fb.regime, i, dm);

  // Transformed (unnormalized) rows and their totals.
  std::vector<double> rows(static_cast<std::size_t>(fb.n_regimes) * sc.n_retailers * s_cap, 0.0);
  auto row_at = [&](int x, int i) {
    return &rows[(static_cast<std::size_t>(x) * sc.n_retailers + i) * s_cap];
  };
  std::vector<double> w(fb.n_regimes, 0.0);

  for (int x = 0; x < fb.n_regimes; ++x) {
    double wx = fb.regime[x];
    for (int i = 0; i < sc.n_retailers; ++i) {
      const double* q = fb.qrow(x, i);
      double* nq = row_at(x, i);
      if (ch[i].report) {
        int d = ch[i].demand, post = ch[i].post_inventory;
        double f = dm.at(x, i, d);
        double mass = 0.0;
        if (f > 0.0) {
          if (post > 0) {
            int from = post + d;
            if (from <= sc.s_max) mass = q[from];
          } else {
            int cap = std::min(d, sc.s_max);
            for (int I = 0; I <= cap; ++I) mass += q[I];
          }
        }
        int s = action.prescription.targets[i][sel[i][d]];
        int order = std::min(std::max(s - post, 0), sc.u_max);
        int dst = std::min(post + order, sc.s_max);
        nq[dst] = f * mass;
        wx *= f * mass;
      } else {
        for (int d = 0; d <= ch[i].d_cap; ++d) {
          double f = dm.at(x, i, d);
          if (f <= 0.0) continue;
          int s = action.prescription.targets[i][sel[i][d]];
          for (int I = 0; I < s_cap; ++I) {
            int post = std::max(I - d, 0);
            int order = std::min(std::max(s - post, 0), sc.u_max);
            nq[std::min(post + order, sc.s_max)] += f * q[I];
          }
        }
        double t = 0.0;
        for (int I = 0; I < s_cap; ++I) t += nq[I];
        wx *= t;
      }
    }
    w[x] = wx;
    // Normalize rows into conditionals where possible.
    for (int i = 0; i < sc.n_retailers; ++i) {
      double* nq = row_at(x, i);
      double t = 0.0;
      for (int I = 0; I < s_cap; ++I) t += nq[I];
      if (t > 0.0)
        for (int I = 0; I < s_cap; ++I) nq[I] /= t;
    }
  }

  double z = 0.0;
  for (double v : w) z += v;
  if (!advance_regime) return z;
  if (!(z > 0.0)) return 0.0;

  out.n_regimes = fb.n_regimes;
  out.n_retailers = sc.n_retailers;
  out.s_cap = s_cap;
  out.regime.assign(fb.n_regimes, 0.0);
  out.inv.assign(rows.size(), 0.0);
  for (int y = 0; y < fb.n_regimes; ++y) {
    double wy = 0.0;
    for (int x = 0; x < fb.n_regimes; ++x) wy += sc.regimes.p(x, y) * w[x];
    out.regime[y] = wy / z;
    double* oq_base = &out.inv[(static_cast<std::size_t>(y) * sc.n_retailers) * s_cap];
    (void)oq_base;
    for (int i = 0; i < sc.n_retailers; ++i) {
      double* oq = out.qrow(y, i);
      if (wy > 0.0) {
        for (int x = 0; x < fb.n_regimes; ++x) {
          double c = sc.regimes.p(x, y) * w[x] / wy;
          if (c <= 0.0) continue;
          const double* nq = row_at(x, i);
          for (int I = 0; I < s_cap; ++I) oq[I] += c * nq[I];
        }
      } else {
        for (int I = 0; I < s_cap; ++I) oq[I] = 1.0 / s_cap;
      }
    }
  }
  return z;
}

}  // namespace detail

inline FactoredBelief predict_no_comm(const ScenarioConfig& sc, const FactoredBelief& fb,
                                      const CoordinatorAction& action) {
  auto ch = detail::make_channels(sc, {}, -1);
  FactoredBelief out;
  double z = detail::factored_kernel(sc, fb, action, ch, out, true);
  if (!(z > 0.0)) throw std::runtime_error("predict_no_comm(factored): zero mass");
  return out;
}

inline FactoredBelief update_full_comm(const ScenarioConfig& sc, const FactoredBelief& fb,
                                       const CoordinatorAction& action,
                                       const std::vector<RetailerReport>& reports) {
  if (static_cast<int>(reports.size()) != sc.n_retailers)
    throw std::invalid_argument("update_full_comm: need a report from every retailer");
  auto ch = detail::make_channels(sc, reports, -1);
  FactoredBelief out;
  double z = detail::factored_kernel(sc, fb, action, ch, out, true);
  if (!(z > 0.0))
    throw std::runtime_error("update_full_comm(factored): observation has zero likelihood");
  return out;
}

inline FactoredBelief update_censored(const ScenarioConfig& sc, const FactoredBelief& fb,
                                      const CoordinatorAction& action,
                                      const std::vector<RetailerReport>& reports, int censor_cap) {
  auto ch = detail::make_channels(sc, reports, censor_cap);
  FactoredBelief out;
  double z = detail::factored_kernel(sc, fb, action, ch, out, true);
  if (!(z > 0.0))
    throw std::runtime_error("update_censored(factored): observation has zero likelihood");
  return out;
}

inline double obs_likelihood(const ScenarioConfig& sc, const FactoredBelief& fb,
                             const CoordinatorAction& action, const Observation& obs) {
  if (obs.reports.empty() && obs.censor_cap < 0) return 1.0;
  auto ch = detail::make_channels(sc, obs.reports, obs.censor_cap);
  FactoredBelief scratch;
  return detail::factored_kernel(sc, fb, action, ch, scratch, false);
}

// ---- serialization ----

// Binary layout, little-endian throughout: "CBLF", u32 version, u32 regimes,
// u32 retailers, u32 s_max, then the flat probability array as f64.
inline void write_belief(const FlatBelief& b, std::ostream& os) {
  static_assert(std::endian::native == std::endian::little,
                "belief serialization assumes a little-endian host");
  os.write("CBLF", 4);
  std::uint32_t hdr[4] = {1u, static_cast<std::uint32_t>(b.dims.n_regimes),
                          static_cast<std::uint32_t>(b.dims.n_retailers),
                          static_cast<std::uint32_t>(b.dims.s_cap - 1)};
  os.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
  os.write(reinterpret_cast<const char*>(b.p.data()),
           static_cast<std::streamsize>(b.p.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_belief: stream failure");
}

inline FlatBelief read_belief(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CBLF", 4) != 0)
    throw std::runtime_error("read_belief: bad magic");
  std::uint32_t hdr[4];
  is.read(reinterpret_cast<char*>(hdr), sizeof hdr);
  if (!is) throw std::runtime_error("read_belief: truncated header");
  if (hdr[0] != 1u) throw std::runtime_error("read_belief: unsupported version " + std::to_string(hdr[0]));
  if (hdr[1] == 0 || hdr[1] > 64 || hdr[2] == 0 || hdr[2] > 8 || hdr[3] > 4096)
    throw std::runtime_error("read_belief: implausible header shape");
  FlatBelief b;
  b.dims = JointIndexer::make(static_cast<int>(hdr[1]), static_cast<int>(hdr[2]),
                              static_cast<int>(hdr[3]));
  b.p.resize(b.dims.size());
  is.read(reinterpret_cast<char*>(b.p.data()),
          static_cast<std::streamsize>(b.p.size() * sizeof(double)));
  if (!is) throw std::runtime_error("read_belief: truncated payload");
  return b;
}

}  // namespace coordinv
