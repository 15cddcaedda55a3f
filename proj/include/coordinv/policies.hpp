#pragma once
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coordinv/artifact_io.hpp"
#include "coordinv/belief.hpp"
#include "coordinv/solver_bounds.hpp"

namespace coordinv {

enum class PolicyKind { OptimalDynamic, AlwaysShare, NeverShare, PeriodicShare, Threshold };

struct PolicySpec {
  PolicyKind kind = PolicyKind::NeverShare;
  int period = 1;     // sharing cadence K for PeriodicShare
  int threshold = 0;  // trigger level d_th for Threshold
};

// Canonical names used on the command line, in result rows, and in file
// names: optimal, always, never, periodic:K, threshold:D.
inline std::string policy_name(const PolicySpec& s) {
  switch (s.kind) {
    case PolicyKind::OptimalDynamic: return "optimal";
    case PolicyKind::AlwaysShare: return "always";
    case PolicyKind::NeverShare: return "never";
    case PolicyKind::PeriodicShare: return "periodic:" + std::to_string(s.period);
    case PolicyKind::Threshold: return "threshold:" + std::to_string(s.threshold);
  }
  throw std::logic_error("policy_name: unreachable");
}

inline PolicySpec parse_policy_spec(const std::string& text) {
  PolicySpec s;
  auto colon = text.find(':');
  std::string head = text.substr(0, colon);
  std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto need_int = [&](const char* what) {
    if (arg.empty()) throw std::invalid_argument("policy " + head + ": missing " + what);
    return std::stoi(arg);
  };
  if (head == "optimal") s.kind = PolicyKind::OptimalDynamic;
  else if (head == "always") s.kind = PolicyKind::AlwaysShare;
  else if (head == "never") s.kind = PolicyKind::NeverShare;
  else if (head == "periodic") {
    s.kind = PolicyKind::PeriodicShare;
    s.period = need_int("cadence");
    if (s.period < 1) throw std::invalid_argument("policy periodic: cadence must be >= 1");
  } else if (head == "threshold") {
    s.kind = PolicyKind::Threshold;
    s.threshold = need_int("trigger level");
    if (s.threshold < 0) throw std::invalid_argument("policy threshold: trigger must be >= 0");
  } else {
    throw std::invalid_argument("unknown policy \"" + text +
                                "\" (expected optimal, always, never, periodic:K, threshold:D)");
  }
  return s;
}

// One-period newsvendor against the predictive demand mixture: smallest s
// with CDF(s) >= p/(p+h). The same target is assigned to every regime slot,
// so the agent's regime pick cannot change the order.
inline Prescription myopic_prescription(const ScenarioConfig& sc,
                                        const std::vector<double>& regime_marginal) {
  double ratio = sc.costs.penalty / (sc.costs.penalty + sc.costs.holding);
  Prescription pre;
  pre.targets.resize(sc.n_retailers);
  std::vector<double> mix(sc.demand.d_max + 1);
  for (int i = 0; i < sc.n_retailers; ++i) {
    std::fill(mix.begin(), mix.end(), 0.0);
    for (int x = 0; x < sc.regimes.n; ++x)
      for (int d = 0; d <= sc.demand.d_max; ++d) mix[d] += regime_marginal[x] * sc.demand.at(x, i, d);
    int s = std::min(newsvendor_level(mix, ratio), sc.s_max);
    pre.targets[i].assign(sc.regimes.n, s);
  }
  return pre;
}

// Decision rule over the common belief. Baselines need only the scenario;
// the solved policies carry a policy artifact and execute by alpha argmin:
// take the stored action of the alpha that attains the envelope at the
// current belief (ties toward the lower alpha index, hence lower action id).
// The scenario must outlive the policy.
class Policy {
 public:
  Policy(PolicySpec spec, const ScenarioConfig& sc) : spec_(spec), sc_(&sc) {
    if (spec_.kind == PolicyKind::OptimalDynamic)
      throw std::invalid_argument("policy optimal: requires a solved policy artifact");
    check_params();
  }

  Policy(PolicySpec spec, const ScenarioConfig& sc, const PolicyArtifact& art)
      : spec_(spec), sc_(&sc) {
    check_params();
    check_artifact(art, sc);
    actions_ = art.actions;
    env_ = art.envelope;
    if (spec_.kind == PolicyKind::AlwaysShare || spec_.kind == PolicyKind::PeriodicShare) {
      // Sharing periods may only pick sharing actions.
      bool any = false;
      for (const auto& al : env_.alphas) any = any || actions_[al.action].comm;
      if (!any)
        throw std::invalid_argument("policy " + policy_name(spec_) +
                                    ": artifact has no sharing alphas (solve with sharing "
                                    "forced on)");
    }
  }

  const PolicySpec& spec() const { return spec_; }
  const ScenarioConfig& scenario() const { return *sc_; }
  bool has_artifact() const { return !env_.alphas.empty(); }

  CoordinatorAction decide(const FlatBelief& b, long period) const {
    return decide_core(b.regime_marginal(), &b, period);
  }
  CoordinatorAction decide(const FactoredBelief& fb, long period) const {
    if (!env_.alphas.empty()) {
      FlatBelief b = flatten(fb);
      return decide_core(fb.regime, &b, period);
    }
    return decide_core(fb.regime, nullptr, period);
  }

 private:
  void check_params() const {
    if (spec_.kind == PolicyKind::Threshold && spec_.threshold > sc_->demand.d_max)
      throw std::invalid_argument("policy threshold: trigger exceeds the demand support");
  }

  CoordinatorAction myopic_action(const std::vector<double>& marginal, bool comm) const {
    CoordinatorAction a;
    a.id = -1;
    a.comm = comm;
    a.prescription = myopic_prescription(*sc_, marginal);
    return a;
  }

  // comm_required: restrict the argmin to sharing alphas (sharing periods of
  // always/periodic); nullopt leaves the choice to the envelope.
  CoordinatorAction envelope_action(const FlatBelief& b, bool comm_required) const {
    int best = -1;
    double best_v = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < env_.alphas.size(); ++k) {
      const AlphaVector& al = env_.alphas[k];
      if (comm_required && !actions_[al.action].comm) continue;
      double v = vec_dot(al.v, b.p);
      if (v < best_v) {
        best_v = v;
        best = static_cast<int>(k);
      }
    }
    if (best < 0) throw std::logic_error("policy: empty alpha envelope");
    return actions_[env_.alphas[best].action];
  }

  CoordinatorAction decide_core(const std::vector<double>& marginal, const FlatBelief* flat,
                                long period) const {
    switch (spec_.kind) {
      case PolicyKind::OptimalDynamic:
        if (!flat) throw std::logic_error("policy optimal: flat belief unavailable");
        return envelope_action(*flat, false);
      case PolicyKind::AlwaysShare:
        if (!env_.alphas.empty() && flat) return envelope_action(*flat, true);
        return myopic_action(marginal, true);
      case PolicyKind::NeverShare:
        return myopic_action(marginal, false);
      case PolicyKind::PeriodicShare: {
        bool comm = period % spec_.period == 0;
        if (comm && !env_.alphas.empty() && flat) return envelope_action(*flat, true);
        return myopic_action(marginal, comm);
      }
      case PolicyKind::Threshold:
        // The sharing bit is delegated to the agents' triggers.
        return myopic_action(marginal, false);
    }
    throw std::logic_error("decide: unreachable");
  }

  PolicySpec spec_;
  const ScenarioConfig* sc_;
  std::vector<CoordinatorAction> actions_;
  UpperEnvelope env_;
};

}  // namespace coordinv
