#pragma once
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "coordinv/coordinator_model.hpp"
#include "coordinv/scenario_io.hpp"
#include "coordinv/solver_bounds.hpp"

namespace coordinv {

namespace detail {

// Canonical text of every value the planning model depends on (the cosmetic
// name is excluded); doubles at full round-trip precision.
inline std::string fingerprint_text(const ScenarioConfig& sc) {
  std::string s;
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g,", v);
    s += buf;
  };
  auto integer = [&](long v) { s += std::to_string(v) + ","; };
  integer(sc.schema_version);
  integer(sc.n_retailers);
  integer(sc.regimes.n);
  for (const auto& l : sc.regimes.labels) s += l + ",";
  for (double v : sc.regimes.transition) num(v);
  for (double v : sc.regimes.initial) num(v);
  integer(sc.demand.d_max);
  for (double v : sc.demand.pmf) num(v);
  num(sc.costs.holding);
  num(sc.costs.penalty);
  num(sc.costs.comm_lambda);
  num(sc.costs.discount);
  integer(sc.s_max);
  integer(sc.u_max);
  for (int v : sc.initial_inventories) integer(v);
  return s;
}

inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

inline std::string scenario_fingerprint(const ScenarioConfig& sc) {
  return detail::fnv1a_hex(detail::fingerprint_text(sc));
}

struct SolveInfo {
  std::string method;  // "pbvi" or "sarsop"
  double upper_b0 = std::numeric_limits<double>::quiet_NaN();
  double lower_b0 = std::numeric_limits<double>::quiet_NaN();
  double rel_gap = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  long iterations = 0;  // sweeps or trials
  std::uint64_t seed = 0;
};

// Everything the simulator needs to run a solved policy without re-solving:
// the enumerated actions, the alpha surface, and enough metadata to refuse a
// mismatched scenario.
struct PolicyArtifact {
  int schema_version = 1;
  std::string scenario_name;
  std::string fingerprint;
  int n_bins = 8;
  bool comm_only = false;
  std::vector<CoordinatorAction> actions;
  UpperEnvelope envelope;
  SolveInfo info;
};

inline ordered_json artifact_to_json(const PolicyArtifact& art) {
  ordered_json j;
  j["schema_version"] = art.schema_version;
  j["kind"] = "coordinv-policy";
  j["scenario_name"] = art.scenario_name;
  j["fingerprint"] = art.fingerprint;
  j["n_bins"] = art.n_bins;
  j["comm_only"] = art.comm_only;

  ordered_json acts = ordered_json::array();
  for (const auto& a : art.actions) {
    ordered_json ja;
    ja["id"] = a.id;
    ja["comm"] = a.comm;
    ja["targets"] = a.prescription.targets;
    acts.push_back(std::move(ja));
  }
  j["actions"] = std::move(acts);

  ordered_json alphas = ordered_json::array();
  for (const auto& al : art.envelope.alphas) {
    ordered_json ja;
    ja["action"] = al.action;
    ja["v"] = al.v;
    alphas.push_back(std::move(ja));
  }
  j["alphas"] = std::move(alphas);

  ordered_json info;
  info["method"] = art.info.method;
  info["upper_b0"] = art.info.upper_b0;
  info["lower_b0"] = art.info.lower_b0;
  info["rel_gap"] = art.info.rel_gap;
  info["seconds"] = art.info.seconds;
  info["iterations"] = art.info.iterations;
  info["seed"] = art.info.seed;
  j["solve"] = std::move(info);
  return j;
}

inline PolicyArtifact artifact_from_json(const ordered_json& j) {
  int version = j.at("schema_version").get<int>();
  if (version != 1)
    throw std::invalid_argument("policy artifact: unsupported schema_version " +
                                std::to_string(version));
  if (j.value("kind", std::string()) != "coordinv-policy")
    throw std::invalid_argument("policy artifact: wrong file kind");
  PolicyArtifact art;
  art.schema_version = version;
  art.scenario_name = j.value("scenario_name", std::string());
  art.fingerprint = j.at("fingerprint").get<std::string>();
  art.n_bins = j.at("n_bins").get<int>();
  art.comm_only = j.value("comm_only", false);

  for (const auto& ja : j.at("actions")) {
    CoordinatorAction a;
    a.id = ja.at("id").get<int>();
    a.comm = ja.at("comm").get<bool>();
    a.prescription.targets = ja.at("targets").get<std::vector<std::vector<int>>>();
    if (a.id != static_cast<int>(art.actions.size()))
      throw std::invalid_argument("policy artifact: action ids must be dense and ordered");
    art.actions.push_back(std::move(a));
  }
  if (art.actions.empty()) throw std::invalid_argument("policy artifact: no actions");

  for (const auto& ja : j.at("alphas")) {
    AlphaVector al;
    al.action = ja.at("action").get<int>();
    al.v = ja.at("v").get<std::vector<double>>();
    if (al.action < 0 || al.action >= static_cast<int>(art.actions.size()))
      throw std::invalid_argument("policy artifact: alpha references unknown action");
    art.envelope.alphas.push_back(std::move(al));
  }
  if (art.envelope.alphas.empty()) throw std::invalid_argument("policy artifact: no alphas");

  const auto& info = j.at("solve");
  art.info.method = info.at("method").get<std::string>();
  art.info.upper_b0 = info.at("upper_b0").get<double>();
  art.info.lower_b0 = info.at("lower_b0").get<double>();
  art.info.rel_gap = info.at("rel_gap").get<double>();
  art.info.seconds = info.at("seconds").get<double>();
  art.info.iterations = info.at("iterations").get<long>();
  art.info.seed = info.at("seed").get<std::uint64_t>();
  return art;
}

inline void save_artifact(const std::string& path, const PolicyArtifact& art) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write policy artifact: " + path);
  os << artifact_to_json(art).dump(2) << "\n";
}

inline PolicyArtifact load_artifact(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open policy artifact: " + path);
  ordered_json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("policy artifact " + path + ": " + e.what());
  }
  return artifact_from_json(j);
}

// Refuses any scenario the artifact was not solved for; a policy's alphas are
// meaningless under different dynamics or prices.
inline void check_artifact(const PolicyArtifact& art, const ScenarioConfig& sc) {
  std::string fp = scenario_fingerprint(sc);
  if (fp != art.fingerprint)
    throw std::runtime_error("policy artifact mismatch: artifact fingerprint " + art.fingerprint +
                             " vs scenario " + fp +
                             " (retailers, bounds, regimes, demand, or costs differ)");
  for (const auto& al : art.envelope.alphas) {
    std::size_t expect = JointIndexer::make(sc.regimes.n, sc.n_retailers, sc.s_max).size();
    if (al.v.size() != expect)
      throw std::runtime_error("policy artifact mismatch: alpha length does not fit the scenario");
  }
}

inline CoordinatorModel artifact_model(const PolicyArtifact& art, const ScenarioConfig& sc) {
  check_artifact(art, sc);
  return CoordinatorModel(sc, art.actions, art.n_bins);
}

}  // namespace coordinv
