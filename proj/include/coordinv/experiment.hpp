#pragma once
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "coordinv/artifact_io.hpp"
#include "coordinv/policies.hpp"
#include "coordinv/scenario_io.hpp"
#include "coordinv/simulator.hpp"
#include "coordinv/solver.hpp"
#include "coordinv/solver_bounds.hpp"
#include "coordinv/solver_sarsop.hpp"

namespace coordinv {

// Everything a batch run needs; config-file keys and command-line flags both
// map onto these fields (flag > file > default).
struct ExperimentSpec {
  std::string scenario = "base2";  // file path or builtin name
  double lambda = std::numeric_limits<double>::quiet_NaN();  // overrides scenario comm_lambda
  std::string policy = "optimal";  // comma-separated list for simulate
  std::string artifact;            // solve: output path; simulate: input path

  std::string method = "sarsop";  // or "pbvi"
  double gap_target = 0.01;
  long trial_budget = 400;
  int pbvi_beliefs = 90;
  int pbvi_sweeps = 30;
  int n_bins = 8;
  bool force_comm = false;
  double wall_clock_s = 0.0;

  long horizon = 1000;
  int replications = 20;
  std::uint64_t seed = 2024;
  std::string accounting = "policy_default";
  int warmup = 0;

  std::string sweep_param;  // only "lambda"
  std::vector<double> sweep_values;
  bool solve_inline = false;

  std::string out_dir;
  std::string results_file = "results.csv";
  std::string trace_file;  // when set, simulate dumps replication 0 of the first run
};

inline void spec_apply_json(ExperimentSpec& spec, const ordered_json& j) {
  auto s = [&](const char* k, std::string& v) { if (j.contains(k)) v = j.at(k).get<std::string>(); };
  auto d = [&](const char* k, double& v) { if (j.contains(k)) v = j.at(k).get<double>(); };
  auto i = [&](const char* k, auto& v) { if (j.contains(k)) v = j.at(k).get<std::decay_t<decltype(v)>>(); };
  s("scenario", spec.scenario);
  d("lambda", spec.lambda);
  s("policy", spec.policy);
  s("artifact", spec.artifact);
  s("method", spec.method);
  d("gap_target", spec.gap_target);
  i("trial_budget", spec.trial_budget);
  i("pbvi_beliefs", spec.pbvi_beliefs);
  i("pbvi_sweeps", spec.pbvi_sweeps);
  i("n_bins", spec.n_bins);
  i("force_comm", spec.force_comm);
  d("wall_clock_s", spec.wall_clock_s);
  i("horizon", spec.horizon);
  i("replications", spec.replications);
  i("seed", spec.seed);
  s("accounting", spec.accounting);
  i("warmup", spec.warmup);
  s("sweep_param", spec.sweep_param);
  if (j.contains("sweep_values")) spec.sweep_values = j.at("sweep_values").get<std::vector<double>>();
  i("solve_inline", spec.solve_inline);
  s("out_dir", spec.out_dir);
  s("results_file", spec.results_file);
  s("trace_file", spec.trace_file);
}

inline ExperimentSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  ordered_json j;
  is >> j;
  ExperimentSpec spec;
  spec_apply_json(spec, j);
  return spec;
}

// Flag > file > this env default > current directory.
inline std::string resolve_out_dir(const std::string& flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("COORDINV_OUT_DIR"); env && *env) return env;
  return ".";
}

inline std::string out_path(const std::string& out_dir, const std::string& name) {
  std::filesystem::create_directories(out_dir);
  return (std::filesystem::path(out_dir) / name).string();
}

inline LoadedScenario resolve_scenario(const ExperimentSpec& spec, double lambda_value) {
  LoadedScenario ls;
  if (std::filesystem::exists(spec.scenario)) {
    ls = load_scenario(spec.scenario);
    if (!std::isnan(lambda_value)) {
      ls.scenario.costs.comm_lambda = lambda_value;
      validate(ls.scenario);
    }
  } else {
    ls = builtin_scenario(spec.scenario,
                          std::isnan(lambda_value) ? 2.0 : lambda_value);
  }
  if (!ls.has_grid) {
    ls.grid = build_default_grid(ls.scenario);
    ls.has_grid = true;
  }
  return ls;
}

// ---- solving ----

inline void check_solver_size(const CoordinatorModel& model) {
  std::size_t states = model.dims().size();
  std::size_t acts = model.actions().size();
  if (states > 100000 || states * acts > 60000000)
    throw std::runtime_error(
        "instance too large for the flat solver: " + std::to_string(states) + " joint states x " +
        std::to_string(acts) + " actions (reduce s_max, retailers, or the action grid)");
}

inline PolicyArtifact solve_artifact(const ScenarioConfig& sc, const ActionGrid& grid,
                                     const ExperimentSpec& spec, bool comm_only,
                                     std::ostream* log = nullptr) {
  auto actions = enumerate_actions(grid, sc.n_retailers, sc.regimes.n, sc.s_max,
                                   /*include_comm=*/true, /*include_silent=*/!comm_only);
  CoordinatorModel model(sc, std::move(actions), spec.n_bins);
  check_solver_size(model);
  FlatBelief b0 = initial_belief(sc);

  PolicyArtifact art;
  art.scenario_name = sc.name;
  art.fingerprint = scenario_fingerprint(sc);
  art.n_bins = spec.n_bins;
  art.comm_only = comm_only;
  art.actions = model.actions();
  art.info.seed = spec.seed;

  if (spec.method == "sarsop") {
    SarsopParams p;
    p.eps_rel = spec.gap_target;
    p.max_trials = static_cast<int>(spec.trial_budget);
    p.wall_clock_s = spec.wall_clock_s;
    SarsopResult r = sarsop_solve(model, b0, p);
    art.envelope = std::move(r.upper);
    art.info.method = "sarsop";
    art.info.upper_b0 = r.upper_b0;
    art.info.lower_b0 = r.lower_b0;
    art.info.rel_gap = r.rel_gap;
    art.info.iterations = r.trials;
    art.info.seconds = r.seconds;
  } else if (spec.method == "pbvi") {
    PbviParams p;
    p.n_beliefs = spec.pbvi_beliefs;
    p.max_sweeps = spec.pbvi_sweeps;
    p.seed = spec.seed;
    PbviResult r = pbvi_solve(model, b0, p);
    // The full-information corner plane is a true lower bound at any belief.
    double lower = vec_dot(mdp_corner_bound(model), b0.p);
    art.envelope = std::move(r.upper);
    art.info.method = "pbvi";
    art.info.upper_b0 = r.upper_b0;
    art.info.lower_b0 = lower;
    art.info.rel_gap = (r.upper_b0 - lower) / std::max(std::fabs(r.upper_b0), 1e-9);
    art.info.iterations = r.sweeps;
    art.info.seconds = r.seconds;
  } else {
    throw std::invalid_argument("unknown solver method \"" + spec.method +
                                "\" (expected sarsop or pbvi)");
  }
  if (log) {
    char line[256];
    std::snprintf(line, sizeof(line),
                  "solve %s lambda=%.10g method=%s actions=%zu states=%zu%s\n"
                  "  bounds [%.6f, %.6f] rel_gap=%.4g iterations=%ld seconds=%.2f\n",
                  sc.name.c_str(), sc.costs.comm_lambda, art.info.method.c_str(),
                  art.actions.size(), model.dims().size(), comm_only ? " comm_only" : "",
                  art.info.lower_b0, art.info.upper_b0, art.info.rel_gap, art.info.iterations,
                  art.info.seconds);
    *log << line;
  }
  return art;
}

inline int cmd_solve(const ExperimentSpec& spec, std::ostream& log) {
  double lam = spec.lambda;
  LoadedScenario ls = resolve_scenario(spec, lam);
  PolicyArtifact art = solve_artifact(ls.scenario, ls.grid, spec, spec.force_comm, &log);
  std::string dir = resolve_out_dir(spec.out_dir);
  std::string name = spec.artifact;
  if (name.empty()) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s_lambda%.10g%s.policy.json", ls.scenario.name.c_str(),
                  ls.scenario.costs.comm_lambda, spec.force_comm ? "_commonly" : "");
    name = buf;
  }
  std::string path = out_path(dir, name);
  save_artifact(path, art);
  log << "wrote " << path << "\n";
  return 0;
}

// ---- result rows ----

struct ResultRow {
  std::string scenario;
  std::string policy;
  std::string sweep_param = "lambda";
  double sweep_value = 0.0;
  int replications = 0;
  long horizon = 0;
  std::uint64_t seed = 0;
  std::string accounting;
  SimReport report;
};

inline const char* results_header() {
  return "scenario,policy,sweep_param,sweep_value,replications,horizon,seed,accounting,"
         "holding,holding_hw,stockout,stockout_hw,comm,comm_hw,total,total_hw,"
         "fill_rate,fill_rate_hw,comm_freq,comm_freq_hw";
}

inline void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "# coordinv-results v1\n" << results_header() << "\n";
  char buf[512];
  for (const auto& r : rows) {
    const SimReport& m = r.report;
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%s,%.10g,%d,%ld,%llu,%s,"
                  "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                  r.scenario.c_str(), r.policy.c_str(), r.sweep_param.c_str(), r.sweep_value,
                  r.replications, r.horizon, static_cast<unsigned long long>(r.seed),
                  r.accounting.c_str(), m.holding.mean, m.holding.half_width, m.stockout.mean,
                  m.stockout.half_width, m.comm.mean, m.comm.half_width, m.total.mean,
                  m.total.half_width, m.pooled_fill, m.fill.half_width, m.comm_freq.mean,
                  m.comm_freq.half_width);
    os << buf;
  }
}

inline std::vector<ResultRow> read_results_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open results file: " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("results file " + path + ": empty");
  if (line != "# coordinv-results v1")
    throw std::runtime_error("results file " + path + ": unsupported version line \"" + line +
                             "\" (expected \"# coordinv-results v1\")");
  if (!std::getline(is, line) || line != results_header())
    throw std::runtime_error("results file " + path + ": unexpected column header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 20)
      throw std::runtime_error("results file " + path + ": malformed row \"" + line + "\"");
    ResultRow r;
    r.scenario = f[0];
    r.policy = f[1];
    r.sweep_param = f[2];
    r.sweep_value = std::stod(f[3]);
    r.replications = std::stoi(f[4]);
    r.horizon = std::stol(f[5]);
    r.seed = std::stoull(f[6]);
    r.accounting = f[7];
    SimReport& m = r.report;
    m.holding = {std::stod(f[8]), std::stod(f[9])};
    m.stockout = {std::stod(f[10]), std::stod(f[11])};
    m.comm = {std::stod(f[12]), std::stod(f[13])};
    m.total = {std::stod(f[14]), std::stod(f[15])};
    m.pooled_fill = std::stod(f[16]);
    m.fill = {m.pooled_fill, std::stod(f[17])};
    m.comm_freq = {std::stod(f[18]), std::stod(f[19])};
    m.replications = r.replications;
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- simulate ----

inline std::vector<PolicySpec> parse_policy_list(const std::string& text) {
  std::vector<PolicySpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_policy_spec(item));
  }
  if (out.empty()) throw std::invalid_argument("simulate: no policies given");
  return out;
}

inline bool policy_uses_artifact(PolicyKind kind) {
  return kind == PolicyKind::OptimalDynamic || kind == PolicyKind::AlwaysShare ||
         kind == PolicyKind::PeriodicShare;
}

inline int cmd_simulate(const ExperimentSpec& spec, std::ostream& log) {
  std::vector<PolicySpec> policies = parse_policy_list(spec.policy);
  std::vector<double> values = spec.sweep_values;
  std::string sweep_param = spec.sweep_param.empty() ? "lambda" : spec.sweep_param;
  if (sweep_param != "lambda")
    throw std::invalid_argument("simulate: unsupported sweep parameter \"" + sweep_param + "\"");
  if (!spec.sweep_values.empty() && spec.sweep_param.empty())
    throw std::invalid_argument("simulate: sweep_values given without sweep_param");
  bool sweeping = !values.empty();
  if (!sweeping) values.push_back(spec.lambda);  // single point at the scenario's lambda

  SimConfig cfg;
  cfg.horizon = spec.horizon;
  cfg.replications = spec.replications;
  cfg.master_seed = spec.seed;
  cfg.accounting = parse_accounting(spec.accounting);
  cfg.warmup = spec.warmup;

  std::vector<ResultRow> rows;
  bool traced = false;
  for (double v : values) {
    LoadedScenario ls = resolve_scenario(spec, v);
    const ScenarioConfig& sc = ls.scenario;
    // One solve per (sweep value, action set) serves every policy that needs it.
    std::map<bool, PolicyArtifact> solved;
    auto artifact_for = [&](PolicyKind kind) -> const PolicyArtifact& {
      bool comm_only = kind != PolicyKind::OptimalDynamic;
      if (!spec.artifact.empty()) {
        auto it = solved.find(comm_only);
        if (it == solved.end()) {
          PolicyArtifact art = load_artifact(spec.artifact);
          check_artifact(art, sc);
          it = solved.emplace(comm_only, std::move(art)).first;
        }
        return it->second;
      }
      if (!spec.solve_inline)
        throw std::runtime_error("simulate: policy needs a policy artifact; pass one or enable "
                                 "inline solving");
      auto it = solved.find(comm_only);
      if (it == solved.end())
        it = solved.emplace(comm_only, solve_artifact(sc, ls.grid, spec, comm_only, &log)).first;
      return it->second;
    };

    for (const PolicySpec& ps : policies) {
      Policy policy = policy_uses_artifact(ps.kind) && (spec.solve_inline || !spec.artifact.empty())
                          ? Policy(ps, sc, artifact_for(ps.kind))
                          : Policy(ps, sc);
      SimReport rep = run_replications(sc, policy, cfg);

      if (!spec.trace_file.empty() && !traced) {
        EpisodeTrace tr;
        run_episode(sc, policy, cfg, 0, &tr);
        std::ofstream os(out_path(resolve_out_dir(spec.out_dir), spec.trace_file));
        write_trace_csv(os, sc, tr);
        traced = true;
      }

      ResultRow row;
      row.scenario = sc.name;
      row.policy = policy_name(ps);
      row.sweep_param = sweep_param;
      row.sweep_value = sc.costs.comm_lambda;
      row.replications = spec.replications;
      row.horizon = spec.horizon;
      row.seed = spec.seed;
      row.accounting = accounting_name(resolve_accounting(cfg.accounting, ps.kind));
      row.report = rep;
      char line[256];
      std::snprintf(line, sizeof(line),
                    "simulate %s policy=%s lambda=%.10g total=%.3f+-%.3f fill=%.4f "
                    "comm_freq=%.4f\n",
                    sc.name.c_str(), row.policy.c_str(), row.sweep_value, rep.total.mean,
                    rep.total.half_width, rep.pooled_fill, rep.comm_freq.mean);
      log << line;
      rows.push_back(std::move(row));
    }
  }

  std::string path = out_path(resolve_out_dir(spec.out_dir), spec.results_file);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write results file: " + path);
  write_results_csv(os, rows);
  log << "wrote " << path << "\n";
  return 0;
}

// ---- sweep-report ----

inline std::string sanitize_for_filename(std::string s) {
  for (char& c : s)
    if (c == ':' || c == '/' || c == ' ') c = '_';
  return s;
}

inline int cmd_sweep_report(const std::vector<std::string>& files, const std::string& out_dir_flag,
                            std::ostream& log) {
  if (files.empty()) throw std::invalid_argument("sweep-report: need at least one results file");
  std::vector<ResultRow> all;
  std::map<std::pair<std::string, double>, int> seen;
  std::vector<std::string> dups;
  for (const auto& f : files) {
    for (auto& r : read_results_csv(f)) {
      auto key = std::make_pair(r.policy, r.sweep_value);
      if (++seen[key] == 2) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "(%s, %.10g)", r.policy.c_str(), r.sweep_value);
        dups.push_back(buf);
      }
      all.push_back(std::move(r));
    }
  }
  if (!dups.empty()) {
    std::string msg = "sweep-report: conflicting duplicate keys:";
    for (const auto& d : dups) msg += " " + d;
    throw std::runtime_error(msg);
  }
  std::sort(all.begin(), all.end(), [](const ResultRow& a, const ResultRow& b) {
    return a.policy != b.policy ? a.policy < b.policy : a.sweep_value < b.sweep_value;
  });

  std::string dir = resolve_out_dir(out_dir_flag);
  {
    std::ofstream os(out_path(dir, "merged_results.csv"));
    write_results_csv(os, all);
  }

  // Comparison table, fixed column widths.
  log << "policy            sweep    total        fill     comm_freq\n";
  char line[160];
  for (const auto& r : all) {
    std::snprintf(line, sizeof(line), "%-17s %-8.4g %8.3f+-%-6.3f %7.4f %9.4f\n",
                  r.policy.c_str(), r.sweep_value, r.report.total.mean,
                  r.report.total.half_width, r.report.pooled_fill, r.report.comm_freq.mean);
    log << line;
  }

  // Plain numeric x/y curve files, one per policy.
  std::map<std::string, std::vector<const ResultRow*>> by_policy;
  for (const auto& r : all) by_policy[r.policy].push_back(&r);
  for (auto& [policy, rows] : by_policy) {
    std::string tag = sanitize_for_filename(policy);
    {
      std::ofstream os(out_path(dir, "cost_vs_lambda_" + tag + ".dat"));
      for (const ResultRow* r : rows) {
        std::snprintf(line, sizeof(line), "%.10g %.10g\n", r->sweep_value, r->report.total.mean);
        os << line;
      }
    }
    {
      std::vector<const ResultRow*> sorted = rows;
      std::sort(sorted.begin(), sorted.end(), [](const ResultRow* a, const ResultRow* b) {
        return a->report.comm_freq.mean < b->report.comm_freq.mean;
      });
      std::ofstream os(out_path(dir, "fill_vs_commfreq_" + tag + ".dat"));
      for (const ResultRow* r : sorted) {
        std::snprintf(line, sizeof(line), "%.10g %.10g\n", r->report.comm_freq.mean,
                      r->report.pooled_fill);
        os << line;
      }
    }
  }
  log << "wrote " << out_path(dir, "merged_results.csv") << " and " << 2 * by_policy.size()
      << " curve files\n";
  return 0;
}

}  // namespace coordinv
