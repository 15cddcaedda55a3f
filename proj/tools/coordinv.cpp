// coordinv: solve coordinator policies, simulate decentralized control, and
// merge sweep results into comparison tables and plot data.
//
// Option precedence is flag > config file > built-in default. The only
// environment variable consulted is COORDINV_OUT_DIR (fallback output
// directory when --out-dir is not given).
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coordinv/experiment.hpp"

namespace {

// The config file must be applied before flag parsing so that flags override
// it; CLI11 only assigns bound fields when their flag is present.
std::string scan_config_path(int argc, char** argv) {
  for (int k = 1; k < argc; ++k) {
    std::string a = argv[k];
    if (a == "--config" && k + 1 < argc) return argv[k + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

void add_scenario_flags(CLI::App* cmd, coordinv::ExperimentSpec& spec) {
  cmd->add_option("--scenario", spec.scenario,
                  "Scenario JSON file, or a builtin name (tiny, base2, base3)");
  cmd->add_option("--lambda", spec.lambda, "Override the per-round sharing surcharge");
  cmd->add_option("--out-dir", spec.out_dir, "Output directory (default: COORDINV_OUT_DIR or .)");
  cmd->add_option("--config", "JSON config file supplying any of these options")
      ->type_name("FILE");
}

void add_solver_flags(CLI::App* cmd, coordinv::ExperimentSpec& spec) {
  cmd->add_option("--method", spec.method, "Solver: sarsop (default) or pbvi");
  cmd->add_option("--gap-target", spec.gap_target, "Relative bound gap to stop at");
  cmd->add_option("--trial-budget", spec.trial_budget, "Maximum solver trials");
  cmd->add_option("--pbvi-beliefs", spec.pbvi_beliefs, "Belief set size for pbvi");
  cmd->add_option("--pbvi-sweeps", spec.pbvi_sweeps, "Backup sweeps for pbvi");
  cmd->add_option("--n-bins", spec.n_bins, "Observation bins per retailer in the planner");
  cmd->add_option("--wall-clock", spec.wall_clock_s, "Solver time budget in seconds (0 = off)");
  cmd->add_option("--seed", spec.seed, "Master seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regime-switching multi-retailer inventory control: point-based policy\n"
               "solving and decentralized simulation with explicit sharing costs."};
  app.require_subcommand(1);

  coordinv::ExperimentSpec spec;
  std::string config = scan_config_path(argc, argv);
  try {
    if (!config.empty()) spec = coordinv::load_spec(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App* solve = app.add_subcommand(
      "solve", "Solve the coordinator planning problem and write a policy artifact");
  add_scenario_flags(solve, spec);
  add_solver_flags(solve, spec);
  solve->add_option("--artifact", spec.artifact,
                    "Artifact file name (default: <scenario>_lambda<v>.policy.json)");
  solve->add_flag("--force-comm", spec.force_comm,
                  "Restrict the action set to sharing actions (for always/periodic baselines)");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "Run decentralized episodes under one or more policies and write results.csv");
  add_scenario_flags(simulate, spec);
  add_solver_flags(simulate, spec);
  simulate->add_option(
      "--policy", spec.policy,
      "Comma-separated list: optimal, always, never, periodic:K, threshold:D");
  simulate->add_option("--artifact", spec.artifact, "Policy artifact for solved policies");
  simulate->add_flag("--solve-inline", spec.solve_inline,
                     "Solve artifacts on the fly instead of loading one");
  simulate->add_option("--horizon", spec.horizon, "Periods per episode");
  simulate->add_option("--replications", spec.replications, "Independent episodes per point");
  simulate->add_option("--warmup", spec.warmup, "Leading periods excluded from the metrics");
  simulate->add_option("--accounting", spec.accounting,
                       "Sharing cost accounting: policy_default, round, per_message");
  simulate->add_option("--sweep-param", spec.sweep_param, "Sweep parameter (lambda)");
  simulate
      ->add_option("--sweep-values", spec.sweep_values,
                   "Comma-separated sweep values; one result row per value and policy")
      ->delimiter(',');
  simulate->add_option("--results-file", spec.results_file,
                       "Results CSV name (first line \"# coordinv-results v1\")");
  simulate->add_option("--trace-file", spec.trace_file,
                       "Also write one replication-0 episode trace CSV");

  CLI::App* report = app.add_subcommand(
      "sweep-report",
      "Merge results.csv files into merged_results.csv, a comparison table, and x/y "
      "plot data (cost_vs_lambda_<policy>.dat, fill_vs_commfreq_<policy>.dat)");
  std::vector<std::string> result_files;
  std::string report_out_dir;
  report->add_option("files", result_files, "Results CSV files to merge")->required();
  report->add_option("--out-dir", report_out_dir,
                     "Output directory (default: COORDINV_OUT_DIR or .)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return coordinv::cmd_solve(spec, std::cout);
    if (simulate->parsed()) return coordinv::cmd_simulate(spec, std::cout);
    return coordinv::cmd_sweep_report(result_files, report_out_dir, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
