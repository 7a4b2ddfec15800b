// dgsqp command line: solve one scenario instance, run a Monte Carlo batch or
// a paired line-search/merit ablation.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dgsqp/harness/artifacts.hpp"
#include "dgsqp/harness/config.hpp"
#include "dgsqp/harness/montecarlo.hpp"
#include "dgsqp/scenarios/scenario.hpp"
#include "dgsqp/solver.hpp"

namespace {

using namespace dgsqp;
using namespace dgsqp::harness;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> jobs;
  std::optional<int> max_iters;
  std::optional<double> tol;
  std::optional<int> horizon;
  std::optional<double> turn_angle;
  std::optional<std::string> scenario;
  // Solver keys.
  std::optional<double> eps_stationarity, eps_feasibility, eps_complementarity;
  std::optional<double> divergence_threshold, hessian_regularization, merit_rho;
  std::optional<int> watchdog_steps;
  std::optional<double> sufficient_decrease, backtracking_tau, alpha_min, relative_tol;
  std::optional<int> relative_patience;
  std::optional<double> dual_init_regularization, fd_step;
  std::optional<bool> exact_hessian;
  std::optional<std::string> line_search, merit;
};

void add_common(CLI::App* cmd, Overrides& o, std::string& out_dir) {
  cmd->add_option("--config", o.config_path, "JSON experiment configuration");
  cmd->add_option("--seed", o.seed, "Base random seed");
  cmd->add_option("--out", out_dir, "Output directory")->required();
  cmd->add_option("--max-iters", o.max_iters, "Solver iteration cap");
  cmd->add_option("--tol", o.tol, "Sets all three KKT tolerances");
  cmd->add_option("--horizon", o.horizon, "Scenario horizon N");
  cmd->add_option("--turn-angle", o.turn_angle, "Racing turn angle in degrees");
  cmd->add_option("--scenario", o.scenario, "ramp-merge | racing | racing-blocking");
  cmd->add_option("--eps-stationarity", o.eps_stationarity);
  cmd->add_option("--eps-feasibility", o.eps_feasibility);
  cmd->add_option("--eps-complementarity", o.eps_complementarity);
  cmd->add_option("--divergence-threshold", o.divergence_threshold);
  cmd->add_option("--hessian-regularization", o.hessian_regularization);
  cmd->add_option("--merit-rho", o.merit_rho);
  cmd->add_option("--watchdog-steps", o.watchdog_steps);
  cmd->add_option("--sufficient-decrease", o.sufficient_decrease);
  cmd->add_option("--backtracking-tau", o.backtracking_tau);
  cmd->add_option("--alpha-min", o.alpha_min);
  cmd->add_option("--relative-tol", o.relative_tol);
  cmd->add_option("--relative-patience", o.relative_patience);
  cmd->add_option("--dual-init-regularization", o.dual_init_regularization);
  cmd->add_option("--fd-step", o.fd_step);
  cmd->add_option("--exact-hessian", o.exact_hessian);
  cmd->add_option("--line-search", o.line_search, "watchdog | backtracking");
  cmd->add_option("--merit", o.merit, "full | stationarity");
}

void add_batch(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--trials", o.trials, "Number of trials");
  cmd->add_option("--jobs", o.jobs, "Worker threads");
}

template <typename T>
void apply(const std::optional<T>& v, T& dst) {
  if (v) dst = *v;
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = load_experiment(o.config_path);
  if (o.scenario) {
    const auto kind = scenarios::scenario_kind_from_string(*o.scenario);
    if (kind != cfg.scenario.kind) cfg.scenario = scenarios::ScenarioConfig::defaults(kind);
  }
  apply(o.horizon, cfg.scenario.horizon);
  apply(o.turn_angle, cfg.scenario.track.turn_angle_deg);
  apply(o.seed, cfg.seed);
  apply(o.trials, cfg.trials);
  apply(o.jobs, cfg.jobs);
  auto& s = cfg.solver;
  if (o.tol) s.eps_stationarity = s.eps_feasibility = s.eps_complementarity = *o.tol;
  apply(o.max_iters, s.max_iterations);
  apply(o.eps_stationarity, s.eps_stationarity);
  apply(o.eps_feasibility, s.eps_feasibility);
  apply(o.eps_complementarity, s.eps_complementarity);
  apply(o.divergence_threshold, s.divergence_threshold);
  apply(o.hessian_regularization, s.hessian_regularization);
  apply(o.merit_rho, s.merit_rho);
  apply(o.watchdog_steps, s.watchdog_steps);
  apply(o.sufficient_decrease, s.sufficient_decrease);
  apply(o.backtracking_tau, s.backtracking_tau);
  apply(o.alpha_min, s.alpha_min);
  apply(o.relative_tol, s.relative_tol);
  apply(o.relative_patience, s.relative_patience);
  apply(o.dual_init_regularization, s.dual_init_regularization);
  apply(o.fd_step, s.fd_step);
  apply(o.exact_hessian, s.exact_hessian);
  if (o.line_search) s.line_search = line_search_from_string(*o.line_search);
  if (o.merit) s.merit = merit_from_string(*o.merit);
  if (cfg.trials < 0) throw ConfigError("--trials must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("--jobs must be >= 1");
  cfg.scenario.validate();
  s.validate();
  return cfg;
}

std::string trace_csv(const SolveResult& r) {
  std::ostringstream out;
  out << "iteration,stationarity,max_violation,complementarity,merit,mu,feasibility_gap,"
         "directional_derivative,step_norm,alpha,qp_solves,relaxed_steps\n";
  for (const auto& t : r.trace) {
    out << t.iteration << ',' << format_double(t.stationarity) << ','
        << format_double(t.max_violation) << ',' << format_double(t.complementarity) << ','
        << format_double(t.merit) << ',' << format_double(t.mu) << ','
        << format_double(t.feasibility_gap) << ',' << format_double(t.directional_derivative)
        << ',' << format_double(t.step_norm) << ',' << format_double(t.alpha) << ','
        << t.qp_solves << ',' << t.relaxed_steps << "\n";
  }
  return out.str();
}

int run_solve(const Overrides& o, const std::string& out_dir, int trial, bool nominal) {
  const ExperimentConfig cfg = resolve(o);
  const scenarios::Scenario scenario = scenarios::build_scenario(cfg.scenario);
  const Vector x0 = nominal ? scenario.nominal_state()
                            : scenario.sample_initial_state(cfg.seed, static_cast<std::uint64_t>(trial));
  const DynamicGame game = scenario.build_game(x0);
  const DecisionVector guess = scenario.initial_guess(game);
  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult result = solve(game, guess, cfg.solver);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::filesystem::path dir(out_dir);
  ensure_directory(dir);
  write_text(dir / "trace.csv", trace_csv(result));
  write_text(dir / "trajectory.svg", trajectory_svg(scenario, game, result.final.u));
  json summary = {
      {"status", std::string(to_string(result.status))},
      {"iterations", result.iterations},
      {"qp_solves", result.qp_solves},
      {"wall_time_s", wall},
      {"stationarity", result.stationarity},
      {"max_violation", result.max_violation},
      {"complementarity", result.complementarity},
      {"scenario", describe(cfg.scenario)},
      {"config", experiment_to_json(cfg)},
  };
  if (result.status == SolveStatus::kConvergedKkt) {
    const auto a2 = check_assumption2(game, result.final);
    summary["assumption2"] = {{"strict_complementarity", a2.strict_complementarity},
                              {"licq", a2.licq},
                              {"reduced_hessian_pd", a2.reduced_hessian_pd}};
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::printf("%s after %d iterations (%d QP solves, %.3f s), stationarity %.3e, violation %.3e\n",
              std::string(to_string(result.status)).c_str(), result.iterations, result.qp_solves,
              wall, result.stationarity, result.max_violation);
  return 0;
}

void print_progress(const TrialRecord& r) {
  std::fprintf(stderr, "[%s] trial %d: %s (%d it, %.2f s)\n", r.variant.c_str(), r.trial,
               r.status.c_str(), r.iterations, r.wall_time);
}

void print_report(const char* label, const BenchmarkReport& r) {
  std::printf("%s: %d trials, conv %d, conv-relative %d, fail %d, max-iters %d, "
              "mean time %.3f s, mean iterations %.2f, median stationarity %.3e\n",
              label, r.trials, r.converged, r.converged_relative, r.failed, r.max_iterations,
              r.mean_time, r.mean_iterations, r.median_stationarity);
}

int run_montecarlo(const Overrides& o, const std::string& out_dir, bool quiet) {
  const ExperimentConfig cfg = resolve(o);
  MonteCarloOptions opts;
  opts.jobs = cfg.jobs;
  opts.check_assumption2 = true;
  if (!quiet) opts.progress = print_progress;
  const MonteCarloResult mc = run_monte_carlo(cfg.scenario, cfg.trials, cfg.seed, cfg.solver, opts);
  const std::filesystem::path dir(out_dir);
  emit_artifacts(mc.report, mc.records, dir,
                 {{"scenario", describe(cfg.scenario)}, {"config", experiment_to_json(cfg)}});
  const scenarios::Scenario scenario = scenarios::build_scenario(cfg.scenario);
  for (const auto& rec : mc.records) {
    if (rec.status != to_string(SolveStatus::kConvergedKkt)) continue;
    const DynamicGame game = scenario.build_game(rec.initial_state);
    write_text(dir / "trajectory.svg", trajectory_svg(scenario, game, rec.final_u));
    break;
  }
  print_report("dgsqp", mc.report);
  return 0;
}

int run_ablate(const Overrides& o, const std::string& out_dir, bool quiet, bool control) {
  ExperimentConfig cfg = resolve(o);
  if (!o.scenario && cfg.scenario.kind != scenarios::ScenarioKind::kRacingBlocking) {
    const auto keep = cfg.scenario;
    cfg.scenario = scenarios::ScenarioConfig::defaults(scenarios::ScenarioKind::kRacingBlocking);
    cfg.scenario.horizon = keep.horizon;
    cfg.scenario.track = keep.track;
  }
  AblationOptions opts;
  opts.jobs = cfg.jobs;
  opts.ablate = !control;
  if (!quiet) opts.progress = print_progress;
  const AblationResult ab = run_ablation(cfg.scenario, cfg.trials, cfg.seed, cfg.solver, opts);

  const std::filesystem::path dir(out_dir);
  ensure_directory(dir);
  std::vector<TrialRecord> all = ab.full.records;
  all.insert(all.end(), ab.plain.records.begin(), ab.plain.records.end());
  write_text(dir / "trials.csv", trials_csv(all));
  auto stationarity = [](const MonteCarloResult& r) {
    std::vector<double> v;
    for (const auto& rec : r.records) v.push_back(rec.stationarity);
    return v;
  };
  write_text(dir / "stationarity_box.svg",
             stationarity_boxplot_svg({{"full", stationarity(ab.full)},
                                       {control ? "full (control)" : "plain", stationarity(ab.plain)}}));
  write_text(dir / "violations.svg", violation_histogram_svg(ab.full.report));
  const json summary = {
      {"scenario", describe(cfg.scenario)},
      {"config", experiment_to_json(cfg)},
      {"full", report_to_json(ab.full.report)},
      {"plain", report_to_json(ab.plain.report)},
      {"median_stationarity_full", ab.median_stationarity_full},
      {"median_stationarity_plain", ab.median_stationarity_plain},
  };
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  print_report("full", ab.full.report);
  print_report("plain", ab.plain.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic game SQP solver: single solves, Monte Carlo batches and ablations"};
  app.require_subcommand(1);

  Overrides solve_o, mc_o, ab_o;
  std::string solve_out, mc_out, ab_out;
  int trial = 0;
  bool nominal = false, quiet = false, control = false;

  CLI::App* solve_cmd = app.add_subcommand("solve", "Solve one scenario instance");
  add_common(solve_cmd, solve_o, solve_out);
  solve_cmd->add_option("--trial", trial, "Trial index to sample (with --seed)");
  solve_cmd->add_flag("--nominal", nominal, "Use the nominal initial state");

  CLI::App* mc_cmd = app.add_subcommand("montecarlo", "Run a Monte Carlo batch");
  add_common(mc_cmd, mc_o, mc_out);
  add_batch(mc_cmd, mc_o);
  mc_cmd->add_flag("--quiet", quiet, "No per-trial progress");

  CLI::App* ab_cmd = app.add_subcommand("ablate", "Full method vs plain backtracking");
  add_common(ab_cmd, ab_o, ab_out);
  add_batch(ab_cmd, ab_o);
  ab_cmd->add_flag("--quiet", quiet, "No per-trial progress");
  ab_cmd->add_flag("--control", control, "Run the full method in both arms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*solve_cmd) return run_solve(solve_o, solve_out, trial, nominal);
    if (*mc_cmd) return run_montecarlo(mc_o, mc_out, quiet);
    return run_ablate(ab_o, ab_out, quiet, control);
  } catch (const IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
