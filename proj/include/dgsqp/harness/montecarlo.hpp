#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dgsqp/scenarios/scenario.hpp"
#include "dgsqp/solver.hpp"

namespace dgsqp::harness {

/// Status recorded when a trial throws instead of returning a SolveResult.
inline constexpr const char* kHarnessError = "harness-error";

struct TrialRecord {
  int trial = 0;
  std::uint64_t seed = 0;  // per-trial stream seed
  std::string scenario;
  std::string variant;
  std::string status;
  int iterations = 0;
  int qp_solves = 0;
  double wall_time = 0.0;  // seconds, solve only
  double stationarity = 0.0;
  double max_violation = 0.0;
  double complementarity = 0.0;
  int relaxed_steps = 0;

  // Kept in memory for plots and checks; not written to the CSV.
  Vector initial_state;
  Vector final_u;
  Vector final_lambda;
  std::vector<IterationRecord> trace;
  int assumption2 = -1;  // -1 unchecked, 0 violated, 1 holds
  std::string error;
};

enum class Category { kConverged, kConvergedRelative, kFail, kMaxIterations };

inline Category categorize(const std::string& status) {
  if (status == to_string(SolveStatus::kConvergedKkt)) return Category::kConverged;
  if (status == to_string(SolveStatus::kConvergedRelative)) return Category::kConvergedRelative;
  if (status == to_string(SolveStatus::kMaxIterations)) return Category::kMaxIterations;
  return Category::kFail;
}

struct BenchmarkReport {
  int trials = 0;
  std::map<std::string, int> status_counts;
  int converged = 0;
  int converged_relative = 0;
  int failed = 0;
  int max_iterations = 0;
  // Over converged trials.
  double mean_time = 0.0;
  double std_time = 0.0;
  double mean_iterations = 0.0;
  double mean_qp_solves = 0.0;
  // Over all trials.
  double mean_qp_solves_all = 0.0;
  double median_stationarity = 0.0;
  // Terminal max violation by outcome (success = converged-kkt).
  std::vector<double> violation_success;
  std::vector<double> violation_failure;
  double median_violation_max_iterations = 0.0;
  int assumption2_checked = 0;
  int assumption2_holds = 0;
};

struct MonteCarloResult {
  BenchmarkReport report;
  std::vector<TrialRecord> records;
};

struct MonteCarloOptions {
  int jobs = 1;
  std::string variant = "dgsqp";
  /// Run the a-posteriori regularity check on converged trials.
  bool check_assumption2 = false;
  /// Called after each trial (from worker threads, serialized).
  std::function<void(const TrialRecord&)> progress;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::string describe(const scenarios::ScenarioConfig& c) {
  std::ostringstream out;
  out << scenarios::to_string(c.kind);
  if (c.kind != scenarios::ScenarioKind::kRampMerge) out << "/theta=" << c.track.turn_angle_deg;
  out << "/N=" << c.horizon;
  return out.str();
}

/// Samples, builds and solves one trial. Never throws.
inline TrialRecord run_trial(const scenarios::Scenario& scenario, const SolverConfig& solver,
                             std::uint64_t seed, int trial, const MonteCarloOptions& options = {}) {
  TrialRecord rec;
  rec.trial = trial;
  rec.seed = scenarios::trial_seed(seed, static_cast<std::uint64_t>(trial));
  rec.scenario = describe(scenario.config());
  rec.variant = options.variant;
  try {
    rec.initial_state = scenario.sample_initial_state(seed, static_cast<std::uint64_t>(trial));
    const DynamicGame game = scenario.build_game(rec.initial_state);
    const DecisionVector guess = scenario.initial_guess(game);
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult result = solve(game, guess, solver);
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.status = std::string(to_string(result.status));
    rec.iterations = result.iterations;
    rec.qp_solves = result.qp_solves;
    rec.stationarity = result.stationarity;
    rec.max_violation = result.max_violation;
    rec.complementarity = result.complementarity;
    for (const auto& it : result.trace) rec.relaxed_steps += it.relaxed_steps;
    rec.final_u = result.final.u;
    rec.final_lambda = result.final.lambda;
    rec.trace = result.trace;
    if (options.check_assumption2 && result.status == SolveStatus::kConvergedKkt) {
      rec.assumption2 = check_assumption2(game, result.final).all() ? 1 : 0;
    }
  } catch (const std::exception& e) {
    rec.status = kHarnessError;
    rec.error = e.what();
  }
  return rec;
}

inline BenchmarkReport summarize(const std::vector<TrialRecord>& records) {
  BenchmarkReport r;
  r.trials = static_cast<int>(records.size());
  std::vector<double> times, stationarity, max_iter_violation;
  double iterations = 0.0, qp = 0.0, qp_all = 0.0;
  for (const auto& rec : records) {
    ++r.status_counts[rec.status];
    qp_all += rec.qp_solves;
    stationarity.push_back(rec.stationarity);
    if (rec.assumption2 >= 0) {
      ++r.assumption2_checked;
      r.assumption2_holds += rec.assumption2;
    }
    switch (categorize(rec.status)) {
      case Category::kConverged:
        ++r.converged;
        times.push_back(rec.wall_time);
        iterations += rec.iterations;
        qp += rec.qp_solves;
        r.violation_success.push_back(rec.max_violation);
        break;
      case Category::kConvergedRelative:
        ++r.converged_relative;
        r.violation_failure.push_back(rec.max_violation);
        break;
      case Category::kFail:
        ++r.failed;
        if (rec.status != kHarnessError) r.violation_failure.push_back(rec.max_violation);
        break;
      case Category::kMaxIterations:
        ++r.max_iterations;
        r.violation_failure.push_back(rec.max_violation);
        max_iter_violation.push_back(rec.max_violation);
        break;
    }
  }
  if (!times.empty()) {
    const double n = static_cast<double>(times.size());
    for (double t : times) r.mean_time += t / n;
    double var = 0.0;
    for (double t : times) var += (t - r.mean_time) * (t - r.mean_time);
    r.std_time = times.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
    r.mean_iterations = iterations / n;
    r.mean_qp_solves = qp / n;
  }
  if (r.trials > 0) r.mean_qp_solves_all = qp_all / r.trials;
  r.median_stationarity = median(stationarity);
  r.median_violation_max_iterations = median(max_iter_violation);
  return r;
}

/**
 * Runs `trials` independent trials on a pool of `options.jobs` workers.
 * Records come back in trial order whatever the scheduling.
 */
inline MonteCarloResult run_monte_carlo(const scenarios::ScenarioConfig& scenario_config,
                                        int trials, std::uint64_t seed,
                                        const SolverConfig& solver,
                                        const MonteCarloOptions& options = {}) {
  if (trials < 0) throw ConfigError("trial count must be >= 0");
  solver.validate();
  const scenarios::Scenario scenario = scenarios::build_scenario(scenario_config);
  MonteCarloResult out;
  out.records.resize(static_cast<std::size_t>(trials));
  std::atomic<int> next{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (int t = next++; t < trials; t = next++) {
      out.records[t] = run_trial(scenario, solver, seed, t, options);
      if (options.progress) {
        std::lock_guard<std::mutex> lock(progress_mutex);
        options.progress(out.records[t]);
      }
    }
  };
  const int jobs = std::max(1, std::min(options.jobs, trials));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  out.report = summarize(out.records);
  return out;
}

struct AblationResult {
  MonteCarloResult full;
  MonteCarloResult plain;
  double median_stationarity_full = 0.0;
  double median_stationarity_plain = 0.0;
};

struct AblationOptions {
  int jobs = 1;
  /// When false both arms run the full method (control experiment).
  bool ablate = true;
  std::function<void(const TrialRecord&)> progress;
};

/// Full method versus monotone backtracking on the stationarity-only merit,
/// on identical trial seeds.
inline AblationResult run_ablation(const scenarios::ScenarioConfig& scenario_config, int trials,
                                   std::uint64_t seed, const SolverConfig& base = {},
                                   const AblationOptions& options = {}) {
  if (scenario_config.kind != scenarios::ScenarioKind::kRacingBlocking) {
    throw ConfigError("ablation requires the racing-blocking scenario");
  }
  SolverConfig full = base;
  full.line_search = LineSearchKind::kWatchdog;
  full.merit = MeritKind::kFull;
  SolverConfig plain = full;
  if (options.ablate) {
    plain.line_search = LineSearchKind::kBacktracking;
    plain.merit = MeritKind::kStationarityOnly;
  }
  MonteCarloOptions mc;
  mc.jobs = options.jobs;
  mc.progress = options.progress;
  AblationResult out;
  mc.variant = "full";
  out.full = run_monte_carlo(scenario_config, trials, seed, full, mc);
  mc.variant = "plain";
  out.plain = run_monte_carlo(scenario_config, trials, seed, plain, mc);
  out.median_stationarity_full = out.full.report.median_stationarity;
  out.median_stationarity_plain = out.plain.report.median_stationarity;
  return out;
}

}  // namespace dgsqp::harness
