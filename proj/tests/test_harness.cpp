#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <regex>
#include <sstream>

#include "dgsqp/harness/artifacts.hpp"
#include "dgsqp/harness/config.hpp"
#include "dgsqp/harness/montecarlo.hpp"

using namespace dgsqp;
using namespace dgsqp::harness;
namespace fs = std::filesystem;

namespace {

scenarios::ScenarioConfig small_racing(scenarios::ScenarioKind kind = scenarios::ScenarioKind::kRacing) {
  auto cfg = scenarios::ScenarioConfig::defaults(kind);
  cfg.track.turn_angle_deg = 45;
  cfg.horizon = 8;
  return cfg;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("dgsqp_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DGSQP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TrialRecord synthetic(int trial, const std::string& status, double violation) {
  TrialRecord r;
  r.trial = trial;
  r.seed = 1000 + trial;
  r.scenario = "racing/theta=90/N=15";
  r.variant = "dgsqp";
  r.status = status;
  r.iterations = trial % 50;
  r.qp_solves = trial % 70;
  r.wall_time = 0.01 * trial + 1.0 / 3.0;
  r.stationarity = std::pow(10.0, -(trial % 9)) / 7.0;
  r.max_violation = violation;
  r.complementarity = 1e-5 * trial;
  r.relaxed_steps = trial % 3;
  return r;
}

void expect_same_outcome(const TrialRecord& a, const TrialRecord& b) {
  EXPECT_EQ(a.trial, b.trial);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.status, b.status);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.qp_solves, b.qp_solves);
  EXPECT_EQ(a.stationarity, b.stationarity);
  EXPECT_EQ(a.max_violation, b.max_violation);
  EXPECT_EQ(a.complementarity, b.complementarity);
  EXPECT_EQ(a.relaxed_steps, b.relaxed_steps);
  EXPECT_EQ(a.final_u, b.final_u);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t q = 0; q < a.trace.size(); ++q) {
    EXPECT_EQ(a.trace[q].merit, b.trace[q].merit);
    EXPECT_EQ(a.trace[q].alpha, b.trace[q].alpha);
  }
}

}  // namespace

TEST(MonteCarlo, ZeroTrialsGiveEmptyReport) {
  const auto mc = run_monte_carlo(small_racing(), 0, 1, SolverConfig{});
  EXPECT_TRUE(mc.records.empty());
  EXPECT_EQ(mc.report.trials, 0);
  EXPECT_EQ(mc.report.converged + mc.report.failed + mc.report.max_iterations +
                mc.report.converged_relative,
            0);
  EXPECT_TRUE(mc.report.status_counts.empty());
  EXPECT_THROW(run_monte_carlo(small_racing(), -1, 1, SolverConfig{}), ConfigError);
}

TEST(MonteCarlo, DeterministicAcrossRunsAndWorkerCounts) {
  MonteCarloOptions serial, parallel;
  parallel.jobs = 3;
  const auto a = run_monte_carlo(small_racing(), 4, 42, SolverConfig{}, serial);
  const auto b = run_monte_carlo(small_racing(), 4, 42, SolverConfig{}, serial);
  const auto c = run_monte_carlo(small_racing(), 4, 42, SolverConfig{}, parallel);
  ASSERT_EQ(a.records.size(), 4u);
  for (int t = 0; t < 4; ++t) {
    expect_same_outcome(a.records[t], b.records[t]);
    expect_same_outcome(a.records[t], c.records[t]);
  }
  const auto d = run_monte_carlo(small_racing(), 4, 43, SolverConfig{}, serial);
  EXPECT_NE(a.records[0].initial_state, d.records[0].initial_state);
}

TEST(MonteCarlo, CategoriesAreExhaustive) {
  const auto mc = run_monte_carlo(small_racing(), 5, 7, SolverConfig{});
  const auto& r = mc.report;
  EXPECT_EQ(r.converged + r.converged_relative + r.failed + r.max_iterations, r.trials);
  int total = 0;
  for (const auto& [status, n] : r.status_counts) total += n;
  EXPECT_EQ(total, r.trials);
}

TEST(MonteCarlo, TrialExceptionsBecomeHarnessErrors) {
  auto cfg = small_racing();
  cfg.sampling.clearance = 100.0;  // no start can satisfy it
  const auto mc = run_monte_carlo(cfg, 2, 1, SolverConfig{});
  ASSERT_EQ(mc.records.size(), 2u);
  for (const auto& rec : mc.records) {
    EXPECT_EQ(rec.status, kHarnessError);
    EXPECT_FALSE(rec.error.empty());
  }
  EXPECT_EQ(mc.report.failed, 2);
  EXPECT_TRUE(mc.report.violation_failure.empty());
}

TEST(Summarize, CategoryMapping) {
  std::vector<TrialRecord> recs = {
      synthetic(0, "converged-kkt", 0.0),    synthetic(1, "converged-relative", 1e-3),
      synthetic(2, "max-iterations", 2e-4),  synthetic(3, "max-iterations", 4e-4),
      synthetic(4, "diverged", 1.0),         synthetic(5, "qp-infeasible", 0.5),
      synthetic(6, "line-search-failure", 0.0)};
  const auto r = summarize(recs);
  EXPECT_EQ(r.converged, 1);
  EXPECT_EQ(r.converged_relative, 1);
  EXPECT_EQ(r.max_iterations, 2);
  EXPECT_EQ(r.failed, 3);
  EXPECT_DOUBLE_EQ(r.median_violation_max_iterations, 3e-4);
  EXPECT_EQ(r.violation_success.size(), 1u);
  EXPECT_EQ(r.violation_failure.size(), 6u);
  EXPECT_DOUBLE_EQ(r.mean_time, recs[0].wall_time);
}

TEST(Ablation, ControlArmsGiveIdenticalMedians) {
  AblationOptions opts;
  opts.ablate = false;
  const auto ab = run_ablation(small_racing(scenarios::ScenarioKind::kRacingBlocking), 3, 5,
                               SolverConfig{}, opts);
  EXPECT_EQ(ab.median_stationarity_full, ab.median_stationarity_plain);
  EXPECT_EQ(ab.full.records[0].variant, "full");
  EXPECT_EQ(ab.plain.records[0].variant, "plain");
  EXPECT_THROW(run_ablation(small_racing(), 1, 1), ConfigError);
}

TEST(Csv, EmptyReportIsHeaderOnly) {
  const std::string text = trials_csv({});
  EXPECT_EQ(text, std::string(kTrialsHeader) + "\n");
  EXPECT_TRUE(parse_trials_csv(text).empty());
  EXPECT_EQ(csv_split(kTrialsHeader).size(), 12u);
}

TEST(Csv, RoundTripPreservesFields) {
  std::vector<TrialRecord> recs;
  for (int t = 0; t < 20; ++t) recs.push_back(synthetic(t, "max-iterations", std::exp(-t) / 3.0));
  recs[3].scenario = "odd, \"quoted\" name";
  recs[4].max_violation = 1e-300;
  recs[5].wall_time = 123456.78901234567;
  const auto back = parse_trials_csv(trials_csv(recs));
  ASSERT_EQ(back.size(), recs.size());
  auto close12 = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
  };
  for (std::size_t i = 0; i < recs.size(); ++i) {
    EXPECT_EQ(back[i].trial, recs[i].trial);
    EXPECT_EQ(back[i].seed, recs[i].seed);
    EXPECT_EQ(back[i].scenario, recs[i].scenario);
    EXPECT_EQ(back[i].status, recs[i].status);
    EXPECT_EQ(back[i].iterations, recs[i].iterations);
    EXPECT_EQ(back[i].qp_solves, recs[i].qp_solves);
    EXPECT_EQ(back[i].relaxed_steps, recs[i].relaxed_steps);
    EXPECT_TRUE(close12(back[i].wall_time, recs[i].wall_time));
    EXPECT_TRUE(close12(back[i].stationarity, recs[i].stationarity));
    EXPECT_TRUE(close12(back[i].max_violation, recs[i].max_violation));
    EXPECT_TRUE(close12(back[i].complementarity, recs[i].complementarity));
  }
}

TEST(Csv, MalformedInputThrows) {
  EXPECT_THROW(parse_trials_csv(""), Error);
  EXPECT_THROW(parse_trials_csv(std::string(kTrialsHeader) + "\n1,2,3\n"), Error);
}

TEST(Svg, TrajectoryHasOnePathAndNPlusOneCirclesPerAgent) {
  const auto sc = scenarios::build_scenario(small_racing());
  const DynamicGame game = sc.build_game(sc.sample_initial_state(1, 0));
  const auto result = solve(game, sc.initial_guess(game));
  ASSERT_EQ(result.status, SolveStatus::kConvergedKkt);
  const std::string svg = trajectory_svg(sc, game, result.final.u);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_EQ(count_of(svg, "class=\"agent-path\""), 2);
  EXPECT_EQ(count_of(svg, "class=\"agent-circle\""), 2 * (game.horizon() + 1));
}

TEST(Svg, HistogramCountsMatchNonzeroViolations) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> expo(-14, 1);
  std::vector<TrialRecord> recs;
  const char* statuses[] = {"converged-kkt", "max-iterations", "diverged", "line-search-failure"};
  for (int t = 0; t < 100; ++t) {
    const double v = t % 7 == 0 ? 0.0 : std::pow(10.0, expo(rng));
    recs.push_back(synthetic(t, statuses[t % 4], v));
  }
  const auto report = summarize(recs);
  const std::string svg = violation_histogram_svg(report);
  std::regex count_re("class=\"bin-(success|failure)\" data-count=\"(\\d+)\"");
  int total = 0;
  for (std::sregex_iterator it(svg.begin(), svg.end(), count_re), end; it != end; ++it) {
    total += std::stoi((*it)[2]);
  }
  int nonzero = 0;
  for (const auto& r : parse_trials_csv(trials_csv(recs))) nonzero += r.max_violation > 0;
  EXPECT_EQ(total, nonzero);
}

TEST(Svg, BoxPlotReportsMedians) {
  const std::string svg = stationarity_boxplot_svg({{"a", {1e-3, 1e-4, 1e-2}}, {"b", {3.0, 5.0}}});
  EXPECT_EQ(count_of(svg, "class=\"box\""), 2);
  EXPECT_NE(svg.find("data-median=\"0.001\""), std::string::npos);
  EXPECT_NE(svg.find("data-median=\"4\""), std::string::npos);
}

TEST(Artifacts, EmitWritesFiles) {
  const fs::path dir = scratch_dir("emit") / "nested";
  std::vector<TrialRecord> recs = {synthetic(0, "converged-kkt", 0.0)};
  emit_artifacts(summarize(recs), recs, dir, {{"note", "x"}});
  EXPECT_TRUE(fs::exists(dir / "trials.csv"));
  EXPECT_TRUE(fs::exists(dir / "violations.svg"));
  const auto summary = json::parse(read_file(dir / "summary.json"));
  EXPECT_EQ(summary["report"]["conv"], 1);
  EXPECT_EQ(summary["note"], "x");
  fs::remove_all(dir.parent_path());
}

TEST(Artifacts, UnwritableDirectoryIsIoError) {
  const fs::path dir = scratch_dir("blocked");
  write_text(dir / "file", "x");
  EXPECT_THROW(ensure_directory(dir / "file" / "sub"), IoError);
  EXPECT_THROW(write_text(dir / "missing" / "a.txt", "x"), IoError);
  fs::remove_all(dir);
}

TEST(Config, RoundTrip) {
  ExperimentConfig cfg;
  cfg.scenario = scenarios::ScenarioConfig::defaults(scenarios::ScenarioKind::kRampMerge);
  cfg.scenario.ramp.perturb_v = 0.25;
  cfg.solver.max_iterations = 33;
  cfg.solver.line_search = LineSearchKind::kBacktracking;
  cfg.solver.merit = MeritKind::kStationarityOnly;
  cfg.trials = 7;
  cfg.seed = 99;
  cfg.jobs = 2;
  const ExperimentConfig back = parse_experiment(experiment_to_json(cfg));
  EXPECT_EQ(back.scenario.kind, scenarios::ScenarioKind::kRampMerge);
  EXPECT_EQ(back.scenario.horizon, 20);
  EXPECT_EQ(back.scenario.ramp.perturb_v, 0.25);
  EXPECT_EQ(back.solver.max_iterations, 33);
  EXPECT_EQ(back.solver.line_search, LineSearchKind::kBacktracking);
  EXPECT_EQ(back.solver.merit, MeritKind::kStationarityOnly);
  EXPECT_EQ(back.trials, 7);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.jobs, 2);
  EXPECT_EQ(experiment_to_json(back), experiment_to_json(cfg));
}

TEST(Config, KindSelectsDefaults) {
  const auto cfg = parse_experiment(
      json::parse(R"({"schema_version": 1, "scenario": {"kind": "racing-blocking", "horizon": 12}})"));
  EXPECT_EQ(cfg.scenario.kind, scenarios::ScenarioKind::kRacingBlocking);
  EXPECT_EQ(cfg.scenario.horizon, 12);
  EXPECT_GT(cfg.scenario.costs.blocking, 0.0);
}

TEST(Config, Errors) {
  auto bad = [](const char* text) { return parse_experiment(json::parse(text)); };
  EXPECT_THROW(bad(R"({})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 2})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "bogus": 1})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "solver": {"max_iterations": "many"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "solver": {"line_search": "zigzag"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "solver": {"merit_rho": 2}})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "scenario": {"kind": "rally"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "scenario": {"track": {"widht": 2}}})"), ConfigError);
  EXPECT_THROW(bad(R"({"schema_version": 1, "experiment": {"jobs": 0}})"), ConfigError);
  EXPECT_THROW(load_experiment("/nonexistent/dir/config.json"), IoError);
  const fs::path dir = scratch_dir("cfg");
  write_text(dir / "broken.json", "{ not json");
  EXPECT_THROW(load_experiment((dir / "broken.json").string()), ConfigError);
  fs::remove_all(dir);
}

TEST(Cli, MonteCarloWritesArtifacts) {
  const fs::path dir = scratch_dir("cli_mc");
  const int code = run_cli("montecarlo --scenario racing --turn-angle 45 --horizon 8 --trials 2 "
                           "--quiet --out " + (dir / "out").string());
  ASSERT_EQ(code, 0);
  const auto rows = parse_trials_csv(read_file(dir / "out" / "trials.csv"));
  EXPECT_EQ(rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "out" / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "out" / "violations.svg"));
  fs::remove_all(dir);
}

TEST(Cli, SolveWritesTraceAndTrajectory) {
  const fs::path dir = scratch_dir("cli_solve");
  ASSERT_EQ(run_cli("solve --scenario racing --turn-angle 45 --horizon 8 --max-iters 30 --out " +
                    dir.string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "trajectory.svg"));
  const auto summary = json::parse(read_file(dir / "summary.json"));
  EXPECT_TRUE(summary.contains("status"));
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli_codes");
  write_text(dir / "broken.json", "{ not json");
  write_text(dir / "unknown.json", R"({"schema_version": 1, "solver": {"tolerance": 1}})");
  write_text(dir / "blocker", "x");
  const std::string out = " --out " + (dir / "o").string();
  EXPECT_EQ(run_cli("montecarlo --config " + (dir / "broken.json").string() + out), 2);
  EXPECT_EQ(run_cli("montecarlo --config " + (dir / "unknown.json").string() + out), 2);
  EXPECT_EQ(run_cli("montecarlo --line-search zigzag --trials 1" + out), 2);
  EXPECT_EQ(run_cli("montecarlo --trials 1"), 2);  // --out missing
  EXPECT_EQ(run_cli("bogus-command"), 2);
  EXPECT_EQ(run_cli("montecarlo --config " + (dir / "missing.json").string() + out), 3);
  EXPECT_EQ(run_cli("montecarlo --trials 0 --out " + (dir / "blocker" / "sub").string()), 3);
  fs::remove_all(dir);
}
