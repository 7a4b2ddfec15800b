#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "json.hpp"

#include "dgsqp/errors.hpp"
#include "dgsqp/scenarios/scenario.hpp"
#include "dgsqp/solver.hpp"

namespace dgsqp::harness {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Thrown when a file cannot be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  scenarios::ScenarioConfig scenario = scenarios::ScenarioConfig::defaults(scenarios::ScenarioKind::kRacing);
  SolverConfig solver;
  int trials = 20;
  std::uint64_t seed = 1;
  int jobs = 1;
};

namespace detail {

// Typed access to the members of one JSON object.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  /// Rejects keys that no getter asked for.
  void done() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(path_ + "." + it.key() + ": unknown key");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path_ + "." + key + ": " + e.what());
    }
  }

  void get_vec2(const char* key, Eigen::Vector2d& out) {
    seen_.insert(key);
    if (!obj_.contains(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ConfigError(path_ + "." + key + ": expected two numbers");
    }
    out = {v[0].get<double>(), v[1].get<double>()};
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_.at(key) : nullptr;
  }

  std::string path(const char* key) const { return path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline LineSearchKind line_search_from_string(const std::string& s) {
  if (s == "watchdog") return LineSearchKind::kWatchdog;
  if (s == "backtracking") return LineSearchKind::kBacktracking;
  throw ConfigError("unknown line search '" + s + "'");
}

inline MeritKind merit_from_string(const std::string& s) {
  if (s == "full") return MeritKind::kFull;
  if (s == "stationarity") return MeritKind::kStationarityOnly;
  throw ConfigError("unknown merit '" + s + "'");
}

inline void read_solver(const json& j, SolverConfig& c, const std::string& path = "solver") {
  detail::Reader r(j, path);
  r.get("eps_stationarity", c.eps_stationarity);
  r.get("eps_feasibility", c.eps_feasibility);
  r.get("eps_complementarity", c.eps_complementarity);
  r.get("max_iterations", c.max_iterations);
  r.get("divergence_threshold", c.divergence_threshold);
  r.get("hessian_regularization", c.hessian_regularization);
  r.get("merit_rho", c.merit_rho);
  r.get("watchdog_steps", c.watchdog_steps);
  r.get("sufficient_decrease", c.sufficient_decrease);
  r.get("backtracking_tau", c.backtracking_tau);
  r.get("alpha_min", c.alpha_min);
  r.get("relative_tol", c.relative_tol);
  r.get("relative_patience", c.relative_patience);
  r.get("dual_init_regularization", c.dual_init_regularization);
  r.get("exact_hessian", c.exact_hessian);
  r.get("fd_step", c.fd_step);
  std::string ls, merit;
  r.get("line_search", ls);
  if (!ls.empty()) c.line_search = line_search_from_string(ls);
  r.get("merit", merit);
  if (!merit.empty()) c.merit = merit_from_string(merit);
  if (const json* qp = r.child("qp")) {
    detail::Reader q(*qp, r.path("qp"));
    q.get("tolerance", c.qp.tolerance);
    q.get("max_iterations", c.qp.max_iterations);
    q.get("stall_iterations", c.qp.stall_iterations);
    q.get("stall_threshold", c.qp.stall_threshold);
    q.get("polish", c.qp.polish);
    q.done();
  }
  r.done();
}

inline json solver_to_json(const SolverConfig& c) {
  return {
      {"eps_stationarity", c.eps_stationarity},
      {"eps_feasibility", c.eps_feasibility},
      {"eps_complementarity", c.eps_complementarity},
      {"max_iterations", c.max_iterations},
      {"divergence_threshold", c.divergence_threshold},
      {"hessian_regularization", c.hessian_regularization},
      {"merit_rho", c.merit_rho},
      {"watchdog_steps", c.watchdog_steps},
      {"sufficient_decrease", c.sufficient_decrease},
      {"backtracking_tau", c.backtracking_tau},
      {"alpha_min", c.alpha_min},
      {"relative_tol", c.relative_tol},
      {"relative_patience", c.relative_patience},
      {"dual_init_regularization", c.dual_init_regularization},
      {"exact_hessian", c.exact_hessian},
      {"fd_step", c.fd_step},
      {"line_search", c.line_search == LineSearchKind::kWatchdog ? "watchdog" : "backtracking"},
      {"merit", c.merit == MeritKind::kFull ? "full" : "stationarity"},
      {"qp",
       {{"tolerance", c.qp.tolerance},
        {"max_iterations", c.qp.max_iterations},
        {"stall_iterations", c.qp.stall_iterations},
        {"stall_threshold", c.qp.stall_threshold},
        {"polish", c.qp.polish}}},
  };
}

/// Scenario section; defaults come from the scenario kind.
inline scenarios::ScenarioConfig read_scenario(const json& j, const std::string& path = "scenario") {
  using namespace scenarios;
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  ScenarioKind kind = ScenarioKind::kRacing;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw ConfigError(path + ".kind: expected a string");
    kind = scenario_kind_from_string(j.at("kind").get<std::string>());
  }
  ScenarioConfig c = ScenarioConfig::defaults(kind);
  detail::Reader r(j, path);
  std::string kind_name;
  r.get("kind", kind_name);
  r.get("horizon", c.horizon);
  r.get("dt", c.dt);
  if (const json* v = r.child("vehicle")) {
    detail::Reader q(*v, r.path("vehicle"));
    q.get("lf", c.vehicle.lf);
    q.get("lr", c.vehicle.lr);
    q.get("radius", c.vehicle.radius);
    q.get("accel_max", c.vehicle.accel_max);
    q.get("steer_max", c.vehicle.steer_max);
    q.get("accel_rate_max", c.vehicle.accel_rate_max);
    q.get("steer_rate_max", c.vehicle.steer_rate_max);
    q.done();
  }
  if (const json* v = r.child("costs")) {
    detail::Reader q(*v, r.path("costs"));
    q.get_vec2("input_weight", c.costs.input_weight);
    q.get_vec2("rate_weight", c.costs.rate_weight);
    q.get("progress", c.costs.progress);
    q.get("competition", c.costs.competition);
    q.get("competition_sign", c.costs.competition_sign);
    q.get("blocking", c.costs.blocking);
    q.done();
  }
  if (const json* v = r.child("pid")) {
    detail::Reader q(*v, r.path("pid"));
    q.get("speed_kp", c.pid.speed_kp);
    q.get("lateral_kp", c.pid.lateral_kp);
    q.get("heading_kd", c.pid.heading_kd);
    q.done();
  }
  if (const json* v = r.child("track")) {
    detail::Reader q(*v, r.path("track"));
    q.get("turn_angle_deg", c.track.turn_angle_deg);
    q.get("radius", c.track.radius);
    q.get("straight", c.track.straight);
    q.get("width", c.track.width);
    q.get("curvature_blend", c.track.curvature_blend);
    q.done();
  }
  if (const json* v = r.child("sampling")) {
    detail::Reader q(*v, r.path("sampling"));
    q.get("front_s_min", c.sampling.front_s_min);
    q.get("front_s_max", c.sampling.front_s_max);
    q.get("lateral_max", c.sampling.lateral_max);
    q.get("max_gap_car_lengths", c.sampling.max_gap_car_lengths);
    q.get("clearance", c.sampling.clearance);
    q.get("speed_min", c.sampling.speed_min);
    q.get("speed_max", c.sampling.speed_max);
    q.get("max_speed_ratio", c.sampling.max_speed_ratio);
    q.done();
  }
  if (const json* v = r.child("ramp")) {
    detail::Reader q(*v, r.path("ramp"));
    q.get("road_length", c.ramp.road_length);
    q.get("lane_width", c.ramp.lane_width);
    q.get("junction_s", c.ramp.junction_s);
    q.get("approach_deg", c.ramp.approach_deg);
    q.get("junction_smoothing", c.ramp.junction_smoothing);
    q.get("road_speed", c.ramp.road_speed);
    q.get("ramp_speed", c.ramp.ramp_speed);
    q.get("leader_s", c.ramp.leader_s);
    q.get("follower_s", c.ramp.follower_s);
    q.get("ramp_s", c.ramp.ramp_s);
    q.get("perturb_s", c.ramp.perturb_s);
    q.get("perturb_v", c.ramp.perturb_v);
    q.get("lane_weight", c.ramp.lane_weight);
    q.get("speed_weight", c.ramp.speed_weight);
    q.done();
  }
  r.done();
  return c;
}

inline json scenario_to_json(const scenarios::ScenarioConfig& c) {
  const auto vec2 = [](const Eigen::Vector2d& v) { return json::array({v.x(), v.y()}); };
  return {
      {"kind", std::string(scenarios::to_string(c.kind))},
      {"horizon", c.horizon},
      {"dt", c.dt},
      {"vehicle",
       {{"lf", c.vehicle.lf},
        {"lr", c.vehicle.lr},
        {"radius", c.vehicle.radius},
        {"accel_max", c.vehicle.accel_max},
        {"steer_max", c.vehicle.steer_max},
        {"accel_rate_max", c.vehicle.accel_rate_max},
        {"steer_rate_max", c.vehicle.steer_rate_max}}},
      {"costs",
       {{"input_weight", vec2(c.costs.input_weight)},
        {"rate_weight", vec2(c.costs.rate_weight)},
        {"progress", c.costs.progress},
        {"competition", c.costs.competition},
        {"competition_sign", c.costs.competition_sign},
        {"blocking", c.costs.blocking}}},
      {"pid",
       {{"speed_kp", c.pid.speed_kp},
        {"lateral_kp", c.pid.lateral_kp},
        {"heading_kd", c.pid.heading_kd}}},
      {"track",
       {{"turn_angle_deg", c.track.turn_angle_deg},
        {"radius", c.track.radius},
        {"straight", c.track.straight},
        {"width", c.track.width},
        {"curvature_blend", c.track.curvature_blend}}},
      {"sampling",
       {{"front_s_min", c.sampling.front_s_min},
        {"front_s_max", c.sampling.front_s_max},
        {"lateral_max", c.sampling.lateral_max},
        {"max_gap_car_lengths", c.sampling.max_gap_car_lengths},
        {"clearance", c.sampling.clearance},
        {"speed_min", c.sampling.speed_min},
        {"speed_max", c.sampling.speed_max},
        {"max_speed_ratio", c.sampling.max_speed_ratio}}},
      {"ramp",
       {{"road_length", c.ramp.road_length},
        {"lane_width", c.ramp.lane_width},
        {"junction_s", c.ramp.junction_s},
        {"approach_deg", c.ramp.approach_deg},
        {"junction_smoothing", c.ramp.junction_smoothing},
        {"road_speed", c.ramp.road_speed},
        {"ramp_speed", c.ramp.ramp_speed},
        {"leader_s", c.ramp.leader_s},
        {"follower_s", c.ramp.follower_s},
        {"ramp_s", c.ramp.ramp_s},
        {"perturb_s", c.ramp.perturb_s},
        {"perturb_v", c.ramp.perturb_v},
        {"lane_weight", c.ramp.lane_weight},
        {"speed_weight", c.ramp.speed_weight}}},
  };
}

inline ExperimentConfig parse_experiment(const json& j) {
  ExperimentConfig cfg;
  detail::Reader r(j, "config");
  int version = 0;
  r.get("schema_version", version);
  if (version != kSchemaVersion) {
    throw ConfigError("config.schema_version: expected " + std::to_string(kSchemaVersion));
  }
  if (const json* s = r.child("scenario")) cfg.scenario = read_scenario(*s);
  if (const json* s = r.child("solver")) read_solver(*s, cfg.solver);
  if (const json* e = r.child("experiment")) {
    detail::Reader q(*e, "experiment");
    q.get("trials", cfg.trials);
    q.get("seed", cfg.seed);
    q.get("jobs", cfg.jobs);
    q.done();
  }
  r.done();
  if (cfg.trials < 0) throw ConfigError("experiment.trials must be >= 0");
  if (cfg.jobs < 1) throw ConfigError("experiment.jobs must be >= 1");
  cfg.scenario.validate();
  cfg.solver.validate();
  return cfg;
}

inline json experiment_to_json(const ExperimentConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"scenario", scenario_to_json(c.scenario)},
          {"solver", solver_to_json(c.solver)},
          {"experiment", {{"trials", c.trials}, {"seed", c.seed}, {"jobs", c.jobs}}}};
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_experiment(j);
}

}  // namespace dgsqp::harness
