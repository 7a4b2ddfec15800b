#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dgsqp/errors.hpp"
#include "dgsqp/game.hpp"
#include "dgsqp/scenarios/bicycle.hpp"
#include "dgsqp/scenarios/pid.hpp"
#include "dgsqp/scenarios/terms.hpp"
#include "dgsqp/scenarios/track.hpp"

namespace dgsqp::scenarios {

enum class ScenarioKind { kRampMerge, kRacing, kRacingBlocking };

inline std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kRampMerge: return "ramp-merge";
    case ScenarioKind::kRacing: return "racing";
    case ScenarioKind::kRacingBlocking: return "racing-blocking";
  }
  return "unknown";
}

inline ScenarioKind scenario_kind_from_string(std::string_view s) {
  if (s == "ramp-merge") return ScenarioKind::kRampMerge;
  if (s == "racing") return ScenarioKind::kRacing;
  if (s == "racing-blocking") return ScenarioKind::kRacingBlocking;
  throw ConfigError("unknown scenario kind '" + std::string(s) + "'");
}

struct RacingTrackParams {
  double turn_angle_deg = 90.0;
  double radius = 4.5;
  double straight = 3.0;
  double width = 1.0;
  double curvature_blend = 0.05;
};

// Head-to-head start: agent 0 in front, agent 1 behind within
// `max_gap_car_lengths` car lengths of arc length.
struct RacingSampling {
  double front_s_min = 0.5;
  double front_s_max = 1.0;
  double lateral_max = 0.35;
  double max_gap_car_lengths = 1.2;
  /// Extra clearance over r_i + r_j required between the two centers.
  double clearance = 0.02;
  double speed_min = 1.0;
  double speed_max = 2.0;
  /// max(v) / min(v) upper bound.
  double max_speed_ratio = 1.25;
};

struct RampMergeParams {
  double road_length = 40.0;
  double lane_width = 3.7;
  double junction_s = 15.0;
  double approach_deg = 10.0;
  /// Width of the softplus corner where the ramp edge meets the road edge.
  double junction_smoothing = 0.5;
  double road_speed = 10.0;
  double ramp_speed = 8.0;
  double leader_s = 14.0;
  double follower_s = 2.0;
  double ramp_s = 7.0;
  double perturb_s = 1.0;
  double perturb_v = 0.5;
  /// Lane and speed tracking weights applied to every agent.
  double lane_weight = 0.5;
  double speed_weight = 1.0;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::kRacing;
  int horizon = 15;
  double dt = 0.1;
  VehicleParams vehicle;
  CostWeights costs;
  PidGains pid;
  RacingTrackParams track;
  RacingSampling sampling;
  RampMergeParams ramp;

  static ScenarioConfig defaults(ScenarioKind kind) {
    ScenarioConfig c;
    c.kind = kind;
    if (kind == ScenarioKind::kRampMerge) {
      c.horizon = 20;
      c.vehicle = VehicleParams{1.5, 1.5, 2.0, 3.0, 0.5, 1.5, 0.2};
      c.costs.progress = 1.0;
      c.costs.competition = 0.0;
      c.pid = PidGains{1.0, 0.05, 0.5};
    } else if (kind == ScenarioKind::kRacingBlocking) {
      c.costs.blocking = 5.0;
    }
    return c;
  }

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("invalid scenario config: ") + what);
    };
    require(horizon >= 1, "horizon must be >= 1");
    require(dt > 0, "dt must be positive");
    require(vehicle.lf > 0 && vehicle.lr > 0 && vehicle.radius > 0,
            "vehicle geometry must be positive");
    require(vehicle.accel_max > 0 && vehicle.steer_max > 0 &&
                vehicle.accel_rate_max > 0 && vehicle.steer_rate_max > 0,
            "input bounds must be positive");
    require((costs.input_weight.array() > 0).all() && (costs.rate_weight.array() > 0).all(),
            "R and R_d must be positive definite");
    require(costs.progress >= 0 && costs.competition >= 0, "c_p and c_c must be >= 0");
    if (kind != ScenarioKind::kRampMerge) {
      require(costs.progress > 0 && costs.competition > 0, "racing needs c_p, c_c > 0");
      require(track.width > 0 && track.radius > 0 && track.straight > 0,
              "track geometry must be positive");
      require(sampling.front_s_min <= sampling.front_s_max &&
                  sampling.speed_min > 0 && sampling.speed_min <= sampling.speed_max &&
                  sampling.max_speed_ratio >= 1 && sampling.lateral_max >= 0,
              "racing sampling ranges invalid");
    }
    if (kind == ScenarioKind::kRacingBlocking) require(costs.blocking > 0, "c_b must be > 0");
    if (kind == ScenarioKind::kRampMerge) {
      require(ramp.road_length > 0 && ramp.lane_width > 0 && ramp.junction_smoothing > 0,
              "ramp geometry must be positive");
      require(ramp.perturb_s >= 0 && ramp.perturb_v >= 0, "perturbations must be >= 0");
    }
  }
};

/// splitmix64 finalizer; mixes (seed, trial) into an independent stream seed.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (trial + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/**
 * A configured benchmark scenario: geometry, agents and the game factory.
 * Builders are pure; sampling uses one generator per trial.
 */
class Scenario {
 public:
  Scenario(ScenarioConfig config, std::shared_ptr<const Track> track)
      : config_(std::move(config)), track_(std::move(track)) {
    config_.validate();
    const int agents = config_.kind == ScenarioKind::kRampMerge ? 3 : 2;
    vehicles_.assign(agents, config_.vehicle);
    gains_.assign(agents, config_.pid);
    bounds_.assign(agents, LateralBounds::symmetric(track_->width()));
    if (config_.kind == ScenarioKind::kRampMerge) {
      const auto& r = config_.ramp;
      bounds_[2].ramp_slope = std::tan(r.approach_deg * std::numbers::pi / 180.0);
      bounds_[2].ramp_junction = r.junction_s;
      bounds_[2].ramp_smoothing = r.junction_smoothing;
    }
  }

  const ScenarioConfig& config() const { return config_; }
  const Track& track() const { return *track_; }
  std::shared_ptr<const Track> track_ptr() const { return track_; }
  int num_agents() const { return static_cast<int>(vehicles_.size()); }
  const std::vector<VehicleParams>& vehicles() const { return vehicles_; }
  const LateralBounds& bounds(int agent) const { return bounds_[agent]; }

  /// Lane center of the main road's right lane (ramp merge target).
  double right_lane_center() const { return -config_.ramp.lane_width / 2; }

  /// Nominal initial joint state (ramp merge) or a centered start (racing).
  Vector nominal_state() const {
    if (config_.kind == ScenarioKind::kRampMerge) return ramp_state(0, 0, 0, 0, 0, 0);
    const auto& smp = config_.sampling;
    const double v = 0.5 * (smp.speed_min + smp.speed_max);
    const double s0 = smp.front_s_max;
    const double gap = 0.5 * smp.max_gap_car_lengths * config_.vehicle.length();
    return stack({frenet_state(*track_, s0, 0.25, v), frenet_state(*track_, s0 - gap, -0.25, v)});
  }

  /// Initial state of trial `trial` under `seed`, independent of call order.
  Vector sample_initial_state(std::uint64_t seed, std::uint64_t trial) const {
    std::mt19937_64 rng(trial_seed(seed, trial));
    if (config_.kind == ScenarioKind::kRampMerge) {
      const auto& r = config_.ramp;
      auto draw = [&](double mag) {
        return mag > 0 ? std::uniform_real_distribution<double>(-mag, mag)(rng) : 0.0;
      };
      double d[6];
      for (int i = 0; i < 3; ++i) {
        d[2 * i] = draw(r.perturb_s);
        d[2 * i + 1] = draw(r.perturb_v);
      }
      return ramp_state(d[0], d[1], d[2], d[3], d[4], d[5]);
    }
    const auto& smp = config_.sampling;
    const double reach = 2 * config_.vehicle.radius + smp.clearance;
    const double max_gap = smp.max_gap_car_lengths * config_.vehicle.length();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    for (int attempt = 0; attempt < 10000; ++attempt) {
      const double s_front = uniform(smp.front_s_min, smp.front_s_max);
      const double s_back = s_front - uniform(0.0, max_gap);
      const double ey_front = uniform(-smp.lateral_max, smp.lateral_max);
      const double ey_back = uniform(-smp.lateral_max, smp.lateral_max);
      const double v_front = uniform(smp.speed_min, smp.speed_max);
      const double v_back = v_front * std::exp(uniform(-1.0, 1.0) * std::log(smp.max_speed_ratio));
      Vector x = stack({frenet_state(*track_, s_front, ey_front, v_front),
                        frenet_state(*track_, s_back, ey_back, v_back)});
      const Eigen::Vector2d p0(x(kPx), x(kPy));
      const Eigen::Vector2d p1(x(kStateDim + kPx), x(kStateDim + kPy));
      if ((p0 - p1).norm() < reach) continue;
      return x;
    }
    throw ConfigError("racing sampler could not find a collision-free start");
  }

  DynamicGame build_game(const Vector& x0) const {
    const int agents = num_agents();
    GameDefinition def;
    def.horizon = config_.horizon;
    def.state_dims.assign(agents, kStateDim);
    def.input_dims.assign(agents, kInputDim);
    def.dynamics = joint_bicycle_dynamics(vehicles_, track_, config_.dt);
    def.initial_state = x0;
    def.previous_input = Vector::Zero(agents * kInputDim);
    for (int i = 0; i < agents; ++i) {
      const CostWeights w = agent_weights(i);
      def.stage_costs.push_back(racing_stage_cost(i, w));
      def.terminal_costs.push_back(racing_terminal_cost(i, agents, w));
    }
    for (int i = 0; i < agents; ++i) {
      def.stage_constraints.push_back(input_box_block(i, vehicles_[i]));
      def.stage_constraints.push_back(input_rate_block(i, vehicles_[i]));
      auto [stage, terminal] = boundary_blocks(i, bounds_[i]);
      def.stage_constraints.push_back(std::move(stage));
      def.terminal_constraints.push_back(std::move(terminal));
    }
    for (int i = 0; i < agents; ++i) {
      for (int j = i + 1; j < agents; ++j) {
        auto [stage, terminal] = collision_blocks(i, j, vehicles_[i].radius, vehicles_[j].radius);
        def.stage_constraints.push_back(std::move(stage));
        def.terminal_constraints.push_back(std::move(terminal));
      }
    }
    return DynamicGame(std::move(def));
  }

  /// PID references: hold the initial speed and lateral offset (racing), or
  /// the road speed in the right lane (ramp merge).
  std::vector<AgentReference> references(const Vector& x0) const {
    std::vector<AgentReference> refs;
    for (int i = 0; i < num_agents(); ++i) {
      if (config_.kind == ScenarioKind::kRampMerge) {
        refs.push_back({config_.ramp.road_speed, right_lane_center()});
      } else {
        refs.push_back({x0(i * kStateDim + kV), x0(i * kStateDim + kEy)});
      }
    }
    return refs;
  }

  DecisionVector initial_guess(const DynamicGame& game) const {
    return pid_initial_guess(game, vehicles_, references(game.initial_state()), gains_);
  }

  CostWeights agent_weights(int agent) const {
    CostWeights w = config_.costs;
    if (config_.kind == ScenarioKind::kRampMerge) {
      w.lane_weight = config_.ramp.lane_weight;
      w.lane_ref = right_lane_center();
      w.speed_weight = config_.ramp.speed_weight;
      w.speed_ref = config_.ramp.road_speed;
    }
    if (config_.kind == ScenarioKind::kRacingBlocking && agent == 0) {
      w.blocking_partner = 1;
    } else {
      w.blocking_partner = -1;
      w.blocking = 0.0;
    }
    return w;
  }

 private:
  static Vector stack(const std::vector<Vector>& parts) {
    Vector out(static_cast<Eigen::Index>(parts.size()) * kStateDim);
    for (std::size_t i = 0; i < parts.size(); ++i) {
      out.segment(static_cast<Eigen::Index>(i) * kStateDim, kStateDim) = parts[i];
    }
    return out;
  }

  // Agents: 0 = leader on the road, 1 = follower on the road, 2 = ramp.
  Vector ramp_state(double ds0, double dv0, double ds1, double dv1, double ds2,
                    double dv2) const {
    const auto& r = config_.ramp;
    const double lane = right_lane_center();
    const double ramp_s = r.ramp_s + ds2;
    // Midway between the road edge and the ramp's outer edge.
    const double ramp_ey = 0.5 * (-r.lane_width + bounds_[2].lower_at(ramp_s));
    const double heading = r.approach_deg * std::numbers::pi / 180.0;
    return stack({frenet_state(*track_, r.leader_s + ds0, lane, r.road_speed + dv0),
                  frenet_state(*track_, r.follower_s + ds1, lane, r.road_speed + dv1),
                  frenet_state(*track_, ramp_s, ramp_ey, r.ramp_speed + dv2, heading)});
  }

  ScenarioConfig config_;
  std::shared_ptr<const Track> track_;
  std::vector<VehicleParams> vehicles_;
  std::vector<PidGains> gains_;
  std::vector<LateralBounds> bounds_;
};

/// Two identical agents on a straight-turn-straight track.
inline Scenario build_racing(ScenarioConfig config, std::shared_ptr<const Track> track) {
  if (config.kind == ScenarioKind::kRampMerge) {
    throw ConfigError("build_racing: scenario kind must be racing or racing-blocking");
  }
  return Scenario(std::move(config), std::move(track));
}

inline Scenario build_racing(ScenarioConfig config) {
  const auto& t = config.track;
  auto track = std::make_shared<const Track>(Track::turn(
      t.turn_angle_deg * std::numbers::pi / 180.0, t.radius, t.straight, t.width,
      t.curvature_blend));
  return build_racing(std::move(config), std::move(track));
}

/// Two agents on a straight two-lane road and one on a merging ramp.
inline Scenario build_ramp_merge(ScenarioConfig config) {
  if (config.kind != ScenarioKind::kRampMerge) {
    throw ConfigError("build_ramp_merge: scenario kind must be ramp-merge");
  }
  auto track = std::make_shared<const Track>(
      Track::straight(config.ramp.road_length, 2 * config.ramp.lane_width));
  return Scenario(std::move(config), std::move(track));
}

inline Scenario build_scenario(ScenarioConfig config) {
  if (config.kind == ScenarioKind::kRampMerge) return build_ramp_merge(std::move(config));
  return build_racing(std::move(config));
}

}  // namespace dgsqp::scenarios
