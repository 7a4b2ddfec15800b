#pragma once

#include <algorithm>
#include <vector>

#include "dgsqp/errors.hpp"
#include "dgsqp/game.hpp"
#include "dgsqp/scenarios/bicycle.hpp"

namespace dgsqp::scenarios {

struct PidGains {
  double speed_kp = 1.5;    // a = kp (v_ref - v)
  double lateral_kp = 0.9;  // on e_y
  double heading_kd = 1.0;  // on e_psi
};

struct AgentReference {
  double speed = 0.0;
  double lateral = 0.0;
};

/**
 * Rolls the game forward under decoupled speed and lateral feedback loops.
 *
 *   a     = kp_v (v_ref - v)
 *   delta = kp_y (ey_ref - e_y) - kd_psi e_psi
 *
 * Each command is clipped to the input box and to the rate box around the
 * previous command, so the returned inputs satisfy both input constraints.
 */
inline DecisionVector pid_initial_guess(const DynamicGame& game,
                                        const std::vector<VehicleParams>& vehicles,
                                        const std::vector<AgentReference>& refs,
                                        const std::vector<PidGains>& gains) {
  const int agents = game.num_agents();
  if (static_cast<int>(vehicles.size()) != agents ||
      static_cast<int>(refs.size()) != agents ||
      static_cast<int>(gains.size()) != agents) {
    throw ConfigError("pid_initial_guess: one vehicle, reference and gain set per agent");
  }
  for (int i = 0; i < agents; ++i) {
    if (game.input_dim(i) != kInputDim || game.state_dim(i) != kStateDim) {
      throw ConfigError("pid_initial_guess: bicycle agents expected");
    }
  }

  DecisionVector guess = DecisionVector::zeros(game);
  Vector x = game.initial_state();
  Vector u_prev = game.previous_input();
  const auto& f = game.definition().dynamics;
  for (int k = 0; k < game.horizon(); ++k) {
    Vector u(game.input_dim());
    for (int i = 0; i < agents; ++i) {
      const auto& veh = vehicles[i];
      const int xo = i * kStateDim, uo = i * kInputDim;
      double a = gains[i].speed_kp * (refs[i].speed - x(xo + kV));
      double d = gains[i].lateral_kp * (refs[i].lateral - x(xo + kEy)) -
                 gains[i].heading_kd * x(xo + kEpsi);
      a = std::clamp(a, u_prev(uo + kAccel) - veh.accel_rate_max,
                     u_prev(uo + kAccel) + veh.accel_rate_max);
      d = std::clamp(d, u_prev(uo + kSteer) - veh.steer_rate_max,
                     u_prev(uo + kSteer) + veh.steer_rate_max);
      u(uo + kAccel) = std::clamp(a, -veh.accel_max, veh.accel_max);
      u(uo + kSteer) = std::clamp(d, -veh.steer_max, veh.steer_max);
      guess.input(i, k) = u.segment(uo, kInputDim);
    }
    x = f(k, x, u, false).next;
    if (!x.allFinite()) throw RolloutDivergenceError(k + 1, "PID rollout diverged");
    u_prev = u;
  }
  return guess;
}

}  // namespace dgsqp::scenarios
