#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "dgsqp/game.hpp"
#include "dgsqp/scenarios/bicycle.hpp"

namespace dgsqp::scenarios {

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

/// (r_i + r_j)^2 - ||p_i - p_j||^2; nonpositive iff the buffers do not overlap.
inline double collision_value(const Eigen::Vector2d& p_i, const Eigen::Vector2d& p_j,
                              double r_i, double r_j) {
  const double reach = r_i + r_j;
  return reach * reach - (p_i - p_j).squaredNorm();
}

/**
 * Lateral limits lower(s) <= e_y <= upper(s). The lower limit can widen before
 * a junction to model a merging lane:
 *   lower(s) = lower - slope * w * softplus((junction - s) / w).
 */
struct LateralBounds {
  double upper = 0.5;
  double lower = -0.5;
  double ramp_slope = 0.0;
  double ramp_junction = 0.0;
  double ramp_smoothing = 0.5;

  static LateralBounds symmetric(double width) { return {width / 2, -width / 2}; }

  double lower_at(double s) const {
    if (ramp_slope == 0.0) return lower;
    const double x = (ramp_junction - s) / ramp_smoothing;
    const double sp = x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    return lower - ramp_slope * ramp_smoothing * sp;
  }
  double lower_derivative(double s) const {
    if (ramp_slope == 0.0) return 0.0;
    const double x = (ramp_junction - s) / ramp_smoothing;
    const double sig = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    return ramp_slope * sig;
  }
};

/// (e_y - upper(s), lower(s) - e_y); both nonpositive inside the road.
inline Eigen::Vector2d boundary_values(double e_y, double s, const LateralBounds& bounds) {
  return {e_y - bounds.upper, bounds.lower_at(s) - e_y};
}

inline StageConstraintBlock input_box_block(int agent, const VehicleParams& vehicle) {
  StageConstraintBlock block;
  block.name = "input_box_" + std::to_string(agent);
  block.count = 4;
  block.eval = [agent, vehicle](int, const Vector& x, const Vector& u, const Vector&,
                                bool derivatives) {
    const int off = agent * kInputDim;
    StageVector c;
    c.values.resize(4);
    c.values << u(off + kAccel) - vehicle.accel_max, -u(off + kAccel) - vehicle.accel_max,
        u(off + kSteer) - vehicle.steer_max, -u(off + kSteer) - vehicle.steer_max;
    if (derivatives) {
      c.dx = Matrix::Zero(4, x.size());
      c.du = Matrix::Zero(4, u.size());
      c.du_prev = Matrix::Zero(4, u.size());
      c.du(0, off + kAccel) = 1.0;
      c.du(1, off + kAccel) = -1.0;
      c.du(2, off + kSteer) = 1.0;
      c.du(3, off + kSteer) = -1.0;
    }
    return c;
  };
  return block;
}

inline StageConstraintBlock input_rate_block(int agent, const VehicleParams& vehicle) {
  StageConstraintBlock block;
  block.name = "input_rate_" + std::to_string(agent);
  block.count = 4;
  block.eval = [agent, vehicle](int, const Vector& x, const Vector& u,
                                const Vector& u_prev, bool derivatives) {
    const int off = agent * kInputDim;
    const double da = u(off + kAccel) - u_prev(off + kAccel);
    const double dd = u(off + kSteer) - u_prev(off + kSteer);
    StageVector c;
    c.values.resize(4);
    c.values << da - vehicle.accel_rate_max, -da - vehicle.accel_rate_max,
        dd - vehicle.steer_rate_max, -dd - vehicle.steer_rate_max;
    if (derivatives) {
      c.dx = Matrix::Zero(4, x.size());
      c.du = Matrix::Zero(4, u.size());
      c.du(0, off + kAccel) = 1.0;
      c.du(1, off + kAccel) = -1.0;
      c.du(2, off + kSteer) = 1.0;
      c.du(3, off + kSteer) = -1.0;
      c.du_prev = -c.du;
    }
    return c;
  };
  return block;
}

namespace detail {

inline TerminalVector boundary_terminal(int agent, const LateralBounds& bounds,
                                        const Vector& x, bool derivatives) {
  const int off = agent * kStateDim;
  TerminalVector c;
  c.values = boundary_values(x(off + kEy), x(off + kS), bounds);
  if (derivatives) {
    c.dx = Matrix::Zero(2, x.size());
    c.dx(0, off + kEy) = 1.0;
    c.dx(1, off + kEy) = -1.0;
    c.dx(1, off + kS) = bounds.lower_derivative(x(off + kS));
  }
  return c;
}

inline TerminalVector collision_terminal(int i, int j, double r_i, double r_j,
                                         const Vector& x, bool derivatives) {
  const Eigen::Vector2d p_i(x(i * kStateDim + kPx), x(i * kStateDim + kPy));
  const Eigen::Vector2d p_j(x(j * kStateDim + kPx), x(j * kStateDim + kPy));
  TerminalVector c;
  c.values = Vector::Constant(1, collision_value(p_i, p_j, r_i, r_j));
  if (derivatives) {
    const Eigen::Vector2d diff = p_i - p_j;
    c.dx = Matrix::Zero(1, x.size());
    c.dx(0, i * kStateDim + kPx) = -2.0 * diff.x();
    c.dx(0, i * kStateDim + kPy) = -2.0 * diff.y();
    c.dx(0, j * kStateDim + kPx) = 2.0 * diff.x();
    c.dx(0, j * kStateDim + kPy) = 2.0 * diff.y();
  }
  return c;
}

// Wraps a state-only constraint as a stage block that skips the fixed x_0.
inline StageConstraintBlock state_stage_block(std::string name, int count,
                                              TerminalConstraintFn fn) {
  StageConstraintBlock block;
  block.name = std::move(name);
  block.count = count;
  block.first_step = 1;
  block.eval = [fn = std::move(fn)](int, const Vector& x, const Vector& u,
                                    const Vector&, bool derivatives) {
    TerminalVector t = fn(x, derivatives);
    StageVector c;
    c.values = std::move(t.values);
    if (derivatives) {
      c.dx = std::move(t.dx);
      c.du = Matrix::Zero(c.values.size(), u.size());
      c.du_prev = Matrix::Zero(c.values.size(), u.size());
    }
    return c;
  };
  return block;
}

}  // namespace detail

/// Track limits for one agent, applied at steps 1..N (stage and terminal).
inline std::pair<StageConstraintBlock, TerminalConstraintBlock> boundary_blocks(
    int agent, const LateralBounds& bounds) {
  TerminalConstraintFn fn = [agent, bounds](const Vector& x, bool derivatives) {
    return detail::boundary_terminal(agent, bounds, x, derivatives);
  };
  const std::string name = "boundary_" + std::to_string(agent);
  return {detail::state_stage_block(name, 2, fn), TerminalConstraintBlock{name, 2, fn}};
}

/// Collision avoidance between agents i and j, applied at steps 1..N.
inline std::pair<StageConstraintBlock, TerminalConstraintBlock> collision_blocks(
    int i, int j, double r_i, double r_j) {
  TerminalConstraintFn fn = [=](const Vector& x, bool derivatives) {
    return detail::collision_terminal(i, j, r_i, r_j, x, derivatives);
  };
  const std::string name = "collision_" + std::to_string(i) + "_" + std::to_string(j);
  return {detail::state_stage_block(name, 1, fn), TerminalConstraintBlock{name, 1, fn}};
}

// ---------------------------------------------------------------------------
// Costs
// ---------------------------------------------------------------------------

struct CostWeights {
  Eigen::Vector2d input_weight{0.1, 0.1};  // diag(R)
  Eigen::Vector2d rate_weight{1.0, 1.0};   // diag(R_d)
  double progress = 10.0;                  // c_p
  double competition = 5.0;                // c_c
  /// Multiplies the arctan term; +1 keeps the printed sign convention.
  double competition_sign = 1.0;
  /// Optional tracking terms 1/2 w (e_y - ref)^2 and 1/2 w (v - ref)^2.
  double lane_weight = 0.0;
  double lane_ref = 0.0;
  double speed_weight = 0.0;
  double speed_ref = 0.0;
  /// 1/2 c_b (e_y^i - e_y^partner)^2 at every stage and the terminal step
  /// when `blocking_partner` >= 0.
  double blocking = 0.0;
  int blocking_partner = -1;
};

namespace detail {

// State-dependent part shared by stage and terminal costs.
inline double tracking_terms(int agent, const CostWeights& w, const Vector& x,
                             Vector* grad) {
  const int off = agent * kStateDim;
  double value = 0.0;
  if (w.lane_weight != 0.0) {
    const double e = x(off + kEy) - w.lane_ref;
    value += 0.5 * w.lane_weight * e * e;
    if (grad) (*grad)(off + kEy) += w.lane_weight * e;
  }
  if (w.speed_weight != 0.0) {
    const double e = x(off + kV) - w.speed_ref;
    value += 0.5 * w.speed_weight * e * e;
    if (grad) (*grad)(off + kV) += w.speed_weight * e;
  }
  if (w.blocking_partner >= 0 && w.blocking != 0.0) {
    const int poff = w.blocking_partner * kStateDim;
    const double e = x(off + kEy) - x(poff + kEy);
    value += 0.5 * w.blocking * e * e;
    if (grad) {
      (*grad)(off + kEy) += w.blocking * e;
      (*grad)(poff + kEy) -= w.blocking * e;
    }
  }
  return value;
}

}  // namespace detail

/// 1/2 u^T R u + 1/2 du^T R_d du (+ tracking and blocking terms).
inline StageCostFn racing_stage_cost(int agent, CostWeights w) {
  return [agent, w](int, const Vector& x, const Vector& u, const Vector& u_prev,
                    bool derivatives) {
    const int off = agent * kInputDim;
    const Eigen::Vector2d ui = u.segment<2>(off);
    const Eigen::Vector2d du = ui - u_prev.segment<2>(off);
    StageScalar l;
    l.value = 0.5 * ui.dot(w.input_weight.cwiseProduct(ui)) +
              0.5 * du.dot(w.rate_weight.cwiseProduct(du));
    Vector gx;
    if (derivatives) gx = Vector::Zero(x.size());
    l.value += detail::tracking_terms(agent, w, x, derivatives ? &gx : nullptr);
    if (derivatives) {
      l.dx = std::move(gx);
      l.du = Vector::Zero(u.size());
      l.du_prev = Vector::Zero(u.size());
      const Eigen::Vector2d rate_grad = w.rate_weight.cwiseProduct(du);
      l.du.segment<2>(off) = w.input_weight.cwiseProduct(ui) + rate_grad;
      l.du_prev.segment<2>(off) = -rate_grad;
    }
    return l;
  };
}

/// -c_p s_N^i + sign * c_c * sum_{j != i} atan(s_N^i - s_N^j) (+ tracking and
/// blocking terms).
inline TerminalCostFn racing_terminal_cost(int agent, int num_agents, CostWeights w) {
  return [agent, num_agents, w](const Vector& x, bool derivatives) {
    const double si = x(agent * kStateDim + kS);
    TerminalScalar l;
    Vector gx;
    if (derivatives) gx = Vector::Zero(x.size());
    l.value = -w.progress * si;
    if (derivatives) gx(agent * kStateDim + kS) -= w.progress;
    const double cc = w.competition_sign * w.competition;
    for (int j = 0; j < num_agents; ++j) {
      if (j == agent || cc == 0.0) continue;
      const double gap = si - x(j * kStateDim + kS);
      l.value += cc * std::atan(gap);
      if (derivatives) {
        const double slope = cc / (1.0 + gap * gap);
        gx(agent * kStateDim + kS) += slope;
        gx(j * kStateDim + kS) -= slope;
      }
    }
    l.value += detail::tracking_terms(agent, w, x, derivatives ? &gx : nullptr);
    if (derivatives) l.dx = std::move(gx);
    return l;
  };
}

}  // namespace dgsqp::scenarios
